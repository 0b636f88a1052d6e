#pragma once

#include <stdexcept>
#include <string>

namespace lgrn {

/// Process exit codes shared by every command.
enum class ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Bad arguments or configuration values.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, malformed, or inconsistent input data (files, shapes).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse failure with the offending file and 1-based line.
class ParseError : public DataError {
 public:
  ParseError(const std::string& path, int line, const std::string& what)
      : DataError(path + ":" + std::to_string(line) + ": " + what), path_(path), line_(line) {}
  const std::string& path() const { return path_; }
  int line() const { return line_; }

 private:
  std::string path_;
  int line_;
};

/// Non-finite values during optimization.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lgrn
