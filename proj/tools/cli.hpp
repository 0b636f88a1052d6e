#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lgrn::cli {

/// Entry point of the lgrn tool. Returns the process exit code:
/// 0 success, 1 usage error, 2 data error, 3 numeric failure in training.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const std::vector<std::string>& subcommands();

}  // namespace lgrn::cli
