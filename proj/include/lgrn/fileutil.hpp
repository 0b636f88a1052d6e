#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>

namespace lgrn {

/// Write through a sibling temp file and rename it over `path`, so readers
/// never observe a partially written file. Parent directories are created.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer, bool binary = false);

void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::string read_text(const std::filesystem::path& path);

/// Zero-padded sample id, e.g. 7 -> "00007".
std::string sample_id(int index);

}  // namespace lgrn
