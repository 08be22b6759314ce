#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace chdzdt::io {

std::string read_file(const std::filesystem::path& path);

// Splits on LF, strips a trailing CR per line. A final empty line produced by
// a terminating newline is not returned.
std::vector<std::string> read_lines(const std::filesystem::path& path);
std::vector<std::string> split_lines(std::string_view text);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

}  // namespace chdzdt::io
