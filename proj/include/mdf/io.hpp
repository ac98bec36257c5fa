#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mdf::io {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over the target, so readers
// never observe a half-written file.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

// Minimal CSV support for this project's flat numeric tables: no quoting,
// no embedded commas in fields.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace mdf::io
