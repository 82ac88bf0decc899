#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bishop {

/// Shortest decimal text that parses back to exactly v.
std::string format_real(double v);

/// Splits on sep; an empty input yields one empty field.
std::vector<std::string_view> split(std::string_view line, char sep);

/// Throws ValidationError when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
/// Throws ValidationError when the file cannot be written.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace bishop
