#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace efcil {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

/// printf-style fixed formatting, always in the "C" locale.
std::string format_fixed(double value, int decimals);

std::vector<std::string_view> split_fields(std::string_view line, char sep);
std::string_view trim(std::string_view text);

/// Parses a whole field as a double; false on trailing garbage or empty input.
bool parse_double(std::string_view text, double& out);
bool parse_int64(std::string_view text, long long& out);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace efcil
