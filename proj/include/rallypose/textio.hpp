#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rallypose {

// Shortest decimal form that parses back to the same double ("10", "0.98").
std::string format_number(double v);
std::string format_number(std::int64_t v);

// "[a,b,c]" using format_number for each element.
std::string format_array(std::span<const double> values);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

// Splits on '\n'; a trailing newline does not produce an empty final line.
std::vector<std::string_view> split_lines(std::string_view text);

} // namespace rallypose
