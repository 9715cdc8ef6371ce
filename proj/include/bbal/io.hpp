#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bbal::io {

/// Shortest-safe round-trip text for a double: 17 significant digits, '%g' style.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<std::uint64_t> parse_uint(std::string_view text);

/// Splits one CSV record on commas. No quoting support; none of our formats need it.
std::vector<std::string_view> split_fields(std::string_view line);

/// Reads a whole text file. Throws InputError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Splits text into lines on LF; a trailing CR on a line is dropped.
std::vector<std::string_view> split_lines(std::string_view text);

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so readers never see a partially written file.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace bbal::io
