// Copyright the ltrkit authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ltr {

/// Renders a double as the shortest decimal string that round-trips exactly.
std::string render_double(double v);

/// Parses a double, rejecting trailing garbage. Throws std::runtime_error.
double parse_double(std::string_view text);

/// Parses a non-negative integer, rejecting trailing garbage.
std::int64_t parse_int(std::string_view text);

/// Splits on a single-character delimiter, keeping empty fields.
std::vector<std::string_view> split_fields(std::string_view line, char delim);

/// Splits on runs of spaces, dropping empty pieces.
std::vector<std::string_view> split_tokens(std::string_view text);

std::string join(std::span<const std::string> parts, char sep);

/// True when every character is an ASCII digit (and the string is non-empty).
bool all_digits(std::string_view s);

/// Orders qids numerically when both sides are plain digit strings,
/// lexicographically otherwise.
bool qid_less(std::string_view a, std::string_view b);

/// Writes `contents` to `path` via a temp file plus rename, so a failed run
/// never leaves a partial artifact behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace ltr
