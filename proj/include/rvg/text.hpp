#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rvg::text {

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// Fixed-point with `digits` decimals (report tables).
std::string format_fixed(double v, int digits);

/// Strict full-token parse; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view token);
std::optional<long long> parse_int(std::string_view token);

std::vector<std::string_view> split(std::string_view s, char sep);

/// Reads "key=value" and returns value if the key matches.
std::optional<std::string_view> key_value(std::string_view token, std::string_view key);

}  // namespace rvg::text
