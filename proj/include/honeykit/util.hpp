#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace honeykit {

std::string hex_encode(std::string_view bytes);
std::optional<std::string> hex_decode(std::string_view hex);

bool is_valid_utf8(std::string_view s);

// Lowercase token of [a-z0-9_-]+, used for sensor names and service labels.
bool is_token(std::string_view s);

// Dotted-quad IPv4 helpers. parse_ipv4 rejects anything that is not a strict
// a.b.c.d with octets 0..255 (IPv6 literals included).
std::optional<uint32_t> parse_ipv4(std::string_view s);
std::string format_ipv4(uint32_t ip);

// Event timestamp format: YYYY-MM-DDTHH:MM:SS.mmmZ (UTC, millisecond).
std::string format_ts_ms(int64_t epoch_ms);
std::optional<int64_t> parse_ts_ms(std::string_view s);

// Byte strings stored in JSON logs: UTF-8 passes through, everything else
// (and anything that would collide with the prefix) becomes "hex:<hex>".
std::string bytes_to_json_string(std::string_view bytes);
std::optional<std::string> bytes_from_json_string(std::string_view s);

// Display rendering for report keys: printable ASCII and valid multi-byte
// UTF-8 pass through, other bytes become \xNN, backslash doubles. Injective.
std::string render_bytes(std::string_view bytes);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Minimal RFC-4180 CSV: fields split on commas, double-quoted fields may
// contain commas and "" escapes. Returns nullopt on unbalanced quotes.
std::optional<std::vector<std::string>> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

// Hour of day 0..23 for an epoch-ms timestamp shifted by a UTC offset in
// minutes. Euclidean, so pre-1970 timestamps still land in range.
int hour_of_day(int64_t epoch_ms, int utc_offset_min = 0);

} // namespace honeykit
