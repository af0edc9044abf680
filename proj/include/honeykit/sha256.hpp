#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>

namespace honeykit {

// SHA-256 as 64 lowercase hex chars.
std::string sha256_hex(std::string_view data);

// Streaming variant for files; throws std::runtime_error on stream failure.
std::string sha256_hex_stream(std::istream& in);

bool is_sha256_hex(std::string_view s);

} // namespace honeykit
