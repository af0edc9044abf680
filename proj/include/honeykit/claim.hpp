#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace honeykit {

// Harness-only source spoofing: all simulator traffic originates on
// loopback, so scenarios may claim a source address via a one-line preamble
// ("\0HPSIM1 <ip>\n") that sensors honor only in test mode. The NUL marker
// can never collide with a real protocol's first byte here (SSH versions and
// the covered plaintext services all start with printable ASCII).
inline constexpr std::string_view kClaimPrefix{"\x00HPSIM1 ", 8};

std::string make_claim_preamble(const std::string& ip);

// Strips a claim preamble off the front of data; returns the claimed ip or
// "" when none/invalid. data is modified only on a valid claim.
std::string strip_claim(std::string& data);

// Consumes a claim preamble directly from a socket before any protocol
// bytes are read (the ssh path). Returns "" without consuming anything when
// the first byte is not the marker or nothing arrives in the window.
std::string read_claim(int fd, uint32_t timeout_ms);

} // namespace honeykit
