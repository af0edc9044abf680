#pragma once

#include <cstdint>
#include <mutex>
#include <random>
#include <string>

#include "honeykit/clock.hpp"

namespace honeykit {

// Event identifiers: 48-bit millisecond timestamp + 80 random bits in
// Crockford base32 (26 chars). Within one generator the random part is
// bumped monotonically when the clock does not advance, so ids generated
// in sequence sort in generation order.
class UlidGenerator {
  public:
    explicit UlidGenerator(Clock clock = system_clock_ms());
    UlidGenerator(Clock clock, uint64_t seed);

    std::string next();

    static bool is_valid(const std::string& id);
    // Millisecond timestamp embedded in the id, for diagnostics.
    static int64_t timestamp_ms(const std::string& id);

  private:
    std::mutex mu_;
    Clock clock_;
    std::mt19937_64 rng_;
    int64_t last_ms_ = -1;
    uint8_t last_rand_[10] = {};
};

} // namespace honeykit
