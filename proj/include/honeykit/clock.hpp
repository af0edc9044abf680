#pragma once

#include <chrono>
#include <cstdint>
#include <functional>

namespace honeykit {

// Wall clock returning milliseconds since the Unix epoch. Injectable so
// sessions and recordings are replayable in tests.
using Clock = std::function<int64_t()>;

inline int64_t system_now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

inline Clock system_clock_ms() {
    return [] { return system_now_ms(); };
}

} // namespace honeykit
