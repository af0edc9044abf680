#include "honeykit/ulid.hpp"

#include <cstring>

namespace honeykit {

static const char kAlphabet[] = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";

static int alphabet_index(char c) {
    const char* p = std::strchr(kAlphabet, c);
    if (!p || c == '\0') return -1;
    return static_cast<int>(p - kAlphabet);
}

UlidGenerator::UlidGenerator(Clock clock) : clock_(std::move(clock)), rng_(std::random_device{}()) {}

UlidGenerator::UlidGenerator(Clock clock, uint64_t seed) : clock_(std::move(clock)), rng_(seed) {}

std::string UlidGenerator::next() {
    std::lock_guard<std::mutex> lock(mu_);
    int64_t now = clock_();
    if (now < 0) now = 0;
    if (now <= last_ms_) {
        // same (or rewound) millisecond: increment the 80-bit tail
        for (int i = 9; i >= 0; i--) {
            if (++last_rand_[i] != 0) break;
        }
    } else {
        last_ms_ = now;
        for (int i = 0; i < 10; i += 8) {
            uint64_t r = rng_();
            for (int j = 0; j < 8 && i + j < 10; j++) last_rand_[i + j] = static_cast<uint8_t>(r >> (j * 8));
        }
        // keep headroom so a burst of increments cannot carry into the time part
        last_rand_[0] &= 0x7f;
    }

    uint8_t bytes[16];
    uint64_t ms = static_cast<uint64_t>(last_ms_) & 0xffffffffffffULL;
    for (int i = 0; i < 6; i++) bytes[i] = static_cast<uint8_t>(ms >> (8 * (5 - i)));
    std::memcpy(bytes + 6, last_rand_, 10);

    // 26 chars: 10 for the 48-bit time, 16 for the 80-bit tail
    char out[27];
    out[26] = '\0';
    uint64_t t = ms;
    for (int i = 9; i >= 0; i--) {
        out[i] = kAlphabet[t & 0x1f];
        t >>= 5;
    }
    // tail: treat the 10 bytes as an 80-bit big-endian integer
    uint8_t tail[10];
    std::memcpy(tail, last_rand_, 10);
    for (int i = 25; i >= 10; i--) {
        out[i] = kAlphabet[tail[9] & 0x1f];
        // shift the 80-bit value right by 5
        uint8_t carry = 0;
        for (int j = 0; j < 10; j++) {
            uint8_t v = tail[j];
            tail[j] = static_cast<uint8_t>((v >> 5) | (carry << 3));
            carry = v & 0x1f;
        }
    }
    return std::string(out, 26);
}

bool UlidGenerator::is_valid(const std::string& id) {
    if (id.size() != 26) return false;
    for (char c : id) {
        if (alphabet_index(c) < 0) return false;
    }
    // 48-bit time means the first char carries at most 3 bits
    return alphabet_index(id[0]) <= 7;
}

int64_t UlidGenerator::timestamp_ms(const std::string& id) {
    if (id.size() < 10) return -1;
    uint64_t t = 0;
    for (int i = 0; i < 10; i++) {
        int v = alphabet_index(id[i]);
        if (v < 0) return -1;
        t = (t << 5) | static_cast<uint64_t>(v);
    }
    return static_cast<int64_t>(t);
}

} // namespace honeykit
