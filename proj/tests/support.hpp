#pragma once

// Shared helpers for the test suites: temp dirs, seeded random generators
// for envelopes and recordings, and a fixed fake clock.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "honeykit/clock.hpp"
#include "honeykit/event.hpp"
#include "honeykit/sha256.hpp"
#include "honeykit/ulid.hpp"
#include "honeykit/util.hpp"

namespace testsupport {

class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<uint64_t> counter{0};
        auto base = std::filesystem::temp_directory_path();
        path_ = base / ("honeykit-" + tag + "-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

class FakeClock {
  public:
    explicit FakeClock(int64_t start_ms = 1382673600000LL) : now_(start_ms) {} // 2013-10-25T04:00Z
    honeykit::Clock fn() {
        return [this] { return now_; };
    }
    void advance(int64_t ms) { now_ += ms; }
    void set(int64_t ms) { now_ = ms; }
    int64_t now() const { return now_; }

  private:
    int64_t now_;
};

// Arbitrary bytes including NUL, control chars and invalid UTF-8.
inline std::string random_bytes(std::mt19937_64& rng, size_t max_len) {
    std::uniform_int_distribution<size_t> len_dist(0, max_len);
    std::uniform_int_distribution<int> byte_dist(0, 255);
    std::string s(len_dist(rng), '\0');
    for (auto& c : s) c = static_cast<char>(byte_dist(rng));
    // sometimes force the awkward prefix that collides with the hex encoding
    if (!s.empty() && rng() % 8 == 0) s = "hex:" + s;
    return s.substr(0, max_len);
}

inline std::string random_ipv4(std::mt19937_64& rng) {
    std::uniform_int_distribution<uint32_t> d;
    return honeykit::format_ipv4(d(rng));
}

inline honeykit::EventEnvelope random_envelope(std::mt19937_64& rng,
                                               honeykit::UlidGenerator& ids) {
    using namespace honeykit;
    EventEnvelope e;
    e.id = ids.next();
    e.ts_ms = static_cast<int64_t>(rng() % 4102444800000ULL); // < year 2100
    e.sensor = (rng() % 2) ? "ssh0" : "sentinel-1";
    std::uniform_int_distribution<int> port_dist(1, 65535);

    switch (rng() % 7) {
    case 0: {
        e.kind = EventKind::connection;
        ConnectionEvent c;
        c.remote_ip = random_ipv4(rng);
        c.remote_port = static_cast<uint16_t>(port_dist(rng));
        c.local_port = static_cast<uint16_t>(port_dist(rng));
        c.transport = (rng() % 2) ? TransportKind::tcp : TransportKind::udp;
        c.service_label = (rng() % 2) ? "smb" : "tftp";
        c.outcome = static_cast<ConnOutcome>(rng() % 4);
        std::string payload = random_bytes(rng, 64);
        c.payload_hex = hex_encode(payload);
        c.bytes_captured = payload.size();
        e.body = c;
        break;
    }
    case 1: {
        e.kind = EventKind::login_attempt;
        LoginAttempt l;
        l.remote_ip = random_ipv4(rng);
        l.username = random_bytes(rng, 256);
        l.password = random_bytes(rng, 256);
        l.client_banner = random_bytes(rng, 256);
        l.success = rng() % 2;
        e.body = l;
        break;
    }
    case 2:
    case 3: {
        e.kind = (rng() % 2) ? EventKind::session_start : EventKind::session_end;
        ShellSession s;
        s.session_id = ids.next();
        s.remote_ip = random_ipv4(rng);
        s.username = random_bytes(rng, 256);
        s.password = random_bytes(rng, 256);
        s.started_at_ms = static_cast<int64_t>(rng() % 4102444800000ULL);
        s.ended_at_ms = s.started_at_ms + static_cast<int64_t>(rng() % 1000000);
        s.tty_ref = "recordings/" + s.session_id + ".hpt";
        s.event_count = rng() % 500;
        e.body = s;
        break;
    }
    case 4: {
        e.kind = EventKind::session_event;
        SessionEvent ev;
        ev.session_id = ids.next();
        ev.offset_ms = rng() % 100000;
        switch (rng() % 5) {
        case 0:
            ev.kind = SessionEventKind::command;
            ev.payload = CommandPayload{random_bytes(rng, 200)};
            break;
        case 1:
            ev.kind = SessionEventKind::output;
            ev.payload = OutputPayload{rng() % 100000};
            break;
        case 2: {
            ev.kind = SessionEventKind::download;
            DownloadPayload d;
            d.sha256 = sha256_hex(random_bytes(rng, 16));
            d.url = "http://198.51.100.7/x.bin";
            d.size_bytes = rng() % 100000;
            d.truncated = rng() % 2;
            ev.payload = d;
            break;
        }
        case 3:
            ev.kind = SessionEventKind::resize;
            ev.payload = ResizePayload{static_cast<uint32_t>(rng() % 500),
                                       static_cast<uint32_t>(rng() % 200)};
            break;
        default:
            ev.kind = SessionEventKind::disconnect;
            ev.payload = DisconnectPayload{};
            break;
        }
        e.body = ev;
        break;
    }
    case 5: {
        e.kind = EventKind::download;
        DownloadRecord d;
        d.remote_ip = random_ipv4(rng);
        d.session_id = ids.next();
        d.sha256 = sha256_hex(random_bytes(rng, 16));
        d.url = "http://203.0.113.9/payload";
        d.size_bytes = rng() % 1000000;
        d.truncated = rng() % 2;
        e.body = d;
        break;
    }
    default: {
        e.kind = EventKind::sensor_error;
        SensorError se;
        se.message = "bind failed";
        se.detail = "port " + std::to_string(port_dist(rng));
        e.body = se;
        break;
    }
    }
    return e;
}

} // namespace testsupport
