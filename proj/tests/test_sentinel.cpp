#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <random>
#include <thread>

#include "honeykit/claim.hpp"
#include "honeykit/net.hpp"
#include "honeykit/sentinel.hpp"
#include "honeykit/sink.hpp"
#include "honeykit/util.hpp"
#include "support.hpp"

using namespace honeykit;

namespace {

template <typename Pred>
bool wait_for(Pred&& pred, int timeout_ms = 8000) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
        if (pred()) return true;
        if (std::chrono::steady_clock::now() >= deadline) return pred();
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
}

int64_t steady_now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

PortProfile profile(uint16_t logical, TransportKind transport, const std::string& label) {
    PortProfile p;
    p.local_port = logical;
    p.transport = transport;
    p.service_label = label;
    p.bind_port = 0; // ephemeral
    return p;
}

struct Fixture {
    std::shared_ptr<MemoryEventSink> sink = std::make_shared<MemoryEventSink>();
    std::unique_ptr<PortSentinel> sentinel;

    void start(std::vector<PortProfile> profiles, bool test_mode = false) {
        SentinelConfig cfg;
        cfg.test_mode = test_mode;
        sentinel = std::make_unique<PortSentinel>(cfg, std::move(profiles), sink);
        sentinel->start();
    }
    uint16_t port(uint16_t logical, TransportKind t = TransportKind::tcp) const {
        return sentinel->bound_port(logical, t);
    }
    std::vector<ConnectionEvent> connections() const {
        std::vector<ConnectionEvent> out;
        for (const auto& e : sink->events())
            if (e.kind == EventKind::connection) out.push_back(std::get<ConnectionEvent>(e.body));
        return out;
    }
    std::vector<SensorError> errors() const {
        std::vector<SensorError> out;
        for (const auto& e : sink->events())
            if (e.kind == EventKind::sensor_error) out.push_back(std::get<SensorError>(e.body));
        return out;
    }
    size_t connection_count() const { return connections().size(); }
};

void touch(uint16_t port, const std::string& payload = "") {
    Socket s = tcp_connect("127.0.0.1", port, 3000);
    if (!payload.empty()) REQUIRE(send_all(s.fd(), payload));
}

std::string read_some(int fd, uint32_t timeout_ms = 3000) {
    char buf[4096];
    auto got = recv_some(fd, buf, sizeof(buf), timeout_ms);
    REQUIRE(got.has_value());
    return std::string(buf, *got);
}

} // namespace

TEST_CASE("default port map matches the standard deployment") {
    auto map = default_port_map();
    REQUIRE(map.size() == 8);
    struct Row {
        uint16_t port;
        TransportKind transport;
        const char* label;
    };
    const Row want[] = {
        {445, TransportKind::tcp, "smb"}, {139, TransportKind::tcp, "netbios"},
        {135, TransportKind::tcp, "msrpc"}, {1433, TransportKind::tcp, "mssql"},
        {21, TransportKind::tcp, "ftp"},  {80, TransportKind::tcp, "http"},
        {69, TransportKind::udp, "tftp"}, {5060, TransportKind::udp, "sip"},
    };
    for (size_t i = 0; i < map.size(); i++) {
        CAPTURE(i);
        CHECK(map[i].local_port == want[i].port);
        CHECK(map[i].transport == want[i].transport);
        CHECK(map[i].service_label == want[i].label);
        CHECK(map[i].capture_cap == 4096);
        CHECK_FALSE(map[i].bind_port.has_value());
    }
}

TEST_CASE("profile validation rejects broken configs") {
    auto sink = std::make_shared<MemoryEventSink>();
    SentinelConfig cfg;

    auto dup = std::vector<PortProfile>{profile(445, TransportKind::tcp, "smb"),
                                        profile(445, TransportKind::tcp, "smb2")};
    CHECK_THROWS_AS(PortSentinel(cfg, dup, sink), std::invalid_argument);

    // same port on both transports is fine
    auto both = std::vector<PortProfile>{profile(53, TransportKind::tcp, "dns"),
                                         profile(53, TransportKind::udp, "dns")};
    CHECK_NOTHROW(PortSentinel(cfg, both, sink));

    auto bad_label = std::vector<PortProfile>{profile(445, TransportKind::tcp, "has space")};
    CHECK_THROWS_AS(PortSentinel(cfg, bad_label, sink), std::invalid_argument);

    auto no_port = std::vector<PortProfile>{profile(0, TransportKind::tcp, "smb")};
    CHECK_THROWS_AS(PortSentinel(cfg, no_port, sink), std::invalid_argument);
}

TEST_CASE("tcp contact produces exactly one connection event") {
    Fixture fx;
    fx.start({profile(445, TransportKind::tcp, "smb")});
    REQUIRE(fx.port(445) != 0);

    touch(fx.port(445), "hello");
    REQUIRE(wait_for([&] { return fx.connection_count() == 1; }));
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    REQUIRE(fx.connection_count() == 1); // no duplicate afterwards

    auto ev = fx.connections()[0];
    CHECK(ev.remote_ip == "127.0.0.1");
    CHECK(ev.remote_port != 0);
    CHECK(ev.local_port == 445);
    CHECK(ev.transport == TransportKind::tcp);
    CHECK(ev.service_label == "smb");
    CHECK(ev.outcome == ConnOutcome::completed);
    CHECK(ev.bytes_captured == 5);
    CHECK(ev.payload_hex == hex_encode("hello"));
    CHECK(fx.sink->events()[0].sensor == "port-sentinel");
}

TEST_CASE("banner is sent before capture begins") {
    auto p = profile(21, TransportKind::tcp, "ftp");
    p.banner = "220 svr04 FTP server ready\r\n";
    Fixture fx;
    fx.start({p});

    Socket s = tcp_connect("127.0.0.1", fx.port(21), 3000);
    CHECK(read_some(s.fd()) == "220 svr04 FTP server ready\r\n");
    REQUIRE(send_all(s.fd(), "USER anonymous\r\n"));
    s.close();

    REQUIRE(wait_for([&] { return fx.connection_count() == 1; }));
    auto ev = fx.connections()[0];
    CHECK(ev.payload_hex == hex_encode("USER anonymous\r\n"));
    CHECK(ev.outcome == ConnOutcome::completed);
}

TEST_CASE("capture stops at the profile cap") {
    Fixture fx;
    fx.start({profile(445, TransportKind::tcp, "smb")}); // default cap 4096

    std::string big(10000, 'A');
    Socket s = tcp_connect("127.0.0.1", fx.port(445), 3000);
    REQUIRE(send_all(s.fd(), big));

    REQUIRE(wait_for([&] { return fx.connection_count() == 1; }));
    auto ev = fx.connections()[0];
    CHECK(ev.bytes_captured == 4096);
    CHECK(ev.payload_hex.size() == 8192);
    CHECK(ev.payload_hex == hex_encode(big.substr(0, 4096)));
    CHECK(ev.outcome == ConnOutcome::completed);
}

TEST_CASE("sequential contacts are each recorded exactly once") {
    Fixture fx;
    fx.start({profile(445, TransportKind::tcp, "smb"), profile(135, TransportKind::tcp, "msrpc")});
    uint16_t p445 = fx.port(445);
    uint16_t p135 = fx.port(135);

    const size_t n = 1200;
    size_t on_445 = 0;
    for (size_t i = 0; i < n; i++) {
        bool to_445 = i % 2 == 0;
        if (to_445) on_445++;
        touch(to_445 ? p445 : p135, i % 3 == 0 ? "probe" : "");
        // keep the accept backlog shallow so nothing gets dropped
        if (i % 64 == 63) {
            size_t floor = i - 63;
            REQUIRE(wait_for([&] { return fx.connection_count() >= floor; }));
        }
    }
    REQUIRE(wait_for([&] { return fx.connection_count() >= n; }));
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    auto evs = fx.connections();
    REQUIRE(evs.size() == n);

    size_t seen_445 = 0, seen_135 = 0, with_payload = 0;
    for (const auto& ev : evs) {
        if (ev.local_port == 445) seen_445++;
        if (ev.local_port == 135) seen_135++;
        if (ev.bytes_captured > 0) with_payload++;
        CHECK(ev.outcome == ConnOutcome::completed);
    }
    CHECK(seen_445 == on_445);
    CHECK(seen_135 == n - on_445);
    CHECK(with_payload == n / 3);
}

TEST_CASE("udp datagram becomes one completed event") {
    Fixture fx;
    fx.start({profile(69, TransportKind::udp, "tftp")});
    uint16_t port = fx.port(69, TransportKind::udp);
    REQUIRE(port != 0);

    std::mt19937_64 rng(7);
    std::string payload = testsupport::random_bytes(rng, 100);
    payload.resize(100, 'x');

    Socket s = udp_bind("0.0.0.0", 0);
    REQUIRE(udp_send(s.fd(), "127.0.0.1", port, payload));

    REQUIRE(wait_for([&] { return fx.connection_count() == 1; }));
    auto ev = fx.connections()[0];
    CHECK(ev.transport == TransportKind::udp);
    CHECK(ev.local_port == 69);
    CHECK(ev.service_label == "tftp");
    CHECK(ev.outcome == ConnOutcome::completed);
    CHECK(ev.bytes_captured == 100);
    CHECK(ev.payload_hex == hex_encode(payload));
    CHECK(ev.remote_port == local_port(s));
}

TEST_CASE("a port that cannot bind is disabled, the rest keep going") {
    Socket blocker = tcp_listen("127.0.0.1", 0);
    uint16_t taken = local_port(blocker);

    auto smb = profile(445, TransportKind::tcp, "smb");
    smb.bind_port = taken; // collides with the blocker
    auto msrpc = profile(135, TransportKind::tcp, "msrpc");

    Fixture fx;
    fx.start({smb, msrpc});
    CHECK(fx.sentinel->active_profiles() == 1);
    CHECK(fx.port(445) == 0);
    REQUIRE(fx.port(135) != 0);

    auto errs = fx.errors();
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].message.find("smb") != std::string::npos);
    CHECK(errs[0].message.find(std::to_string(taken)) != std::string::npos);
    CHECK_FALSE(errs[0].detail.empty());

    touch(fx.port(135), "still alive");
    REQUIRE(wait_for([&] { return fx.connection_count() == 1; }));
    CHECK(fx.connections()[0].local_port == 135);
}

TEST_CASE("events carry the logical port, not the physical bind") {
    Fixture fx;
    fx.start({profile(1433, TransportKind::tcp, "mssql")});
    uint16_t physical = fx.port(1433);
    CHECK(physical != 1433); // ephemeral bind

    touch(physical, "\x12\x01\x00\x34");
    REQUIRE(wait_for([&] { return fx.connection_count() == 1; }));
    CHECK(fx.connections()[0].local_port == 1433);
}

TEST_CASE("claim preamble rewrites the source ip in test mode") {
    Fixture fx;
    fx.start({profile(445, TransportKind::tcp, "smb"), profile(69, TransportKind::udp, "tftp")},
             /*test_mode=*/true);

    SUBCASE("tcp") {
        touch(fx.port(445), make_claim_preamble("203.0.113.9") + "GET /");
        REQUIRE(wait_for([&] { return fx.connection_count() == 1; }));
        auto ev = fx.connections()[0];
        CHECK(ev.remote_ip == "203.0.113.9");
        CHECK(ev.bytes_captured == 5);
        CHECK(ev.payload_hex == hex_encode("GET /"));
    }
    SUBCASE("udp") {
        Socket s = udp_bind("0.0.0.0", 0);
        REQUIRE(udp_send(s.fd(), "127.0.0.1", fx.port(69, TransportKind::udp),
                         make_claim_preamble("198.51.100.77") + "probe"));
        REQUIRE(wait_for([&] { return fx.connection_count() == 1; }));
        auto ev = fx.connections()[0];
        CHECK(ev.remote_ip == "198.51.100.77");
        CHECK(ev.bytes_captured == 5);
        CHECK(ev.payload_hex == hex_encode("probe"));
    }
    SUBCASE("malformed claim is kept as payload") {
        std::string junk = std::string("\x00HPSIM1 not-an-ip\n", 18) + "rest";
        touch(fx.port(445), junk);
        REQUIRE(wait_for([&] { return fx.connection_count() == 1; }));
        auto ev = fx.connections()[0];
        CHECK(ev.remote_ip == "127.0.0.1");
        CHECK(ev.bytes_captured == junk.size());
    }
}

TEST_CASE("claim preamble is inert outside test mode") {
    Fixture fx;
    fx.start({profile(445, TransportKind::tcp, "smb")}, /*test_mode=*/false);

    std::string wire = make_claim_preamble("203.0.113.9") + "GET /";
    touch(fx.port(445), wire);
    REQUIRE(wait_for([&] { return fx.connection_count() == 1; }));
    auto ev = fx.connections()[0];
    CHECK(ev.remote_ip == "127.0.0.1");
    CHECK(ev.bytes_captured == wire.size()); // preamble counts as payload
    CHECK(ev.payload_hex == hex_encode(wire));
}

TEST_CASE("peer that overstays the read window is marked timed out") {
    auto p = profile(80, TransportKind::tcp, "http");
    p.read_window_ms = 300;
    Fixture fx;
    fx.start({p});

    Socket s = tcp_connect("127.0.0.1", fx.port(80), 3000);
    REQUIRE(send_all(s.fd(), "GET / HTTP/1.0\r\n"));
    // stay connected, never finish
    REQUIRE(wait_for([&] { return fx.connection_count() == 1; }, 4000));
    auto ev = fx.connections()[0];
    CHECK(ev.outcome == ConnOutcome::timeout);
    CHECK(ev.bytes_captured == 16);
}

TEST_CASE("stop returns promptly while a peer is mid-capture") {
    Fixture fx;
    fx.start({profile(445, TransportKind::tcp, "smb")}); // 10s read window

    Socket s = tcp_connect("127.0.0.1", fx.port(445), 3000);
    REQUIRE(send_all(s.fd(), "half"));
    std::this_thread::sleep_for(std::chrono::milliseconds(300)); // let the capture start
    REQUIRE(fx.connection_count() == 0); // still inside the read window

    int64_t t0 = steady_now_ms();
    fx.sentinel->stop();
    CHECK(steady_now_ms() - t0 < 1500);
    REQUIRE(fx.connection_count() == 1);
    CHECK(fx.connections()[0].bytes_captured == 4);
}

TEST_CASE("claim helpers round-trip and reject junk") {
    CHECK(make_claim_preamble("10.0.0.1") == std::string("\x00HPSIM1 10.0.0.1\n", 17));

    std::string ok = make_claim_preamble("192.0.2.55") + "tail";
    CHECK(strip_claim(ok) == "192.0.2.55");
    CHECK(ok == "tail");

    std::string plain = "SSH-2.0-OpenSSH_6.0\r\n";
    std::string before = plain;
    CHECK(strip_claim(plain).empty());
    CHECK(plain == before);

    std::string no_newline = std::string("\x00HPSIM1 192.0.2.1", 17);
    CHECK(strip_claim(no_newline).empty());
    CHECK(no_newline.size() == 17);

    std::string bad_ip = std::string("\x00HPSIM1 999.1.2.3\n", 18);
    CHECK(strip_claim(bad_ip).empty());
}
