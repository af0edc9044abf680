#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "honeykit/artifacts.hpp"
#include "honeykit/clock.hpp"
#include "honeykit/event.hpp"
#include "honeykit/net.hpp"
#include "honeykit/shell.hpp"
#include "honeykit/sink.hpp"
#include "honeykit/sshcrypto.hpp"

namespace honeykit {

// ---------------------------------------------------------------------------
// auth policy

struct CredentialPolicy {
    enum class Mode { deny_all, accept_list, accept_after_n };
    Mode mode = Mode::deny_all;
    std::set<std::pair<std::string, std::string>> accept_list;
    uint64_t n_threshold = 1; // accept_after_n: accept once an IP has failed this often
};

enum class AuthDecision { accept, reject };

// Total function; the caller logs the attempt with success = (decision == accept).
AuthDecision handle_auth(const LoginAttempt& attempt, const CredentialPolicy& policy,
                         uint64_t prior_failures_from_ip);

// ---------------------------------------------------------------------------
// transport

enum class SshErrorKind { timeout, protocol, closed };

struct SshError : std::runtime_error {
    SshErrorKind kind;
    SshError(SshErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// One SSH 2.0 binary-packet connection over a connected socket. Fixed
// algorithm suite: curve25519-sha256, ssh-ed25519 host keys, aes128-ctr and
// hmac-sha2-256 both directions, no compression.
class SshTransport {
  public:
    SshTransport(Socket sock, bool is_server, std::string local_version, uint32_t timeout_ms);

    // Sends our version line, reads the peer's; returns it without CRLF.
    std::string exchange_versions();
    // Key exchange. Servers pass their host key; clients pass nullptr and can
    // read the server's public host key afterwards.
    void run_kex(const Ed25519KeyPair* host_key);

    void send_packet(std::string_view payload);
    // Next non-IGNORE/DEBUG packet payload. A received DISCONNECT throws
    // SshError{closed}; timeouts throw SshError{timeout}.
    std::string recv_packet(uint32_t timeout_ms = 0);
    void send_disconnect(uint32_t reason, const std::string& description);

    const std::string& peer_version() const { return peer_version_; }
    const std::string& session_id() const { return session_id_; }
    const std::string& host_key_public() const { return host_key_public_; }
    uint64_t bytes_received() const { return rx_bytes_; }
    std::string first_bytes_hex(size_t cap = 64) const;
    int fd() const { return sock_.fd(); }
    void close() { sock_.close(); }

  private:
    Socket sock_;
    bool server_;
    std::string local_version_;
    std::string peer_version_;
    uint32_t timeout_ms_;
    std::string inbuf_;
    uint64_t rx_bytes_ = 0;
    std::string first_bytes_;
    uint32_t seq_in_ = 0, seq_out_ = 0;
    bool encrypted_ = false;
    std::optional<AesCtr128> enc_, dec_;
    std::string mac_out_, mac_in_;
    std::string session_id_;
    std::string host_key_public_; // server's raw ed25519 key, both sides

    std::string pending_head_; // decrypted packet head kept across timeouts

    std::string read_line(uint32_t timeout_ms);
    void fill_inbuf(size_t n, uint32_t timeout_ms);
    std::string read_exact(size_t n, uint32_t timeout_ms);
    std::string build_kexinit() const;
    std::string recv_raw_packet(uint32_t timeout_ms);
    void derive_keys(const std::string& k_mpint, const std::string& h);
};

// ---------------------------------------------------------------------------
// sensor

struct SshSensorConfig {
    std::string bind_address = "127.0.0.1";
    uint16_t port = 2222; // 0 = ephemeral (tests)
    std::string banner = "SSH-2.0-OpenSSH_5.1p1 Debian-5";
    std::string host_key_path;   // 32-byte seed file, created on first start
    std::string recordings_dir;  // .hpt files per session
    std::string sensor_name = "ssh-sensor";
    uint32_t max_sessions = 64;
    uint32_t auth_limit = 10;
    uint32_t idle_timeout_ms = 300000;
    bool test_mode = false;          // honor harness claim preambles
    const SeedImage* seed = nullptr; // default_seed() when null
    Fetcher fetcher;                 // http_fetch when empty
    ArtifactStore* artifacts = nullptr;
};

class SshSensor {
  public:
    SshSensor(SshSensorConfig cfg, CredentialPolicy policy, std::shared_ptr<EventSink> sink,
              Clock clock = system_clock_ms());
    ~SshSensor();

    void start(); // binds + spawns the accept loop; throws NetError on bind failure
    void stop();  // stops accepting, disconnects sessions, joins all threads

    uint16_t port() const { return bound_port_; }
    const Ed25519KeyPair& host_key() const { return host_key_; }
    uint64_t failures_from(const std::string& ip) const;

  private:
    SshSensorConfig cfg_;
    CredentialPolicy policy_;
    EventWriter writer_;
    SeedImage default_seed_;
    Ed25519KeyPair host_key_;
    Socket listener_;
    uint16_t bound_port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::mutex threads_mu_;
    std::vector<std::thread> session_threads_;
    std::atomic<uint32_t> active_{0};
    mutable std::mutex failures_mu_;
    std::map<std::string, uint64_t> failures_;
    std::mutex fds_mu_;
    std::set<int> session_fds_; // live transports, shut down on stop()

    void accept_loop();
    void report_session_crash(const std::string& peer_ip, const std::string& what);
    void handle_connection(Socket sock, const std::string& peer_ip, uint16_t peer_port);
    struct AuthResult {
        bool accepted = false;
        std::string username, password;
    };
    AuthResult run_userauth(SshTransport& t, const std::string& peer_ip);
    void run_session(SshTransport& t, const std::string& peer_ip, const AuthResult& auth,
                     uint32_t client_channel, uint32_t& emitted_events,
                     const std::string& exec_command);
};

// ---------------------------------------------------------------------------
// client (attacker simulator + tests)

struct SshClientConfig {
    std::string host = "127.0.0.1";
    uint16_t port = 2222;
    std::string banner = "SSH-2.0-OpenSSH_6.0p1 Debian-4+deb7u2";
    uint32_t timeout_ms = 8000;
    std::string claim_preamble; // harness source claim, sent before the version line
};

struct ExpectResult {
    std::string text;
    bool found = false;
};

class SshClient {
  public:
    explicit SshClient(SshClientConfig cfg);

    void connect(); // tcp + version exchange + kex
    // One password attempt; true on USERAUTH_SUCCESS. Throws SshError when
    // the server disconnects (e.g. auth limit reached).
    bool auth_password(const std::string& username, const std::string& password);
    void open_session(); // session channel + pty + shell
    // Runs a single command over an exec channel and returns its output.
    std::string exec(const std::string& command);
    void send_raw(std::string_view bytes);
    void send_line(const std::string& line); // bytes + CR
    ExpectResult read_until(const std::string& pattern, uint32_t timeout_ms);
    std::string drain(uint32_t quiet_ms); // read until the line goes quiet
    void send_window_change(uint32_t cols, uint32_t rows);
    bool session_closed() const { return session_closed_; }
    const std::string& server_version() const;
    const std::string& server_host_key() const;
    void close();

  private:
    SshClientConfig cfg_;
    std::unique_ptr<SshTransport> transport_;
    bool userauth_requested_ = false;
    bool session_open_ = false;
    bool session_closed_ = false;
    uint32_t server_channel_ = 0;
    std::string pending_;

    void request_userauth_service();
    uint32_t open_channel();
    bool channel_request(uint32_t channel, const std::string& type, std::string_view extra,
                         bool want_reply);
    // Feeds one packet into the session buffers; false on channel close.
    bool pump(uint32_t timeout_ms);
};

} // namespace honeykit
