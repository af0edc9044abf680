#include "honeykit/ssh.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sys/socket.h>

#include "honeykit/claim.hpp"
#include "honeykit/sshwire.hpp"
#include "honeykit/ttyrec.hpp"
#include "honeykit/util.hpp"

namespace fs = std::filesystem;

namespace honeykit {

using namespace sshwire;

namespace {

constexpr uint32_t kSlice = 200; // ms between liveness checks in blocking reads

int64_t steady_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string cap256(std::string_view s) { return std::string(s.substr(0, 256)); }

std::string to_crlf(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == '\n') out += "\r\n";
        else out += c;
    }
    return out;
}

Ed25519KeyPair load_or_create_host_key(const std::string& path) {
    if (path.empty()) return ed25519_generate();
    if (fs::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        std::string seed((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (seed.size() != 32)
            throw std::runtime_error("host key file " + path + " must hold a 32-byte seed");
        return ed25519_from_seed(seed);
    }
    auto key = ed25519_generate();
    if (auto parent = fs::path(path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(key.seed.data(), static_cast<std::streamsize>(key.seed.size()));
    out.flush();
    if (!out) throw std::runtime_error("cannot persist host key to " + path);
    fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write);
    return key;
}

} // namespace

SshSensor::SshSensor(SshSensorConfig cfg, CredentialPolicy policy,
                     std::shared_ptr<EventSink> sink, Clock clock)
    : cfg_(std::move(cfg)), policy_(std::move(policy)),
      writer_(std::move(sink), cfg_.sensor_name, std::move(clock)),
      default_seed_(default_seed()) {
    if (policy_.mode == CredentialPolicy::Mode::accept_list && policy_.accept_list.empty())
        throw std::invalid_argument("accept_list policy requires a non-empty list");
    if (policy_.n_threshold < 1) throw std::invalid_argument("n_threshold must be >= 1");
    if (cfg_.max_sessions < 1 || cfg_.auth_limit < 1)
        throw std::invalid_argument("sensor limits must be >= 1");
}

SshSensor::~SshSensor() { stop(); }

uint64_t SshSensor::failures_from(const std::string& ip) const {
    std::lock_guard lock(failures_mu_);
    auto it = failures_.find(ip);
    return it == failures_.end() ? 0 : it->second;
}

void SshSensor::start() {
    if (running_) return;
    host_key_ = load_or_create_host_key(cfg_.host_key_path);
    if (!cfg_.recordings_dir.empty()) fs::create_directories(cfg_.recordings_dir);
    listener_ = tcp_listen(cfg_.bind_address, cfg_.port);
    bound_port_ = local_port(listener_);
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void SshSensor::stop() {
    if (!running_.exchange(false)) {
        if (accept_thread_.joinable()) accept_thread_.join();
        return;
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    listener_.close();
    {
        std::lock_guard lock(fds_mu_);
        for (int fd : session_fds_)
            ::shutdown(fd, SHUT_RDWR);
    }
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(threads_mu_);
        workers.swap(session_threads_);
    }
    for (auto& t : workers)
        if (t.joinable()) t.join();
}

void SshSensor::report_session_crash(const std::string& peer_ip, const std::string& what) {
    try {
        SensorError err;
        err.message = "ssh session aborted for " + peer_ip;
        err.detail = what;
        writer_.write(EventKind::sensor_error, err);
    } catch (...) {
        // the sink itself is failing; nothing sane left to do
    }
}

void SshSensor::accept_loop() {
    while (running_) {
        std::string peer_ip;
        uint16_t peer_port = 0;
        auto sock = tcp_accept(listener_, &peer_ip, &peer_port, kSlice);
        if (!sock) continue;
        if (active_.load() >= cfg_.max_sessions) {
            ConnectionEvent ev;
            ev.remote_ip = peer_ip;
            ev.remote_port = peer_port;
            ev.local_port = bound_port_;
            ev.transport = TransportKind::tcp;
            ev.service_label = "ssh";
            ev.outcome = ConnOutcome::refused;
            writer_.write(EventKind::connection, ev);
            continue; // socket closes when it goes out of scope
        }
        active_++;
        std::lock_guard lock(threads_mu_);
        session_threads_.emplace_back(
            [this, s = std::move(*sock), peer_ip, peer_port]() mutable {
                try {
                    handle_connection(std::move(s), peer_ip, peer_port);
                } catch (const std::exception& e) {
                    report_session_crash(peer_ip, e.what());
                } catch (...) {
                    report_session_crash(peer_ip, "unknown exception");
                }
                active_--;
            });
    }
}

namespace {

// Channel bookkeeping shared by the pre- and post-shell phases.
struct ChannelState {
    bool open = false;
    uint32_t client_id = 0;
    uint32_t pty_cols = 0, pty_rows = 0;
};

} // namespace

SshSensor::AuthResult SshSensor::run_userauth(SshTransport& t, const std::string& peer_ip) {
    AuthResult auth;
    uint32_t attempts = 0;
    bool service_accepted = false;
    while (!auth.accepted) {
        std::string pkt = t.recv_packet(cfg_.idle_timeout_ms);
        uint8_t type = static_cast<uint8_t>(pkt[0]);
        if (type == SSH_MSG_SERVICE_REQUEST) {
            Reader r(std::string_view(pkt).substr(1));
            std::string service = r.string();
            if (service != "ssh-userauth")
                throw SshError(SshErrorKind::protocol, "unknown service " + service);
            std::string accept;
            put_u8(accept, SSH_MSG_SERVICE_ACCEPT);
            put_string(accept, service);
            t.send_packet(accept);
            service_accepted = true;
            continue;
        }
        if (type != SSH_MSG_USERAUTH_REQUEST || !service_accepted)
            throw SshError(SshErrorKind::protocol,
                           "unexpected message " + std::to_string(type) + " during auth");
        Reader r(std::string_view(pkt).substr(1));
        std::string username = r.string();
        std::string service = r.string();
        std::string method = r.string();
        if (service != "ssh-connection")
            throw SshError(SshErrorKind::protocol, "unknown auth service " + service);

        auto send_failure = [&] {
            std::string failure;
            put_u8(failure, SSH_MSG_USERAUTH_FAILURE);
            put_namelist(failure, {"password"});
            put_bool(failure, false);
            t.send_packet(failure);
        };

        if (method != "password") {
            send_failure(); // only password auth is offered
            continue;
        }
        r.boolean(); // password-change flag
        std::string password = r.string();
        attempts++;

        LoginAttempt a;
        a.remote_ip = peer_ip;
        a.username = cap256(username);
        a.password = cap256(password);
        a.client_banner = cap256(t.peer_version());
        uint64_t prior = failures_from(peer_ip);
        a.success = handle_auth(a, policy_, prior) == AuthDecision::accept;
        writer_.write(EventKind::login_attempt, a);

        if (a.success) {
            std::string ok;
            put_u8(ok, SSH_MSG_USERAUTH_SUCCESS);
            t.send_packet(ok);
            auth.accepted = true;
            auth.username = a.username;
            auth.password = a.password;
            break;
        }
        {
            std::lock_guard lock(failures_mu_);
            failures_[peer_ip]++;
        }
        send_failure();
        if (attempts >= cfg_.auth_limit) {
            t.send_disconnect(2, "Too many authentication failures");
            throw SshError(SshErrorKind::closed, "auth limit reached");
        }
    }
    return auth;
}

void SshSensor::handle_connection(Socket sock, const std::string& socket_peer_ip,
                                  uint16_t peer_port) {
    std::string peer_ip = socket_peer_ip;
    if (cfg_.test_mode) {
        std::string claimed = read_claim(sock.fd(), 2000);
        if (!claimed.empty()) peer_ip = claimed;
    }
    SshTransport t(std::move(sock), true, cfg_.banner, cfg_.idle_timeout_ms);
    ConnOutcome outcome = ConnOutcome::completed;
    std::string error_detail;

    {
        std::lock_guard lock(fds_mu_);
        session_fds_.insert(t.fd());
    }
    struct FdGuard {
        SshSensor* self;
        int fd;
        ~FdGuard() {
            std::lock_guard lock(self->fds_mu_);
            self->session_fds_.erase(fd);
        }
    } fd_guard{this, t.fd()};

    try {
        t.exchange_versions();
        t.run_kex(&host_key_);
        AuthResult auth = run_userauth(t, peer_ip);

        // connection layer: wait for a session channel and a shell/exec request
        ChannelState chan;
        bool done = false;
        while (!done) {
            std::string pkt = t.recv_packet(cfg_.idle_timeout_ms);
            uint8_t type = static_cast<uint8_t>(pkt[0]);
            Reader r(std::string_view(pkt).substr(1));
            switch (type) {
            case SSH_MSG_GLOBAL_REQUEST: {
                r.string();
                if (r.boolean()) {
                    std::string resp;
                    put_u8(resp, SSH_MSG_REQUEST_FAILURE);
                    t.send_packet(resp);
                }
                break;
            }
            case SSH_MSG_CHANNEL_OPEN: {
                std::string ctype = r.string();
                uint32_t client_id = r.u32();
                r.u32(); // initial window
                r.u32(); // max packet
                if (ctype != "session" || chan.open) {
                    std::string fail;
                    put_u8(fail, SSH_MSG_CHANNEL_OPEN_FAILURE);
                    put_u32(fail, client_id);
                    put_u32(fail, 3); // unknown channel type
                    put_string(fail, "only one session channel is available");
                    put_string(fail, "");
                    t.send_packet(fail);
                    break;
                }
                chan.open = true;
                chan.client_id = client_id;
                std::string ok;
                put_u8(ok, SSH_MSG_CHANNEL_OPEN_CONFIRMATION);
                put_u32(ok, client_id);
                put_u32(ok, 0);          // our channel id
                put_u32(ok, 1u << 21);   // initial window
                put_u32(ok, 32768);      // max packet
                t.send_packet(ok);
                break;
            }
            case SSH_MSG_CHANNEL_REQUEST: {
                r.u32(); // our channel id
                std::string req = r.string();
                bool want_reply = r.boolean();
                auto reply = [&](bool ok) {
                    if (!want_reply) return;
                    std::string resp;
                    put_u8(resp, ok ? SSH_MSG_CHANNEL_SUCCESS : SSH_MSG_CHANNEL_FAILURE);
                    put_u32(resp, chan.client_id);
                    t.send_packet(resp);
                };
                if (!chan.open) throw SshError(SshErrorKind::protocol, "request before open");
                if (req == "pty-req") {
                    r.string(); // TERM
                    chan.pty_cols = r.u32();
                    chan.pty_rows = r.u32();
                    reply(true);
                } else if (req == "env") {
                    reply(true);
                } else if (req == "shell") {
                    reply(true);
                    uint32_t emitted = 0;
                    run_session(t, peer_ip, auth, chan.client_id, emitted, "");
                    done = true;
                } else if (req == "exec") {
                    std::string command = r.string();
                    reply(true);
                    uint32_t emitted = 0;
                    run_session(t, peer_ip, auth, chan.client_id, emitted, command);
                    done = true;
                } else {
                    reply(false);
                }
                break;
            }
            case SSH_MSG_CHANNEL_EOF:
            case SSH_MSG_CHANNEL_CLOSE:
                done = true;
                break;
            default:
                throw SshError(SshErrorKind::protocol,
                               "unexpected message " + std::to_string(type));
            }
        }
    } catch (const SshError& e) {
        switch (e.kind) {
        case SshErrorKind::timeout:
            outcome = ConnOutcome::timeout;
            t.send_disconnect(11, "Idle timeout");
            break;
        case SshErrorKind::protocol:
            outcome = ConnOutcome::protocol_error;
            error_detail = e.what();
            t.send_disconnect(2, "Protocol error");
            break;
        case SshErrorKind::closed:
            break; // attacker went away: a completed contact
        }
    } catch (const std::exception& e) {
        outcome = ConnOutcome::protocol_error;
        error_detail = e.what();
    }

    if (!error_detail.empty()) {
        SensorError err;
        err.message = "ssh connection error from " + peer_ip;
        err.detail = error_detail;
        writer_.write(EventKind::sensor_error, err);
    }
    ConnectionEvent ev;
    ev.remote_ip = peer_ip;
    ev.remote_port = peer_port;
    ev.local_port = bound_port_;
    ev.transport = TransportKind::tcp;
    ev.service_label = "ssh";
    ev.outcome = outcome;
    ev.bytes_captured = t.bytes_received();
    ev.payload_hex = t.first_bytes_hex();
    writer_.write(EventKind::connection, ev);
}

void SshSensor::run_session(SshTransport& t, const std::string& peer_ip, const AuthResult& auth,
                            uint32_t client_channel, uint32_t& emitted_events,
                            const std::string& exec_command) {
    int64_t started = writer_.now_ms();
    std::string sid = writer_.new_id();
    std::string tty_path;
    std::optional<TtyRecorder> rec;
    if (!cfg_.recordings_dir.empty()) {
        tty_path = (fs::path(cfg_.recordings_dir) / (sid + ".hpt")).string();
        rec.emplace(tty_path, sid);
    }
    int64_t last_tty = writer_.now_ms();

    ShellSession ses;
    ses.session_id = sid;
    ses.remote_ip = peer_ip;
    ses.username = auth.username;
    ses.password = auth.password;
    ses.started_at_ms = started;
    ses.ended_at_ms = started;
    ses.tty_ref = tty_path;
    writer_.write(EventKind::session_start, ses);

    uint64_t session_events = 0;
    auto emit_event = [&](SessionEventKind kind, SessionPayload payload) {
        SessionEvent e;
        e.session_id = sid;
        int64_t now = writer_.now_ms();
        e.offset_ms = now > started ? static_cast<uint64_t>(now - started) : 0;
        e.kind = kind;
        e.payload = std::move(payload);
        writer_.write(EventKind::session_event, e);
        session_events++;
    };

    auto record = [&](TtyDirection dir, std::string_view bytes) {
        if (!rec || bytes.empty()) return;
        int64_t now = writer_.now_ms();
        uint32_t delta = now > last_tty ? static_cast<uint32_t>(now - last_tty) : 0;
        rec->append(delta, dir, bytes);
        last_tty = now;
    };
    auto send_tty = [&](std::string_view bytes) {
        if (bytes.empty()) return;
        std::string msg;
        put_u8(msg, SSH_MSG_CHANNEL_DATA);
        put_u32(msg, client_channel);
        put_string(msg, bytes);
        t.send_packet(msg);
        record(TtyDirection::output_to_client, bytes);
    };

    ShellConfig shell_cfg;
    shell_cfg.username = auth.username.empty() ? "root" : auth.username;
    shell_cfg.remote_ip = peer_ip;
    Fetcher fetch = cfg_.fetcher;
    if (!fetch) {
        uint64_t limit = shell_cfg.fetch_limit;
        fetch = [limit](const std::string& url) { return http_fetch(url, limit); };
    }
    Shell shell(cfg_.seed ? *cfg_.seed : default_seed_, shell_cfg, [this] {
        return writer_.now_ms();
    }, fetch, cfg_.artifacts);

    auto run_line = [&](const std::string& line) {
        ExecResult res = shell.execute(line);
        std::string rendered = to_crlf(res.output);
        send_tty(rendered);
        for (auto& ev : res.events) {
            if (ev.kind == SessionEventKind::download) {
                const auto& dp = std::get<DownloadPayload>(ev.payload);
                DownloadRecord dr;
                dr.remote_ip = peer_ip;
                dr.session_id = sid;
                dr.sha256 = dp.sha256;
                dr.url = dp.url;
                dr.size_bytes = dp.size_bytes;
                dr.truncated = dp.truncated;
                writer_.write(EventKind::download, dr);
            }
            emit_event(ev.kind, std::move(ev.payload));
        }
        if (!rendered.empty()) emit_event(SessionEventKind::output, OutputPayload{rendered.size()});
        return res.exit_requested;
    };

    bool clean_exit = false;
    try {
        if (!exec_command.empty()) {
            record(TtyDirection::input_from_client, exec_command + "\r");
            run_line(exec_command);
            clean_exit = true;
        } else {
            send_tty(shell.prompt());
            std::string linebuf;
            int64_t last_activity = steady_ms();
            bool session_over = false;
            while (!session_over) {
                if (!running_) break;
                std::string pkt;
                try {
                    pkt = t.recv_packet(kSlice);
                } catch (const SshError& e) {
                    if (e.kind != SshErrorKind::timeout) throw;
                    if (steady_ms() - last_activity >
                        static_cast<int64_t>(cfg_.idle_timeout_ms))
                        throw;
                    continue;
                }
                last_activity = steady_ms();
                uint8_t type = static_cast<uint8_t>(pkt[0]);
                Reader r(std::string_view(pkt).substr(1));
                if (type == SSH_MSG_CHANNEL_DATA) {
                    r.u32();
                    std::string data = r.string();
                    record(TtyDirection::input_from_client, data);
                    {
                        std::string adjust; // hand the window right back
                        put_u8(adjust, SSH_MSG_CHANNEL_WINDOW_ADJUST);
                        put_u32(adjust, client_channel);
                        put_u32(adjust, static_cast<uint32_t>(data.size()));
                        t.send_packet(adjust);
                    }
                    for (char c : data) {
                        if (c == '\r' || c == '\n') {
                            send_tty("\r\n");
                            bool exit_req = run_line(linebuf);
                            linebuf.clear();
                            if (exit_req) {
                                clean_exit = true;
                                session_over = true;
                                break;
                            }
                            send_tty(shell.prompt());
                        } else if (c == 0x7f || c == 0x08) {
                            if (!linebuf.empty()) {
                                linebuf.pop_back();
                                send_tty("\b \b");
                            }
                        } else if (c == 0x03) { // ^C
                            linebuf.clear();
                            send_tty("^C\r\n");
                            send_tty(shell.prompt());
                        } else if (c == 0x04) { // ^D on an empty line ends the session
                            if (linebuf.empty()) {
                                clean_exit = true;
                                session_over = true;
                                break;
                            }
                        } else if (static_cast<unsigned char>(c) >= 0x20 || c == '\t') {
                            linebuf += c;
                            send_tty(std::string_view(&c, 1));
                        }
                    }
                } else if (type == SSH_MSG_CHANNEL_REQUEST) {
                    r.u32();
                    std::string req = r.string();
                    bool want_reply = r.boolean();
                    if (req == "window-change") {
                        uint32_t cols = r.u32();
                        uint32_t rows = r.u32();
                        emit_event(SessionEventKind::resize, ResizePayload{cols, rows});
                    }
                    if (want_reply) {
                        std::string resp;
                        put_u8(resp, SSH_MSG_CHANNEL_FAILURE);
                        put_u32(resp, client_channel);
                        t.send_packet(resp);
                    }
                } else if (type == SSH_MSG_CHANNEL_WINDOW_ADJUST) {
                    // we never send enough to care
                } else if (type == SSH_MSG_CHANNEL_EOF || type == SSH_MSG_CHANNEL_CLOSE) {
                    session_over = true;
                } else {
                    throw SshError(SshErrorKind::protocol,
                                   "unexpected message " + std::to_string(type) +
                                       " during session");
                }
            }
        }
    } catch (...) {
        emit_event(SessionEventKind::disconnect, DisconnectPayload{});
        ses.ended_at_ms = writer_.now_ms();
        ses.event_count = session_events;
        writer_.write(EventKind::session_end, ses);
        emitted_events = static_cast<uint32_t>(session_events);
        throw;
    }

    emit_event(SessionEventKind::disconnect, DisconnectPayload{});
    ses.ended_at_ms = writer_.now_ms();
    ses.event_count = session_events;
    writer_.write(EventKind::session_end, ses);
    emitted_events = static_cast<uint32_t>(session_events);

    if (clean_exit) {
        std::string status;
        put_u8(status, SSH_MSG_CHANNEL_REQUEST);
        put_u32(status, client_channel);
        put_string(status, "exit-status");
        put_bool(status, false);
        put_u32(status, 0);
        t.send_packet(status);
    }
    std::string eof;
    put_u8(eof, SSH_MSG_CHANNEL_EOF);
    put_u32(eof, client_channel);
    t.send_packet(eof);
    std::string close;
    put_u8(close, SSH_MSG_CHANNEL_CLOSE);
    put_u32(close, client_channel);
    t.send_packet(close);
    // drain until the client's CLOSE (or it hangs up)
    int64_t deadline = steady_ms() + 2000;
    while (steady_ms() < deadline) {
        try {
            std::string pkt = t.recv_packet(kSlice);
            if (!pkt.empty() && static_cast<uint8_t>(pkt[0]) == SSH_MSG_CHANNEL_CLOSE) break;
        } catch (const SshError& e) {
            if (e.kind == SshErrorKind::timeout) continue;
            break;
        }
    }
}

} // namespace honeykit
