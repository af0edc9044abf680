#include "honeykit/ssh.hpp"

#include <chrono>

#include "honeykit/sshwire.hpp"

namespace honeykit {

using namespace sshwire;

namespace {

int64_t steady_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

} // namespace

SshClient::SshClient(SshClientConfig cfg) : cfg_(std::move(cfg)) {}

void SshClient::connect() {
    Socket sock = tcp_connect(cfg_.host, cfg_.port, cfg_.timeout_ms);
    if (!cfg_.claim_preamble.empty() && !send_all(sock.fd(), cfg_.claim_preamble))
        throw SshError(SshErrorKind::closed, "failed to send claim preamble");
    transport_ = std::make_unique<SshTransport>(std::move(sock), false, cfg_.banner,
                                                cfg_.timeout_ms);
    transport_->exchange_versions();
    transport_->run_kex(nullptr);
}

const std::string& SshClient::server_version() const {
    static const std::string empty;
    return transport_ ? transport_->peer_version() : empty;
}

const std::string& SshClient::server_host_key() const {
    static const std::string empty;
    return transport_ ? transport_->host_key_public() : empty;
}

void SshClient::close() {
    if (transport_) transport_->close();
}

void SshClient::request_userauth_service() {
    if (userauth_requested_) return;
    std::string req;
    put_u8(req, SSH_MSG_SERVICE_REQUEST);
    put_string(req, "ssh-userauth");
    transport_->send_packet(req);
    std::string pkt = transport_->recv_packet(cfg_.timeout_ms);
    if (static_cast<uint8_t>(pkt[0]) != SSH_MSG_SERVICE_ACCEPT)
        throw SshError(SshErrorKind::protocol, "service request rejected");
    userauth_requested_ = true;
}

bool SshClient::auth_password(const std::string& username, const std::string& password) {
    request_userauth_service();
    std::string req;
    put_u8(req, SSH_MSG_USERAUTH_REQUEST);
    put_string(req, username);
    put_string(req, "ssh-connection");
    put_string(req, "password");
    put_bool(req, false);
    put_string(req, password);
    transport_->send_packet(req);
    for (;;) {
        std::string pkt = transport_->recv_packet(cfg_.timeout_ms);
        uint8_t type = static_cast<uint8_t>(pkt[0]);
        if (type == SSH_MSG_USERAUTH_SUCCESS) return true;
        if (type == SSH_MSG_USERAUTH_FAILURE) return false;
        if (type == SSH_MSG_USERAUTH_BANNER) continue;
        throw SshError(SshErrorKind::protocol,
                       "unexpected auth reply " + std::to_string(type));
    }
}

uint32_t SshClient::open_channel() {
    std::string req;
    put_u8(req, SSH_MSG_CHANNEL_OPEN);
    put_string(req, "session");
    put_u32(req, 0);        // our channel id
    put_u32(req, 1u << 21); // window
    put_u32(req, 32768);    // max packet
    transport_->send_packet(req);
    std::string pkt = transport_->recv_packet(cfg_.timeout_ms);
    uint8_t type = static_cast<uint8_t>(pkt[0]);
    Reader r(std::string_view(pkt).substr(1));
    if (type == SSH_MSG_CHANNEL_OPEN_FAILURE) {
        r.u32();
        r.u32();
        throw SshError(SshErrorKind::protocol, "channel open failed: " + r.string());
    }
    if (type != SSH_MSG_CHANNEL_OPEN_CONFIRMATION)
        throw SshError(SshErrorKind::protocol,
                       "unexpected channel reply " + std::to_string(type));
    r.u32(); // our id echoed back
    return r.u32();
}

bool SshClient::channel_request(uint32_t channel, const std::string& type,
                                std::string_view extra, bool want_reply) {
    std::string req;
    put_u8(req, SSH_MSG_CHANNEL_REQUEST);
    put_u32(req, channel);
    put_string(req, type);
    put_bool(req, want_reply);
    req.append(extra);
    transport_->send_packet(req);
    if (!want_reply) return true;
    for (;;) {
        std::string pkt = transport_->recv_packet(cfg_.timeout_ms);
        uint8_t t = static_cast<uint8_t>(pkt[0]);
        if (t == SSH_MSG_CHANNEL_SUCCESS) return true;
        if (t == SSH_MSG_CHANNEL_FAILURE) return false;
        // data racing ahead of the reply (e.g. the prompt) gets buffered
        if (t == SSH_MSG_CHANNEL_DATA) {
            Reader r(std::string_view(pkt).substr(1));
            r.u32();
            pending_ += r.string();
            continue;
        }
        if (t == SSH_MSG_CHANNEL_WINDOW_ADJUST) continue;
        throw SshError(SshErrorKind::protocol,
                       "unexpected request reply " + std::to_string(t));
    }
}

void SshClient::open_session() {
    server_channel_ = open_channel();
    session_open_ = true;
    session_closed_ = false;
    std::string pty;
    put_string(pty, "xterm");
    put_u32(pty, 80);
    put_u32(pty, 24);
    put_u32(pty, 0);
    put_u32(pty, 0);
    put_string(pty, ""); // terminal modes
    if (!channel_request(server_channel_, "pty-req", pty, true))
        throw SshError(SshErrorKind::protocol, "pty request refused");
    if (!channel_request(server_channel_, "shell", "", true))
        throw SshError(SshErrorKind::protocol, "shell request refused");
}

void SshClient::send_raw(std::string_view bytes) {
    std::string msg;
    put_u8(msg, SSH_MSG_CHANNEL_DATA);
    put_u32(msg, server_channel_);
    put_string(msg, bytes);
    transport_->send_packet(msg);
}

void SshClient::send_line(const std::string& line) { send_raw(line + "\r"); }

bool SshClient::pump(uint32_t timeout_ms) {
    std::string pkt = transport_->recv_packet(timeout_ms);
    uint8_t type = static_cast<uint8_t>(pkt[0]);
    Reader r(std::string_view(pkt).substr(1));
    switch (type) {
    case SSH_MSG_CHANNEL_DATA: {
        r.u32();
        pending_ += r.string();
        return true;
    }
    case SSH_MSG_CHANNEL_EXTENDED_DATA: {
        r.u32();
        r.u32();
        pending_ += r.string();
        return true;
    }
    case SSH_MSG_CHANNEL_WINDOW_ADJUST:
    case SSH_MSG_CHANNEL_SUCCESS:
    case SSH_MSG_CHANNEL_FAILURE:
        return true;
    case SSH_MSG_CHANNEL_REQUEST: // exit-status and friends
        return true;
    case SSH_MSG_CHANNEL_EOF:
        return true;
    case SSH_MSG_CHANNEL_CLOSE: {
        if (!session_closed_) {
            session_closed_ = true;
            std::string msg;
            put_u8(msg, SSH_MSG_CHANNEL_CLOSE);
            put_u32(msg, server_channel_);
            try {
                transport_->send_packet(msg);
            } catch (const SshError&) {
            }
        }
        return false;
    }
    default:
        throw SshError(SshErrorKind::protocol,
                       "unexpected session message " + std::to_string(type));
    }
}

ExpectResult SshClient::read_until(const std::string& pattern, uint32_t timeout_ms) {
    int64_t deadline = steady_ms() + timeout_ms;
    for (;;) {
        if (pending_.find(pattern) != std::string::npos) {
            size_t end = pending_.find(pattern) + pattern.size();
            ExpectResult res{pending_.substr(0, end), true};
            pending_.erase(0, end);
            return res;
        }
        if (session_closed_) return {std::exchange(pending_, {}), false};
        int64_t left = deadline - steady_ms();
        if (left <= 0) return {std::exchange(pending_, {}), false};
        try {
            if (!pump(static_cast<uint32_t>(std::min<int64_t>(left, 250)))) continue;
        } catch (const SshError& e) {
            if (e.kind == SshErrorKind::timeout) continue;
            session_closed_ = true;
            return {std::exchange(pending_, {}), false};
        }
    }
}

std::string SshClient::drain(uint32_t quiet_ms) {
    std::string out = std::exchange(pending_, {});
    for (;;) {
        if (session_closed_) break;
        try {
            if (!pump(quiet_ms)) break;
        } catch (const SshError& e) {
            if (e.kind == SshErrorKind::timeout) break;
            session_closed_ = true;
            break;
        }
        out += std::exchange(pending_, {});
    }
    out += std::exchange(pending_, {});
    return out;
}

void SshClient::send_window_change(uint32_t cols, uint32_t rows) {
    std::string extra;
    put_u32(extra, cols);
    put_u32(extra, rows);
    put_u32(extra, 0);
    put_u32(extra, 0);
    channel_request(server_channel_, "window-change", extra, false);
}

std::string SshClient::exec(const std::string& command) {
    uint32_t chan = open_channel();
    server_channel_ = chan;
    session_open_ = true;
    session_closed_ = false;
    std::string extra;
    put_string(extra, command);
    if (!channel_request(chan, "exec", extra, true))
        throw SshError(SshErrorKind::protocol, "exec request refused");
    int64_t deadline = steady_ms() + cfg_.timeout_ms;
    while (!session_closed_ && steady_ms() < deadline) {
        try {
            if (!pump(250)) break;
        } catch (const SshError& e) {
            if (e.kind == SshErrorKind::timeout) continue;
            session_closed_ = true;
            break;
        }
    }
    return std::exchange(pending_, {});
}

} // namespace honeykit
