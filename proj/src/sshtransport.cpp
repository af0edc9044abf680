#include "honeykit/ssh.hpp"

#include <chrono>

#include "honeykit/sshwire.hpp"
#include "honeykit/util.hpp"

namespace honeykit {

using namespace sshwire;

namespace {

constexpr uint32_t kMaxPacket = 256 * 1024;
constexpr size_t kBlock = 16;       // aes128-ctr block
constexpr size_t kPlainBlock = 8;   // pre-NEWKEYS granularity
constexpr size_t kMacLen = 32;

const char* kKexAlg = "curve25519-sha256";
const char* kKexAlgLibssh = "curve25519-sha256@libssh.org"; // same algorithm, older name
const char* kHostKeyAlg = "ssh-ed25519";
const char* kCipher = "aes128-ctr";
const char* kMac = "hmac-sha2-256";

int64_t steady_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

bool contains(const std::vector<std::string>& names, const std::string& want) {
    for (const auto& n : names)
        if (n == want) return true;
    return false;
}

} // namespace

SshTransport::SshTransport(Socket sock, bool is_server, std::string local_version,
                           uint32_t timeout_ms)
    : sock_(std::move(sock)), server_(is_server), local_version_(std::move(local_version)),
      timeout_ms_(timeout_ms) {}

std::string SshTransport::first_bytes_hex(size_t cap) const {
    return hex_encode(std::string_view(first_bytes_).substr(0, cap));
}

// Fills inbuf_ to at least n bytes. Leaves any partial data buffered on
// timeout so a later retry resumes cleanly mid-packet.
void SshTransport::fill_inbuf(size_t n, uint32_t timeout_ms) {
    int64_t deadline = steady_ms() + timeout_ms;
    while (inbuf_.size() < n) {
        int64_t left = deadline - steady_ms();
        if (left <= 0) throw SshError(SshErrorKind::timeout, "read timeout");
        char buf[16384];
        auto got = recv_some(sock_.fd(), buf, sizeof(buf), static_cast<uint32_t>(left));
        if (!got) continue; // recheck the deadline
        if (*got == 0) throw SshError(SshErrorKind::closed, "connection closed");
        rx_bytes_ += *got;
        if (first_bytes_.size() < 64)
            first_bytes_.append(buf, std::min<size_t>(*got, 64 - first_bytes_.size()));
        inbuf_.append(buf, *got);
    }
}

std::string SshTransport::read_exact(size_t n, uint32_t timeout_ms) {
    fill_inbuf(n, timeout_ms);
    std::string out = inbuf_.substr(0, n);
    inbuf_.erase(0, n);
    return out;
}

std::string SshTransport::read_line(uint32_t timeout_ms) {
    int64_t deadline = steady_ms() + timeout_ms;
    std::string line;
    for (;;) {
        auto nl = inbuf_.find('\n');
        if (nl != std::string::npos) {
            line = inbuf_.substr(0, nl);
            inbuf_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        if (inbuf_.size() > 4096)
            throw SshError(SshErrorKind::protocol, "version line too long");
        int64_t left = deadline - steady_ms();
        if (left <= 0) throw SshError(SshErrorKind::timeout, "version exchange timeout");
        char buf[4096];
        auto got = recv_some(sock_.fd(), buf, sizeof(buf), static_cast<uint32_t>(left));
        if (!got) continue;
        if (*got == 0) throw SshError(SshErrorKind::closed, "connection closed during version");
        rx_bytes_ += *got;
        if (first_bytes_.size() < 64) first_bytes_.append(buf, std::min<size_t>(*got, 64 - first_bytes_.size()));
        inbuf_.append(buf, *got);
    }
}

std::string SshTransport::exchange_versions() {
    if (!send_all(sock_.fd(), local_version_ + "\r\n"))
        throw SshError(SshErrorKind::closed, "failed to send version");
    // servers may send banner lines before their version string
    for (int i = 0; i < 16; i++) {
        std::string line = read_line(timeout_ms_);
        if (line.rfind("SSH-", 0) == 0) {
            if (line.rfind("SSH-2.0-", 0) != 0 && line.rfind("SSH-1.99-", 0) != 0)
                throw SshError(SshErrorKind::protocol, "unsupported protocol version: " + line);
            peer_version_ = line.substr(0, 255);
            return peer_version_;
        }
        if (server_) // clients must lead with their version line
            throw SshError(SshErrorKind::protocol, "expected SSH version line");
    }
    throw SshError(SshErrorKind::protocol, "no SSH version line");
}

std::string SshTransport::build_kexinit() const {
    std::string p;
    put_u8(p, SSH_MSG_KEXINIT);
    p += random_bytes_crypto(16);
    put_namelist(p, {kKexAlg, kKexAlgLibssh});
    put_namelist(p, {kHostKeyAlg});
    put_namelist(p, {kCipher});
    put_namelist(p, {kCipher});
    put_namelist(p, {kMac});
    put_namelist(p, {kMac});
    put_namelist(p, {"none"});
    put_namelist(p, {"none"});
    put_namelist(p, {});
    put_namelist(p, {});
    put_bool(p, false);
    put_u32(p, 0);
    return p;
}

void SshTransport::run_kex(const Ed25519KeyPair* host_key) {
    if (server_ != (host_key != nullptr))
        throw SshError(SshErrorKind::protocol, "host key presence must match role");

    std::string my_kexinit = build_kexinit();
    send_packet(my_kexinit);
    std::string peer_kexinit = recv_packet();
    if (peer_kexinit.empty() || static_cast<uint8_t>(peer_kexinit[0]) != SSH_MSG_KEXINIT)
        throw SshError(SshErrorKind::protocol, "expected KEXINIT");
    {
        Reader r(std::string_view(peer_kexinit).substr(1));
        r.skip(16); // cookie
        auto kex = r.namelist();
        auto hostkeys = r.namelist();
        auto enc_c2s = r.namelist();
        auto enc_s2c = r.namelist();
        auto mac_c2s = r.namelist();
        auto mac_s2c = r.namelist();
        if (!(contains(kex, kKexAlg) || contains(kex, kKexAlgLibssh)) ||
            !contains(hostkeys, kHostKeyAlg) || !contains(enc_c2s, kCipher) ||
            !contains(enc_s2c, kCipher) || !contains(mac_c2s, kMac) || !contains(mac_s2c, kMac))
            throw SshError(SshErrorKind::protocol, "no common algorithms");
    }

    const std::string& v_c = server_ ? peer_version_ : local_version_;
    const std::string& v_s = server_ ? local_version_ : peer_version_;
    const std::string& i_c = server_ ? peer_kexinit : my_kexinit;
    const std::string& i_s = server_ ? my_kexinit : peer_kexinit;

    std::string k_mpint, h;
    if (server_) {
        std::string init = recv_packet();
        if (init.empty() || static_cast<uint8_t>(init[0]) != SSH_MSG_KEX_ECDH_INIT)
            throw SshError(SshErrorKind::protocol, "expected KEX_ECDH_INIT");
        Reader r(std::string_view(init).substr(1));
        std::string q_c = r.string();
        auto eph = x25519_generate();
        std::string secret;
        try {
            secret = x25519_shared_secret(eph.private_key, q_c);
        } catch (const std::runtime_error& e) {
            throw SshError(SshErrorKind::protocol, e.what());
        }
        std::string k_s;
        put_string(k_s, kHostKeyAlg);
        put_string(k_s, host_key->public_key);
        host_key_public_ = host_key->public_key;

        put_mpint(k_mpint, secret);
        std::string hash_input;
        put_string(hash_input, v_c);
        put_string(hash_input, v_s);
        put_string(hash_input, i_c);
        put_string(hash_input, i_s);
        put_string(hash_input, k_s);
        put_string(hash_input, q_c);
        put_string(hash_input, eph.public_key);
        hash_input += k_mpint;
        h = sha256_raw(hash_input);

        std::string sig_blob;
        put_string(sig_blob, kHostKeyAlg);
        put_string(sig_blob, ed25519_sign(host_key->seed, h));

        std::string reply;
        put_u8(reply, SSH_MSG_KEX_ECDH_REPLY);
        put_string(reply, k_s);
        put_string(reply, eph.public_key);
        put_string(reply, sig_blob);
        send_packet(reply);
    } else {
        auto eph = x25519_generate();
        std::string init;
        put_u8(init, SSH_MSG_KEX_ECDH_INIT);
        put_string(init, eph.public_key);
        send_packet(init);

        std::string reply = recv_packet();
        if (reply.empty() || static_cast<uint8_t>(reply[0]) != SSH_MSG_KEX_ECDH_REPLY)
            throw SshError(SshErrorKind::protocol, "expected KEX_ECDH_REPLY");
        Reader r(std::string_view(reply).substr(1));
        std::string k_s = r.string();
        std::string q_s = r.string();
        std::string sig_blob = r.string();

        Reader ks(k_s);
        if (ks.string() != kHostKeyAlg)
            throw SshError(SshErrorKind::protocol, "unexpected host key type");
        host_key_public_ = ks.string();

        std::string secret;
        try {
            secret = x25519_shared_secret(eph.private_key, q_s);
        } catch (const std::runtime_error& e) {
            throw SshError(SshErrorKind::protocol, e.what());
        }
        put_mpint(k_mpint, secret);
        std::string hash_input;
        put_string(hash_input, v_c);
        put_string(hash_input, v_s);
        put_string(hash_input, i_c);
        put_string(hash_input, i_s);
        put_string(hash_input, k_s);
        put_string(hash_input, eph.public_key);
        put_string(hash_input, q_s);
        hash_input += k_mpint;
        h = sha256_raw(hash_input);

        Reader sr(sig_blob);
        if (sr.string() != kHostKeyAlg)
            throw SshError(SshErrorKind::protocol, "unexpected signature type");
        if (!ed25519_verify(host_key_public_, h, sr.string()))
            throw SshError(SshErrorKind::protocol, "host key signature verification failed");
    }

    if (session_id_.empty()) session_id_ = h;

    std::string newkeys;
    put_u8(newkeys, SSH_MSG_NEWKEYS);
    send_packet(newkeys);
    std::string peer_newkeys = recv_packet();
    if (peer_newkeys.size() != 1 || static_cast<uint8_t>(peer_newkeys[0]) != SSH_MSG_NEWKEYS)
        throw SshError(SshErrorKind::protocol, "expected NEWKEYS");

    derive_keys(k_mpint, h);
    encrypted_ = true;
}

void SshTransport::derive_keys(const std::string& k_mpint, const std::string& h) {
    auto derive = [&](char letter, size_t len) {
        std::string key = sha256_raw(k_mpint + h + std::string(1, letter) + session_id_);
        while (key.size() < len) key += sha256_raw(k_mpint + h + key);
        key.resize(len);
        return key;
    };
    std::string iv_c2s = derive('A', 16);
    std::string iv_s2c = derive('B', 16);
    std::string key_c2s = derive('C', 16);
    std::string key_s2c = derive('D', 16);
    std::string mac_c2s = derive('E', 32);
    std::string mac_s2c = derive('F', 32);
    if (server_) {
        dec_.emplace(key_c2s, iv_c2s);
        enc_.emplace(key_s2c, iv_s2c);
        mac_in_ = mac_c2s;
        mac_out_ = mac_s2c;
    } else {
        enc_.emplace(key_c2s, iv_c2s);
        dec_.emplace(key_s2c, iv_s2c);
        mac_in_ = mac_s2c;
        mac_out_ = mac_c2s;
    }
}

void SshTransport::send_packet(std::string_view payload) {
    size_t block = encrypted_ ? kBlock : kPlainBlock;
    size_t pad = block - ((4 + 1 + payload.size()) % block);
    if (pad < 4) pad += block;
    std::string pkt;
    put_u32(pkt, static_cast<uint32_t>(1 + payload.size() + pad));
    put_u8(pkt, static_cast<uint8_t>(pad));
    pkt.append(payload);
    pkt += random_bytes_crypto(pad);

    std::string wire;
    if (encrypted_) {
        std::string seq;
        put_u32(seq, seq_out_);
        std::string mac = hmac_sha256(mac_out_, seq + pkt);
        enc_->crypt(pkt.data(), pkt.size());
        wire = pkt + mac;
    } else {
        wire = pkt;
    }
    seq_out_++;
    if (!send_all(sock_.fd(), wire)) throw SshError(SshErrorKind::closed, "send failed");
}

std::string SshTransport::recv_raw_packet(uint32_t timeout_ms) {
    uint32_t budget = timeout_ms ? timeout_ms : timeout_ms_;
    if (!encrypted_) {
        if (pending_head_.empty()) pending_head_ = read_exact(4, budget);
        Reader r(pending_head_);
        uint32_t len = r.u32();
        if (len < 2 || len > kMaxPacket)
            throw SshError(SshErrorKind::protocol, "bad packet length");
        std::string rest = read_exact(len, budget); // timeout keeps pending_head_
        pending_head_.clear();
        uint8_t pad = static_cast<uint8_t>(rest[0]);
        if (pad + 1u > len) throw SshError(SshErrorKind::protocol, "bad padding length");
        seq_in_++;
        return rest.substr(1, len - 1 - pad);
    }
    if (pending_head_.empty()) {
        std::string first = read_exact(kBlock, budget);
        dec_->crypt(first.data(), first.size()); // CTR state advances exactly once
        pending_head_ = first;
    }
    Reader r(pending_head_);
    uint32_t len = r.u32();
    if (len < 2 || len > kMaxPacket)
        throw SshError(SshErrorKind::protocol, "bad packet length");
    size_t total = 4 + len;
    if (total % kBlock != 0) throw SshError(SshErrorKind::protocol, "unaligned packet");
    std::string rest = read_exact(total - kBlock + kMacLen, budget);
    std::string plain = pending_head_;
    pending_head_.clear();
    std::string mac_wire = rest.substr(rest.size() - kMacLen);
    rest.resize(rest.size() - kMacLen);
    dec_->crypt(rest.data(), rest.size());
    plain += rest;
    std::string seq;
    put_u32(seq, seq_in_);
    if (hmac_sha256(mac_in_, seq + plain) != mac_wire)
        throw SshError(SshErrorKind::protocol, "MAC verification failed");
    seq_in_++;
    uint8_t pad = static_cast<uint8_t>(plain[4]);
    if (pad + 1u > len) throw SshError(SshErrorKind::protocol, "bad padding length");
    return plain.substr(5, len - 1 - pad);
}

std::string SshTransport::recv_packet(uint32_t timeout_ms) {
    for (;;) {
        std::string payload = recv_raw_packet(timeout_ms);
        if (payload.empty()) throw SshError(SshErrorKind::protocol, "empty packet");
        uint8_t type = static_cast<uint8_t>(payload[0]);
        if (type == SSH_MSG_IGNORE || type == SSH_MSG_DEBUG) continue;
        if (type == SSH_MSG_DISCONNECT) {
            std::string desc = "disconnect";
            try {
                Reader r(std::string_view(payload).substr(1));
                r.u32();
                desc = r.string();
            } catch (const std::runtime_error&) {
            }
            throw SshError(SshErrorKind::closed, "peer disconnected: " + desc);
        }
        return payload;
    }
}

void SshTransport::send_disconnect(uint32_t reason, const std::string& description) {
    std::string p;
    put_u8(p, SSH_MSG_DISCONNECT);
    put_u32(p, reason);
    put_string(p, description);
    put_string(p, "");
    try {
        send_packet(p);
    } catch (const SshError&) {
        // peer already gone
    }
}

AuthDecision handle_auth(const LoginAttempt& attempt, const CredentialPolicy& policy,
                         uint64_t prior_failures_from_ip) {
    switch (policy.mode) {
    case CredentialPolicy::Mode::deny_all:
        return AuthDecision::reject;
    case CredentialPolicy::Mode::accept_list:
        return policy.accept_list.count({attempt.username, attempt.password})
                   ? AuthDecision::accept
                   : AuthDecision::reject;
    case CredentialPolicy::Mode::accept_after_n:
        return prior_failures_from_ip >= policy.n_threshold ? AuthDecision::accept
                                                            : AuthDecision::reject;
    }
    return AuthDecision::reject;
}

} // namespace honeykit
