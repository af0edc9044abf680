#include "honeykit/sentinel.hpp"

#include <chrono>
#include <set>
#include <stdexcept>

#include "honeykit/claim.hpp"
#include "honeykit/util.hpp"

namespace honeykit {

namespace {

constexpr uint32_t kSlice = 250; // ms per poll so stop() stays responsive

int64_t steady_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

} // namespace

std::vector<PortProfile> default_port_map() {
    auto tcp = [](uint16_t port, std::string label) {
        PortProfile p;
        p.local_port = port;
        p.transport = TransportKind::tcp;
        p.service_label = std::move(label);
        return p;
    };
    auto udp = [](uint16_t port, std::string label) {
        PortProfile p;
        p.local_port = port;
        p.transport = TransportKind::udp;
        p.service_label = std::move(label);
        return p;
    };
    return {
        tcp(445, "smb"),   tcp(139, "netbios"), tcp(135, "msrpc"), tcp(1433, "mssql"),
        tcp(21, "ftp"),    tcp(80, "http"),     udp(69, "tftp"),   udp(5060, "sip"),
    };
}

PortSentinel::PortSentinel(SentinelConfig cfg, std::vector<PortProfile> profiles,
                           std::shared_ptr<EventSink> sink, Clock clock)
    : cfg_(std::move(cfg)), profiles_(std::move(profiles)),
      writer_(std::move(sink), cfg_.sensor_name, std::move(clock)) {
    std::set<std::pair<uint16_t, int>> seen;
    for (const auto& p : profiles_) {
        if (!is_token(p.service_label))
            throw std::invalid_argument("bad service label: " + p.service_label);
        if (p.local_port == 0) throw std::invalid_argument("profile needs a logical port");
        if (!seen.insert({p.local_port, static_cast<int>(p.transport)}).second)
            throw std::invalid_argument("duplicate profile for port " +
                                        std::to_string(p.local_port));
    }
}

PortSentinel::~PortSentinel() { stop(); }

void PortSentinel::start() {
    if (running_) return;
    running_ = true;
    for (const auto& profile : profiles_) {
        auto l = std::make_unique<Listener>();
        l->profile = profile;
        uint16_t bind_port = profile.bind_port.value_or(profile.local_port);
        try {
            l->sock = profile.transport == TransportKind::tcp
                          ? tcp_listen(cfg_.bind_address, bind_port, 128)
                          : udp_bind(cfg_.bind_address, bind_port);
            l->physical = local_port(l->sock);
        } catch (const NetError& e) {
            SensorError err;
            err.message = "cannot bind " + profile.service_label + " on port " +
                          std::to_string(bind_port);
            err.detail = e.what();
            writer_.write(EventKind::sensor_error, err);
            continue;
        }
        Listener& ref = *l;
        l->thread = std::thread([this, &ref] {
            if (ref.profile.transport == TransportKind::tcp) tcp_loop(ref);
            else udp_loop(ref);
        });
        listeners_.push_back(std::move(l));
    }
}

void PortSentinel::stop() {
    if (!running_.exchange(false)) return;
    for (auto& l : listeners_)
        if (l->thread.joinable()) l->thread.join();
    listeners_.clear();
}

uint16_t PortSentinel::bound_port(uint16_t logical_port, TransportKind transport) const {
    for (const auto& l : listeners_)
        if (l->profile.local_port == logical_port && l->profile.transport == transport)
            return l->physical;
    return 0;
}

size_t PortSentinel::active_profiles() const { return listeners_.size(); }

void PortSentinel::tcp_loop(Listener& l) {
    while (running_) {
        std::string peer_ip;
        uint16_t peer_port = 0;
        auto conn = tcp_accept(l.sock, &peer_ip, &peer_port, kSlice);
        if (!conn) continue;
        handle_tcp(l, std::move(*conn), peer_ip, peer_port);
    }
}

void PortSentinel::handle_tcp(Listener& l, Socket conn, const std::string& peer_ip,
                              uint16_t peer_port) {
    ConnectionEvent ev;
    ev.remote_ip = peer_ip;
    ev.remote_port = peer_port;
    ev.local_port = l.profile.local_port;
    ev.transport = TransportKind::tcp;
    ev.service_label = l.profile.service_label;
    ev.outcome = ConnOutcome::completed;

    if (!l.profile.banner.empty()) send_all(conn.fd(), l.profile.banner);

    std::string captured;
    int64_t deadline = steady_ms() + l.profile.read_window_ms;
    while (running_ && captured.size() < l.profile.capture_cap) {
        int64_t left = deadline - steady_ms();
        if (left <= 0) {
            ev.outcome = ConnOutcome::timeout; // peer stayed past the window
            break;
        }
        char buf[4096];
        size_t want = std::min(sizeof(buf),
                               static_cast<size_t>(l.profile.capture_cap) - captured.size());
        try {
            auto got = recv_some(conn.fd(), buf, want,
                                 static_cast<uint32_t>(std::min<int64_t>(left, kSlice)));
            if (!got) continue;
            if (*got == 0) break; // orderly close
            captured.append(buf, *got);
        } catch (const NetError&) {
            ev.outcome = ConnOutcome::protocol_error;
            break;
        }
    }
    if (cfg_.test_mode) {
        std::string claimed = strip_claim(captured);
        if (!claimed.empty()) ev.remote_ip = claimed;
    }
    ev.bytes_captured = captured.size();
    ev.payload_hex = hex_encode(captured);
    writer_.write(EventKind::connection, ev);
}

void PortSentinel::udp_loop(Listener& l) {
    while (running_) {
        std::string peer_ip;
        uint16_t peer_port = 0;
        auto datagram = udp_recv(l.sock.fd(), &peer_ip, &peer_port, l.profile.capture_cap, kSlice);
        if (!datagram) continue;
        ConnectionEvent ev;
        ev.remote_ip = peer_ip;
        if (cfg_.test_mode) {
            std::string claimed = strip_claim(*datagram);
            if (!claimed.empty()) ev.remote_ip = claimed;
        }
        ev.remote_port = peer_port;
        ev.local_port = l.profile.local_port;
        ev.transport = TransportKind::udp;
        ev.service_label = l.profile.service_label;
        ev.outcome = ConnOutcome::completed;
        ev.bytes_captured = datagram->size();
        ev.payload_hex = hex_encode(*datagram);
        writer_.write(EventKind::connection, ev);
    }
}

} // namespace honeykit
