#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "honeykit/clock.hpp"
#include "honeykit/event.hpp"
#include "honeykit/net.hpp"
#include "honeykit/sink.hpp"

namespace honeykit {

// One listening post. local_port is the logical port recorded in events;
// bind_port is the physical one (deployments remap privileged ports, tests
// bind ephemerally with 0). Unset means bind the logical port itself.
struct PortProfile {
    uint16_t local_port = 0;
    TransportKind transport = TransportKind::tcp;
    std::string service_label;
    std::string banner;              // sent on accept when non-empty (tcp only)
    uint32_t capture_cap = 4096;     // bytes of payload kept per contact
    uint32_t read_window_ms = 10000; // how long to wait for payload after accept
    std::optional<uint16_t> bind_port;
};

// The classic malware-facing port set: 445/tcp smb, 139/tcp netbios,
// 135/tcp msrpc, 1433/tcp mssql, 21/tcp ftp, 80/tcp http, 69/udp tftp,
// 5060/udp sip.
std::vector<PortProfile> default_port_map();

struct SentinelConfig {
    std::string bind_address = "127.0.0.1";
    std::string sensor_name = "port-sentinel";
    bool test_mode = false; // honor harness claim preambles
};

// Low-interaction multi-port sensor: no protocol emulation, just accept,
// optional banner, capped byte capture, one ConnectionEvent per contact.
class PortSentinel {
  public:
    PortSentinel(SentinelConfig cfg, std::vector<PortProfile> profiles,
                 std::shared_ptr<EventSink> sink, Clock clock = system_clock_ms());
    ~PortSentinel();

    // Binds every profile; a failing port is disabled with a sensor_error
    // event while the rest keep running.
    void start();
    void stop();

    // Physical port bound for a logical (port, transport); 0 when disabled.
    uint16_t bound_port(uint16_t logical_port, TransportKind transport) const;
    size_t active_profiles() const;

  private:
    struct Listener {
        PortProfile profile;
        Socket sock;
        uint16_t physical = 0;
        std::thread thread;
    };

    SentinelConfig cfg_;
    std::vector<PortProfile> profiles_;
    EventWriter writer_;
    std::vector<std::unique_ptr<Listener>> listeners_;
    std::atomic<bool> running_{false};

    void tcp_loop(Listener& l);
    void udp_loop(Listener& l);
    void handle_tcp(Listener& l, Socket conn, const std::string& peer_ip, uint16_t peer_port);
};

} // namespace honeykit
