#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "honeykit/event.hpp"

namespace honeykit {

// Scripted attacker steps, parsed from the line-based scenario DSL.
struct SimStep {
    enum class Kind {
        connect,
        auth,
        expect,
        send_line,
        wait,
        fetch_marker,
        disconnect,
        tcp_touch,
        udp_touch,
    };
    Kind kind = Kind::connect;
    std::string a, b;    // auth: user/pass; expect: pattern; send_line: text;
                         // fetch_marker: url; touches: payload hex in b
    uint32_t number = 0; // expect/wait: ms; touches: logical port
    bool fatal = false;  // expect only: abort the scenario on mismatch
};

struct Scenario {
    std::string name;
    uint64_t seed = 0;
    std::string claimed_ip; // requires test mode on both ends
    std::vector<SimStep> steps;
};

// Throws std::invalid_argument with "line N:" context on syntax errors and
// ordering violations (auth before connect, send_line before auth).
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

// Where the simulator finds the sensors. Logical ports from scenarios are
// remapped to the physically bound ones (ephemeral test ports, privileged
// port remaps in deployments).
struct SimTargets {
    std::string host = "127.0.0.1";
    uint16_t ssh_port = 0;
    std::map<uint16_t, uint16_t> tcp_remap;
    std::map<uint16_t, uint16_t> udp_remap;
    bool test_mode = false;
    uint32_t connect_timeout_ms = 5000;
};

struct StepResult {
    SimStep::Kind kind = SimStep::Kind::connect;
    bool ok = false;
    std::string detail;
};

struct ScenarioResult {
    std::string name;
    bool ok = false; // every step ok
    std::vector<StepResult> steps;
    std::string transcript; // bytes read back from the shell
    int64_t wall_ms = 0;
};

ScenarioResult run_scenario(const Scenario& s, const SimTargets& targets);

// JSON rendering for the simulate subcommand (stable key order).
std::string scenario_result_json(const ScenarioResult& r);

// Mixed background load. Each contact draws a slot from the weighted mix:
// a port slot is one tcp/udp touch, the ssh slot (port 0) is one failed
// credential attempt from the rotating list.
struct LoadSlot {
    uint16_t port = 0; // 0 = ssh credential attempt
    TransportKind transport = TransportKind::tcp;
    double weight = 0;
};

struct LoadProfile {
    double rate_per_sec = 10; // <= 200
    double duration_sec = 5;  // <= 120
    std::vector<LoadSlot> mix;
    std::vector<std::pair<std::string, std::string>> credentials;
    bool pace = true;        // false: as fast as possible, same total count
    bool claim_ips = false;  // synthesize per-contact source ips (test mode)
};

struct LoadReport {
    uint64_t planned = 0;
    uint64_t made = 0;
    uint64_t failed = 0; // connect errors; planned == made + failed
    std::map<uint16_t, uint64_t> per_port;
    int64_t wall_ms = 0;
};

// Deterministic for a fixed (profile, seed): the sequence of (slot, claimed
// ip, credential) draws never depends on timing.
LoadReport generate_load(const LoadProfile& profile, const SimTargets& targets, uint64_t seed);

// The exact slot-index sequence generate_load will execute, exposed so the
// weighted sampler can be validated without opening sockets.
std::vector<size_t> plan_mix(const LoadProfile& profile, uint64_t seed);

std::string load_report_json(const LoadReport& r);

} // namespace honeykit
