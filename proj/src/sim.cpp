#include "honeykit/sim.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <sys/socket.h>

#include <nlohmann/json.hpp>

#include "honeykit/claim.hpp"
#include "honeykit/net.hpp"
#include "honeykit/ssh.hpp"
#include "honeykit/util.hpp"

namespace honeykit {

namespace {

[[noreturn]] void bad_line(size_t line, const std::string& what) {
    throw std::invalid_argument("line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> tokens_of(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

uint32_t parse_u32(const std::string& s, size_t line, const std::string& what) {
    try {
        size_t pos = 0;
        unsigned long v = std::stoul(s, &pos);
        if (pos != s.size() || v > 0xffffffffUL) throw std::out_of_range("");
        return static_cast<uint32_t>(v);
    } catch (const std::exception&) {
        bad_line(line, "bad " + what + " '" + s + "'");
    }
}

uint16_t parse_port(const std::string& s, size_t line) {
    uint32_t v = parse_u32(s, line, "port");
    if (v == 0 || v > 65535) bad_line(line, "port out of range '" + s + "'");
    return static_cast<uint16_t>(v);
}

// Quoted string with \" and \\ escapes; returns the rest of the line after it.
std::string parse_quoted(const std::string& rest, size_t line, std::string* tail) {
    size_t i = 0;
    while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t')) i++;
    if (i >= rest.size() || rest[i] != '"') bad_line(line, "expected quoted pattern");
    std::string out;
    for (i++; i < rest.size(); i++) {
        char c = rest[i];
        if (c == '\\' && i + 1 < rest.size()) {
            out.push_back(rest[++i]);
        } else if (c == '"') {
            *tail = rest.substr(i + 1);
            return out;
        } else {
            out.push_back(c);
        }
    }
    bad_line(line, "unterminated quote");
}

int64_t steady_now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

uint16_t remap(const std::map<uint16_t, uint16_t>& m, uint16_t logical) {
    auto it = m.find(logical);
    return it == m.end() ? logical : it->second;
}

// One low-interaction TCP contact: connect, optionally claim a source ip,
// send the payload, half-close, then drain so the sensor sees an orderly EOF
// and its queued banner is not lost to a reset.
void tcp_touch(const SimTargets& t, uint16_t logical, const std::string& payload,
               const std::string& claimed_ip, uint32_t timeout_ms) {
    Socket s = tcp_connect(t.host, remap(t.tcp_remap, logical), timeout_ms);
    std::string wire;
    if (!claimed_ip.empty()) wire += make_claim_preamble(claimed_ip);
    wire += payload;
    if (!wire.empty() && !send_all(s.fd(), wire)) throw NetError("send failed");
    ::shutdown(s.fd(), SHUT_WR);
    char buf[512];
    int64_t give_up = steady_now_ms() + 500;
    while (steady_now_ms() < give_up) {
        auto got = recv_some(s.fd(), buf, sizeof(buf), 100);
        if (got && *got == 0) break;
    }
}

void udp_touch(const SimTargets& t, uint16_t logical, const std::string& payload,
               const std::string& claimed_ip) {
    Socket s = udp_bind("0.0.0.0", 0);
    std::string wire;
    if (!claimed_ip.empty()) wire += make_claim_preamble(claimed_ip);
    wire += payload;
    if (!udp_send(s.fd(), t.host, remap(t.udp_remap, logical), wire))
        throw NetError("udp send failed");
}

double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

Scenario parse_scenario(std::string_view text) {
    Scenario sc;
    std::istringstream in{std::string(text)};
    std::string raw;
    size_t lineno = 0;
    bool connected = false;
    bool authed = false;
    while (std::getline(in, raw)) {
        lineno++;
        std::string line{trim(raw)};
        if (line.empty() || line[0] == '#') continue;
        auto toks = tokens_of(line);
        const std::string& verb = toks[0];

        if (verb == "name") {
            if (toks.size() != 2) bad_line(lineno, "name takes one token");
            sc.name = toks[1];
        } else if (verb == "seed") {
            if (toks.size() != 2) bad_line(lineno, "seed takes one number");
            sc.seed = std::stoull(toks[1]);
        } else if (verb == "claimed_ip") {
            if (toks.size() != 2 || !parse_ipv4(toks[1]))
                bad_line(lineno, "claimed_ip takes one ipv4 address");
            sc.claimed_ip = toks[1];
        } else if (verb == "connect") {
            if (connected) bad_line(lineno, "already connected");
            connected = true;
            authed = false;
            sc.steps.push_back({SimStep::Kind::connect, "", "", 0, false});
        } else if (verb == "auth") {
            if (!connected) bad_line(lineno, "auth before connect");
            if (toks.size() != 3) bad_line(lineno, "auth takes user and password");
            authed = true; // optimistic: later steps assume the session opened
            sc.steps.push_back({SimStep::Kind::auth, toks[1], toks[2], 0, false});
        } else if (verb == "expect") {
            if (!authed) bad_line(lineno, "expect before auth");
            std::string tail;
            std::string pattern = parse_quoted(line.substr(6), lineno, &tail);
            auto rest = tokens_of(tail);
            if (rest.empty() || rest.size() > 2) bad_line(lineno, "expect takes pattern, timeout, [fatal]");
            SimStep st{SimStep::Kind::expect, pattern, "", parse_u32(rest[0], lineno, "timeout"), false};
            if (rest.size() == 2) {
                if (rest[1] != "fatal") bad_line(lineno, "unknown flag '" + rest[1] + "'");
                st.fatal = true;
            }
            sc.steps.push_back(st);
        } else if (verb == "send_line") {
            if (!authed) bad_line(lineno, "send_line before auth");
            size_t at = line.find("send_line");
            std::string rest{trim(line.substr(at + 9))};
            sc.steps.push_back({SimStep::Kind::send_line, rest, "", 0, false});
        } else if (verb == "wait") {
            if (toks.size() != 2) bad_line(lineno, "wait takes milliseconds");
            sc.steps.push_back({SimStep::Kind::wait, "", "", parse_u32(toks[1], lineno, "wait"), false});
        } else if (verb == "fetch_marker") {
            if (!authed) bad_line(lineno, "fetch_marker before auth");
            if (toks.size() != 2) bad_line(lineno, "fetch_marker takes a url");
            sc.steps.push_back({SimStep::Kind::fetch_marker, toks[1], "", 0, false});
        } else if (verb == "disconnect") {
            if (!connected) bad_line(lineno, "disconnect before connect");
            connected = false;
            authed = false;
            sc.steps.push_back({SimStep::Kind::disconnect, "", "", 0, false});
        } else if (verb == "tcp_touch" || verb == "udp_touch") {
            if (toks.size() < 2 || toks.size() > 3) bad_line(lineno, verb + " takes port, [payload hex]");
            SimStep st;
            st.kind = verb == "tcp_touch" ? SimStep::Kind::tcp_touch : SimStep::Kind::udp_touch;
            st.number = parse_port(toks[1], lineno);
            if (toks.size() == 3) {
                if (!hex_decode(toks[2])) bad_line(lineno, "bad payload hex");
                st.b = toks[2];
            }
            sc.steps.push_back(st);
        } else {
            bad_line(lineno, "unknown directive '" + verb + "'");
        }
    }
    if (sc.name.empty()) throw std::invalid_argument("scenario has no name directive");
    if (sc.steps.empty()) throw std::invalid_argument("scenario has no steps");
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open scenario: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

ScenarioResult run_scenario(const Scenario& s, const SimTargets& targets) {
    ScenarioResult res;
    res.name = s.name;
    int64_t t0 = steady_now_ms();

    if (!s.claimed_ip.empty() && !targets.test_mode) {
        res.steps.push_back({SimStep::Kind::connect, false, "claimed_ip requires test mode"});
        res.ok = false;
        res.wall_ms = steady_now_ms() - t0;
        return res;
    }

    std::unique_ptr<SshClient> cli;
    bool session = false;
    bool aborted = false;

    auto kind_name = [](SimStep::Kind k) {
        switch (k) {
        case SimStep::Kind::connect: return "connect";
        case SimStep::Kind::auth: return "auth";
        case SimStep::Kind::expect: return "expect";
        case SimStep::Kind::send_line: return "send_line";
        case SimStep::Kind::wait: return "wait";
        case SimStep::Kind::fetch_marker: return "fetch_marker";
        case SimStep::Kind::disconnect: return "disconnect";
        case SimStep::Kind::tcp_touch: return "tcp_touch";
        case SimStep::Kind::udp_touch: return "udp_touch";
        }
        return "?";
    };
    (void)kind_name;

    for (const auto& st : s.steps) {
        StepResult sr;
        sr.kind = st.kind;
        if (aborted) {
            sr.detail = "skipped: scenario aborted";
            res.steps.push_back(sr);
            continue;
        }
        try {
            switch (st.kind) {
            case SimStep::Kind::connect: {
                SshClientConfig cc;
                cc.host = targets.host;
                cc.port = targets.ssh_port;
                cc.timeout_ms = targets.connect_timeout_ms;
                if (!s.claimed_ip.empty()) cc.claim_preamble = make_claim_preamble(s.claimed_ip);
                cli = std::make_unique<SshClient>(cc);
                cli->connect();
                session = false;
                sr.ok = true;
                sr.detail = cli->server_version();
                break;
            }
            case SimStep::Kind::auth: {
                if (!cli) throw std::runtime_error("not connected");
                bool accepted = cli->auth_password(st.a, st.b);
                if (accepted) {
                    cli->open_session();
                    session = true;
                }
                sr.ok = true; // the attempt itself worked either way
                sr.detail = st.a + ": " + (accepted ? "accepted" : "rejected");
                break;
            }
            case SimStep::Kind::expect: {
                if (!session) throw std::runtime_error("no session");
                auto er = cli->read_until(st.a, st.number);
                res.transcript += er.text;
                sr.ok = er.found;
                sr.detail = er.found ? "matched '" + st.a + "'"
                                     : "timeout waiting for '" + st.a + "'";
                if (!er.found && st.fatal) aborted = true;
                break;
            }
            case SimStep::Kind::send_line:
                if (!session) throw std::runtime_error("no session");
                cli->send_line(st.a);
                sr.ok = true;
                break;
            case SimStep::Kind::wait:
                std::this_thread::sleep_for(std::chrono::milliseconds(st.number));
                sr.ok = true;
                break;
            case SimStep::Kind::fetch_marker: {
                if (!session) throw std::runtime_error("no session");
                cli->send_line("wget " + st.a);
                auto er = cli->read_until("saved", 8000);
                res.transcript += er.text;
                sr.ok = er.found;
                sr.detail = er.found ? "fetched " + st.a : "no saved marker for " + st.a;
                break;
            }
            case SimStep::Kind::disconnect:
                if (cli) {
                    res.transcript += cli->drain(150);
                    cli->close();
                    cli.reset();
                }
                session = false;
                sr.ok = true;
                break;
            case SimStep::Kind::tcp_touch:
                tcp_touch(targets, static_cast<uint16_t>(st.number), hex_decode(st.b).value_or(""),
                          s.claimed_ip, targets.connect_timeout_ms);
                sr.ok = true;
                sr.detail = "port " + std::to_string(st.number);
                break;
            case SimStep::Kind::udp_touch:
                udp_touch(targets, static_cast<uint16_t>(st.number), hex_decode(st.b).value_or(""),
                          s.claimed_ip);
                sr.ok = true;
                sr.detail = "port " + std::to_string(st.number);
                break;
            }
        } catch (const std::exception& e) {
            sr.ok = false;
            sr.detail = e.what();
            aborted = true;
        }
        res.steps.push_back(sr);
    }
    if (cli) cli->close();

    res.ok = true;
    for (const auto& sr : res.steps)
        if (!sr.ok) res.ok = false;
    res.wall_ms = steady_now_ms() - t0;
    return res;
}

std::vector<size_t> plan_mix(const LoadProfile& profile, uint64_t seed) {
    double total = 0;
    for (const auto& slot : profile.mix) {
        if (slot.weight <= 0) throw std::invalid_argument("slot weight must be positive");
        total += slot.weight;
    }
    if (profile.mix.empty()) throw std::invalid_argument("load mix is empty");
    auto planned = static_cast<uint64_t>(
        std::llround(profile.rate_per_sec * profile.duration_sec));
    std::mt19937_64 rng(seed);
    std::vector<size_t> out;
    out.reserve(planned);
    for (uint64_t i = 0; i < planned; i++) {
        double u = unit_draw(rng) * total;
        size_t pick = profile.mix.size() - 1;
        double acc = 0;
        for (size_t k = 0; k < profile.mix.size(); k++) {
            acc += profile.mix[k].weight;
            if (u < acc) {
                pick = k;
                break;
            }
        }
        out.push_back(pick);
    }
    return out;
}

LoadReport generate_load(const LoadProfile& profile, const SimTargets& targets, uint64_t seed) {
    if (profile.rate_per_sec <= 0 || profile.rate_per_sec > 200)
        throw std::invalid_argument("rate_per_sec must be in (0, 200]");
    if (profile.duration_sec <= 0 || profile.duration_sec > 120)
        throw std::invalid_argument("duration_sec must be in (0, 120]");
    if (profile.claim_ips && !targets.test_mode)
        throw std::invalid_argument("claim_ips requires test mode");
    bool has_ssh = false;
    for (const auto& slot : profile.mix)
        if (slot.port == 0) has_ssh = true;
    if (has_ssh && profile.credentials.empty())
        throw std::invalid_argument("ssh slot needs credentials");

    auto order = plan_mix(profile, seed);
    std::mt19937_64 ip_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    static const uint32_t kTestNets[] = {0xC0000200, 0xC6336400, 0xCB007100};

    LoadReport report;
    report.planned = order.size();
    int64_t t0 = steady_now_ms();
    size_t cred_at = 0;

    for (uint64_t i = 0; i < order.size(); i++) {
        if (profile.pace) {
            auto due = t0 + static_cast<int64_t>(1000.0 * static_cast<double>(i) /
                                                 profile.rate_per_sec);
            int64_t now = steady_now_ms();
            if (due > now)
                std::this_thread::sleep_for(std::chrono::milliseconds(due - now));
        }
        const LoadSlot& slot = profile.mix[order[i]];
        std::string src;
        if (profile.claim_ips) {
            uint64_t d = ip_rng();
            uint32_t net = kTestNets[d % 3];
            src = format_ipv4(net | (static_cast<uint32_t>(d >> 8) % 254 + 1));
        }
        try {
            if (slot.port == 0) {
                const auto& cred = profile.credentials[cred_at++ % profile.credentials.size()];
                SshClientConfig cc;
                cc.host = targets.host;
                cc.port = targets.ssh_port;
                cc.timeout_ms = targets.connect_timeout_ms;
                if (!src.empty()) cc.claim_preamble = make_claim_preamble(src);
                SshClient cli(cc);
                cli.connect();
                cli.auth_password(cred.first, cred.second);
                cli.close();
            } else if (slot.transport == TransportKind::tcp) {
                tcp_touch(targets, slot.port, "", src, targets.connect_timeout_ms);
            } else {
                udp_touch(targets, slot.port, "", src);
            }
            report.made++;
            report.per_port[slot.port]++;
        } catch (const std::exception&) {
            report.failed++;
        }
    }
    report.wall_ms = steady_now_ms() - t0;
    return report;
}

std::string scenario_result_json(const ScenarioResult& r) {
    nlohmann::json steps = nlohmann::json::array();
    auto kind_str = [](SimStep::Kind k) -> const char* {
        switch (k) {
        case SimStep::Kind::connect: return "connect";
        case SimStep::Kind::auth: return "auth";
        case SimStep::Kind::expect: return "expect";
        case SimStep::Kind::send_line: return "send_line";
        case SimStep::Kind::wait: return "wait";
        case SimStep::Kind::fetch_marker: return "fetch_marker";
        case SimStep::Kind::disconnect: return "disconnect";
        case SimStep::Kind::tcp_touch: return "tcp_touch";
        case SimStep::Kind::udp_touch: return "udp_touch";
        }
        return "?";
    };
    for (const auto& st : r.steps) {
        steps.push_back({{"step", kind_str(st.kind)}, {"ok", st.ok}, {"detail", st.detail}});
    }
    nlohmann::json j{{"scenario", r.name},
                     {"ok", r.ok},
                     {"steps", steps},
                     {"transcript", bytes_to_json_string(r.transcript)},
                     {"wall_ms", r.wall_ms}};
    return j.dump(2);
}

std::string load_report_json(const LoadReport& r) {
    nlohmann::json per_port = nlohmann::json::object();
    for (const auto& [port, n] : r.per_port) per_port[std::to_string(port)] = n;
    nlohmann::json j{{"planned", r.planned},
                     {"made", r.made},
                     {"failed", r.failed},
                     {"per_port", per_port},
                     {"wall_ms", r.wall_ms}};
    return j.dump(2);
}

} // namespace honeykit
