#include "honeykit/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "honeykit/util.hpp"

namespace honeykit {

namespace {

[[noreturn]] void bad(size_t line, const std::string& what) {
    throw std::invalid_argument("line " + std::to_string(line) + ": " + what);
}

bool parse_bool(const std::string& v, size_t line) {
    if (v == "true") return true;
    if (v == "false") return false;
    bad(line, "expected true or false, got '" + v + "'");
}

uint64_t parse_num(const std::string& v, size_t line, uint64_t max) {
    try {
        size_t pos = 0;
        unsigned long long n = std::stoull(v, &pos);
        if (pos != v.size() || n > max) throw std::out_of_range("");
        return n;
    } catch (const std::exception&) {
        bad(line, "bad number '" + v + "'");
    }
}

// 445/tcp smb [bind=2445] [cap=4096] [window_ms=10000] [banner="..."]
PortProfile parse_port_line(const std::string& value, size_t line) {
    PortProfile p;
    std::istringstream in(value);
    std::string spec, label;
    if (!(in >> spec >> label)) bad(line, "port wants '<port>/<transport> <label>'");

    size_t slash = spec.find('/');
    if (slash == std::string::npos) bad(line, "port spec needs /tcp or /udp");
    p.local_port = static_cast<uint16_t>(parse_num(spec.substr(0, slash), line, 65535));
    if (p.local_port == 0) bad(line, "port 0 is not a logical port");
    std::string transport = spec.substr(slash + 1);
    if (transport == "tcp") p.transport = TransportKind::tcp;
    else if (transport == "udp") p.transport = TransportKind::udp;
    else bad(line, "transport must be tcp or udp");
    if (!is_token(label)) bad(line, "bad service label '" + label + "'");
    p.service_label = label;

    std::string opt;
    while (in >> opt) {
        size_t eq = opt.find('=');
        if (eq == std::string::npos) bad(line, "port option wants key=value, got '" + opt + "'");
        std::string key = opt.substr(0, eq);
        std::string val = opt.substr(eq + 1);
        if (key == "bind") {
            p.bind_port = static_cast<uint16_t>(parse_num(val, line, 65535));
        } else if (key == "cap") {
            p.capture_cap = static_cast<uint32_t>(parse_num(val, line, 1u << 24));
        } else if (key == "window_ms") {
            p.read_window_ms = static_cast<uint32_t>(parse_num(val, line, 3600000));
        } else if (key == "banner") {
            if (val.size() < 2 || val.front() != '"') bad(line, "banner wants a quoted string");
            // quoted value may contain spaces: pull until the closing quote
            std::string rest = val.substr(1);
            while (rest.empty() || rest.back() != '"') {
                std::string more;
                if (!(in >> more)) bad(line, "unterminated banner string");
                rest += " " + more;
            }
            rest.pop_back();
            // \r \n escapes so CRLF banners survive the single-line format
            std::string banner;
            for (size_t i = 0; i < rest.size(); i++) {
                if (rest[i] == '\\' && i + 1 < rest.size()) {
                    char c = rest[++i];
                    banner += c == 'r' ? '\r' : c == 'n' ? '\n' : c;
                } else {
                    banner += rest[i];
                }
            }
            p.banner = banner;
        } else {
            bad(line, "unknown port option '" + key + "'");
        }
    }
    return p;
}

} // namespace

AppConfig parse_config(std::string_view text) {
    AppConfig cfg;
    bool policy_set = false;

    std::istringstream in{std::string(text)};
    std::string raw;
    size_t lineno = 0;
    std::string section;

    while (std::getline(in, raw)) {
        lineno++;
        std::string line{trim(raw)};
        if (line.empty() || line[0] == '#') continue;

        if (line.front() == '[') {
            if (line.back() != ']') bad(lineno, "unterminated section header");
            section = line.substr(1, line.size() - 2);
            if (section != "global" && section != "ssh" && section != "sentinel")
                bad(lineno, "unknown section [" + section + "]");
            continue;
        }

        size_t eq = line.find('=');
        if (eq == std::string::npos) bad(lineno, "expected key = value");
        std::string key{trim(line.substr(0, eq))};
        std::string value{trim(line.substr(eq + 1))};
        if (key.empty()) bad(lineno, "empty key");
        if (section.empty()) bad(lineno, "key outside any section");

        if (section == "global") {
            if (key == "store_dir") cfg.store_dir = value;
            else if (key == "event_log") cfg.event_log = value;
            else if (key == "test_mode") cfg.test_mode = parse_bool(value, lineno);
            else bad(lineno, "unknown [global] key '" + key + "'");
        } else if (section == "ssh") {
            if (key == "enabled") cfg.ssh_enabled = parse_bool(value, lineno);
            else if (key == "bind") cfg.ssh.bind_address = value;
            else if (key == "port") cfg.ssh.port = static_cast<uint16_t>(parse_num(value, lineno, 65535));
            else if (key == "banner") cfg.ssh.banner = value;
            else if (key == "host_key") cfg.ssh.host_key_path = value;
            else if (key == "recordings_dir") cfg.ssh.recordings_dir = value;
            else if (key == "sensor_name") cfg.ssh.sensor_name = value;
            else if (key == "max_sessions") cfg.ssh.max_sessions = static_cast<uint32_t>(parse_num(value, lineno, 4096));
            else if (key == "auth_limit") cfg.ssh.auth_limit = static_cast<uint32_t>(parse_num(value, lineno, 1000));
            else if (key == "idle_timeout_ms") cfg.ssh.idle_timeout_ms = static_cast<uint32_t>(parse_num(value, lineno, 86400000));
            else if (key == "policy") {
                if (value == "deny_all") cfg.policy.mode = CredentialPolicy::Mode::deny_all;
                else if (value == "accept_list") cfg.policy.mode = CredentialPolicy::Mode::accept_list;
                else if (value == "accept_after_n") cfg.policy.mode = CredentialPolicy::Mode::accept_after_n;
                else bad(lineno, "policy must be deny_all, accept_list or accept_after_n");
                policy_set = true;
            } else if (key == "n_threshold") {
                cfg.policy.n_threshold = static_cast<uint32_t>(parse_num(value, lineno, 1000000));
            } else if (key == "accept") {
                size_t colon = value.find(':');
                if (colon == std::string::npos) bad(lineno, "accept wants user:password");
                cfg.policy.accept_list.insert({value.substr(0, colon), value.substr(colon + 1)});
            } else {
                bad(lineno, "unknown [ssh] key '" + key + "'");
            }
        } else { // sentinel
            if (key == "enabled") cfg.sentinel_enabled = parse_bool(value, lineno);
            else if (key == "bind") cfg.sentinel.bind_address = value;
            else if (key == "sensor_name") cfg.sentinel.sensor_name = value;
            else if (key == "port") cfg.ports.push_back(parse_port_line(value, lineno));
            else bad(lineno, "unknown [sentinel] key '" + key + "'");
        }
    }

    if (cfg.ssh_enabled && cfg.ssh.host_key_path.empty())
        throw std::invalid_argument("[ssh] host_key is required when the ssh sensor is enabled");
    if (policy_set && cfg.policy.mode == CredentialPolicy::Mode::accept_list &&
        cfg.policy.accept_list.empty())
        throw std::invalid_argument("[ssh] accept_list policy needs at least one accept entry");
    if (cfg.policy.n_threshold == 0)
        throw std::invalid_argument("[ssh] n_threshold must be at least 1");
    cfg.ssh.test_mode = cfg.test_mode;
    cfg.sentinel.test_mode = cfg.test_mode;
    if (cfg.ports.empty()) cfg.ports = default_port_map();
    return cfg;
}

AppConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string default_store_dir() {
    const char* env = std::getenv("HONEYKIT_STORE");
    return env && *env ? env : "store";
}

std::string default_config_path() {
    const char* env = std::getenv("HONEYKIT_CONFIG");
    return env && *env ? env : "honeykit.conf";
}

} // namespace honeykit
