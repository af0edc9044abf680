#pragma once

#include <string>
#include <vector>

#include "honeykit/sentinel.hpp"
#include "honeykit/ssh.hpp"

namespace honeykit {

// Deployment settings for the serve command. Sections: [global], [ssh],
// [sentinel]. Anything unset keeps the defaults below.
struct AppConfig {
    std::string store_dir = "store";
    std::string event_log = "events.jsonl"; // raw capture feed, ingested later
    bool test_mode = false;

    bool ssh_enabled = true;
    SshSensorConfig ssh;
    CredentialPolicy policy; // default deny_all

    bool sentinel_enabled = true;
    SentinelConfig sentinel;
    std::vector<PortProfile> ports; // empty = default_port_map()
};

// Sectioned key=value with '#' comment lines. Throws std::invalid_argument
// with "line N:" context on anything unknown or malformed.
AppConfig parse_config(std::string_view text);
// Throws std::runtime_error naming the path when the file cannot be read.
AppConfig load_config(const std::string& path);

// --store default: $HONEYKIT_STORE, else "store".
std::string default_store_dir();
// --config default: $HONEYKIT_CONFIG, else "honeykit.conf".
std::string default_config_path();

} // namespace honeykit
