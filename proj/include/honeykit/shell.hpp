#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "honeykit/artifacts.hpp"
#include "honeykit/clock.hpp"
#include "honeykit/event.hpp"

namespace honeykit {

struct VfsNode {
    bool is_dir = false;
    std::string mode;     // rendered ls -l mode string, e.g. "-rw-r--r--"
    uint64_t size = 0;    // listing size for content-free files
    std::string content;  // cat-able bytes; files created by the shell use this
    bool has_content = false;
    int64_t mtime_ms = 0;

    bool operator==(const VfsNode&) const = default;
};

// Immutable filesystem image presented to attackers. Entries are keyed by
// normalized absolute path and must include every parent directory.
struct SeedImage {
    int version = 1;
    std::string hostname = "svr04";
    std::string uname_line;
    std::map<std::string, VfsNode> entries;
};

// Compiled-in default: /root, /tmp, /etc/passwd, /bin, /usr/bin and friends.
SeedImage default_seed();

// JSON manifest: {"version":1,"hostname":...,"uname":...,"entries":[{"path":
// ...,"type":"dir"|"file","mode":...,"size":...,"content"|"content_hex":...,
// "mtime":...}]}. Throws std::runtime_error with detail on invalid input.
SeedImage load_seed_manifest(const std::string& path);

// Pure lexical normalization: handles ".", "..", repeated slashes and a
// leading "~" (= /root); never escapes above "/".
std::string normalize_path(const std::string& cwd, const std::string& path);

enum class LookupError { not_found, not_a_directory };

struct FetchResult {
    bool ok = false;
    std::string body;        // capped at the fetch limit by the fetcher
    bool truncated = false;  // body hit the cap
    std::string error;       // human-readable cause when !ok
};
using Fetcher = std::function<FetchResult(const std::string& url)>;

struct ParsedUrl {
    std::string scheme;
    std::string host;
    uint16_t port = 80;
    std::string path = "/";
};
// Strict http(s) URL parser; nullopt on anything else.
std::optional<ParsedUrl> parse_url(const std::string& url);

// wget/curl-style HTTP GET via the real network, honoring `limit`.
FetchResult http_fetch(const std::string& url, uint64_t limit);

// Session-scoped event emitted by execute(); the caller owns session ids and
// offsets and wraps these into SessionEvents.
struct ShellEvent {
    SessionEventKind kind = SessionEventKind::command;
    SessionPayload payload;

    bool operator==(const ShellEvent&) const = default;
};

struct ExecResult {
    std::string output;
    std::vector<ShellEvent> events;
    bool exit_requested = false;
};

struct ShellConfig {
    std::string username = "root";
    std::string remote_ip = "0.0.0.0";
    uint64_t fetch_limit = 16ull * 1024 * 1024;
};

// One instance per accepted session. All mutation happens in the overlay;
// the seed image is shared and never written. No command touches the host
// filesystem — downloads go only to the (optional) artifact store.
class Shell {
public:
    Shell(const SeedImage& seed, ShellConfig cfg, Clock clock, Fetcher fetch = {},
          ArtifactStore* artifacts = nullptr);

    ExecResult execute(const std::string& line);
    std::string prompt() const;
    const std::string& cwd() const { return cwd_; }
    bool exit_requested() const { return exit_requested_; }

    // Overlay-aware lookup of a normalized absolute path.
    std::variant<VfsNode, LookupError> lookup(const std::string& abs_path) const;
    // Sorted child names of a directory across seed and overlay.
    std::vector<std::string> list_dir(const std::string& abs_path) const;

private:
    const SeedImage& seed_;
    ShellConfig cfg_;
    Clock clock_;
    Fetcher fetch_;
    ArtifactStore* artifacts_;
    std::string cwd_ = "/root";
    std::map<std::string, std::string> env_;
    // nullopt marks a whiteout (deleted seed entry)
    std::map<std::string, std::optional<VfsNode>> overlay_;
    bool exit_requested_ = false;

    int run_command(const std::vector<std::string>& argv, std::string& out,
                    std::vector<ShellEvent>& events);
    int cmd_cd(const std::vector<std::string>& argv, std::string& out);
    int cmd_ls(const std::vector<std::string>& argv, std::string& out);
    int cmd_cat(const std::vector<std::string>& argv, std::string& out);
    int cmd_mkdir(const std::vector<std::string>& argv, std::string& out);
    int cmd_rm(const std::vector<std::string>& argv, std::string& out);
    int cmd_chmod(const std::vector<std::string>& argv, std::string& out);
    int cmd_fetch(const std::vector<std::string>& argv, bool curl_style, std::string& out,
                  std::vector<ShellEvent>& events);
    void put_node(const std::string& abs, VfsNode node);
};

// Quote-aware tokenizer ('...' literal, "..." with \" and \\, bare \x).
std::vector<std::string> shell_tokenize(const std::string& text);
// Split a raw line into chained commands on unquoted ";" and "&&".
struct ChainedCommand {
    std::string text;
    bool and_if = false; // true when joined to the previous command by &&
};
std::vector<ChainedCommand> split_chain(const std::string& line);

} // namespace honeykit
