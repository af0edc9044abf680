#include "honeykit/shell.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "honeykit/util.hpp"

namespace honeykit {

std::string normalize_path(const std::string& cwd, const std::string& path) {
    std::string base = cwd;
    std::string rest = path;
    if (!path.empty() && path[0] == '/') {
        base = "/";
        rest = path;
    } else if (path == "~" || path.rfind("~/", 0) == 0) {
        base = "/root";
        rest = path.substr(1);
    }
    std::vector<std::string> stack;
    for (const auto& seg : split(base, '/'))
        if (!seg.empty() && seg != ".") stack.push_back(seg);
    for (const auto& seg : split(rest, '/')) {
        if (seg.empty() || seg == ".") continue;
        if (seg == "..") {
            if (!stack.empty()) stack.pop_back(); // root stays root
        } else {
            stack.push_back(seg);
        }
    }
    std::string out;
    for (const auto& seg : stack) out += "/" + seg;
    return out.empty() ? "/" : out;
}

std::vector<std::string> shell_tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    bool has_cur = false;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\'') {
            has_cur = true;
            i++;
            while (i < text.size() && text[i] != '\'') cur += text[i++];
            if (i < text.size()) i++;
        } else if (c == '"') {
            has_cur = true;
            i++;
            while (i < text.size() && text[i] != '"') {
                if (text[i] == '\\' && i + 1 < text.size() &&
                    (text[i + 1] == '"' || text[i + 1] == '\\')) {
                    cur += text[i + 1];
                    i += 2;
                } else {
                    cur += text[i++];
                }
            }
            if (i < text.size()) i++;
        } else if (c == '\\' && i + 1 < text.size()) {
            cur += text[i + 1];
            has_cur = true;
            i += 2;
        } else if (c == ' ' || c == '\t') {
            if (has_cur) {
                out.push_back(cur);
                cur.clear();
                has_cur = false;
            }
            i++;
        } else {
            cur += c;
            has_cur = true;
            i++;
        }
    }
    if (has_cur) out.push_back(cur);
    return out;
}

std::vector<ChainedCommand> split_chain(const std::string& line) {
    std::vector<ChainedCommand> out;
    std::string cur;
    bool and_next = false;
    char quote = 0;
    size_t i = 0;
    auto flush = [&](bool next_is_and) {
        out.push_back({cur, and_next});
        and_next = next_is_and;
        cur.clear();
    };
    while (i < line.size()) {
        char c = line[i];
        if (quote) {
            if (c == quote) quote = 0;
            cur += c;
            i++;
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            cur += c;
            i++;
        } else if (c == '\\' && i + 1 < line.size()) {
            cur += c;
            cur += line[i + 1];
            i += 2;
        } else if (c == '&' && i + 1 < line.size() && line[i + 1] == '&') {
            flush(true);
            i += 2;
        } else if (c == ';') {
            flush(false);
            i++;
        } else {
            cur += c;
            i++;
        }
    }
    out.push_back({cur, and_next});
    return out;
}

namespace {

constexpr int64_t kSeedMtime = 1378814400000LL; // 2013-09-10T12:00:00Z

VfsNode dir_node(const std::string& mode = "drwxr-xr-x") {
    VfsNode n;
    n.is_dir = true;
    n.mode = mode;
    n.size = 4096;
    n.mtime_ms = kSeedMtime;
    return n;
}

VfsNode bin_node(uint64_t size) {
    VfsNode n;
    n.mode = "-rwxr-xr-x";
    n.size = size;
    n.mtime_ms = kSeedMtime;
    return n;
}

VfsNode text_node(std::string content, const std::string& mode = "-rw-r--r--") {
    VfsNode n;
    n.mode = mode;
    n.size = content.size();
    n.content = std::move(content);
    n.has_content = true;
    n.mtime_ms = kSeedMtime;
    return n;
}

} // namespace

SeedImage default_seed() {
    SeedImage seed;
    seed.hostname = "svr04";
    seed.uname_line = "Linux svr04 3.2.0-4-amd64 #1 SMP Debian 3.2.54-2 x86_64 GNU/Linux";
    auto& e = seed.entries;
    e["/"] = dir_node();
    e["/root"] = dir_node("drwx------");
    e["/tmp"] = dir_node("drwxrwxrwt");
    e["/etc"] = dir_node();
    e["/bin"] = dir_node();
    e["/usr"] = dir_node();
    e["/usr/bin"] = dir_node();
    e["/var"] = dir_node();
    e["/var/run"] = dir_node();
    e["/var/tmp"] = dir_node("drwxrwxrwt");
    e["/etc/passwd"] = text_node("root:x:0:0:root:/root:/bin/bash\n"
                                 "daemon:x:1:1:daemon:/usr/sbin:/bin/sh\n"
                                 "bin:x:2:2:bin:/bin:/bin/sh\n"
                                 "sys:x:3:3:sys:/dev:/bin/sh\n"
                                 "www-data:x:33:33:www-data:/var/www:/bin/sh\n"
                                 "sshd:x:101:65534::/var/run/sshd:/usr/sbin/nologin\n");
    e["/etc/hostname"] = text_node("svr04\n");
    e["/etc/issue"] = text_node("Debian GNU/Linux 7 \\n \\l\n\n");
    e["/bin/bash"] = bin_node(941252);
    e["/bin/sh"] = bin_node(106920);
    e["/bin/ls"] = bin_node(110080);
    e["/bin/cat"] = bin_node(52080);
    e["/bin/ps"] = bin_node(93232);
    e["/bin/uname"] = bin_node(31464);
    e["/bin/mkdir"] = bin_node(63848);
    e["/bin/rm"] = bin_node(60300);
    e["/bin/chmod"] = bin_node(60060);
    e["/bin/echo"] = bin_node(31376);
    e["/bin/pwd"] = bin_node(31408);
    e["/usr/bin/wget"] = bin_node(372596);
    e["/usr/bin/curl"] = bin_node(154328);
    e["/usr/bin/whoami"] = bin_node(27288);
    e["/usr/bin/id"] = bin_node(39520);
    e["/usr/bin/w"] = bin_node(16515);
    return seed;
}

SeedImage load_seed_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read seed manifest: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw std::runtime_error("seed manifest is not a JSON object: " + path);
    SeedImage seed;
    seed.version = j.value("version", 0);
    if (seed.version != 1)
        throw std::runtime_error("seed manifest " + path + ": unsupported version");
    seed.hostname = j.value("hostname", std::string("svr04"));
    seed.uname_line = j.value("uname", default_seed().uname_line);
    if (!j.contains("entries") || !j["entries"].is_array())
        throw std::runtime_error("seed manifest " + path + ": missing entries array");
    for (const auto& item : j["entries"]) {
        if (!item.contains("path") || !item["path"].is_string())
            throw std::runtime_error("seed manifest " + path + ": entry without path");
        std::string p = item["path"].get<std::string>();
        if (p.empty() || p[0] != '/' || normalize_path("/", p) != p)
            throw std::runtime_error("seed manifest " + path + ": path not normalized: " + p);
        std::string type = item.value("type", std::string("file"));
        VfsNode n;
        n.is_dir = type == "dir";
        if (type != "dir" && type != "file")
            throw std::runtime_error("seed manifest " + path + ": bad type for " + p);
        n.mode = item.value("mode", n.is_dir ? std::string("drwxr-xr-x")
                                             : std::string("-rw-r--r--"));
        n.mtime_ms = item.value("mtime", kSeedMtime);
        if (item.contains("content_hex")) {
            auto bytes = hex_decode(item["content_hex"].get<std::string>());
            if (!bytes)
                throw std::runtime_error("seed manifest " + path + ": bad content_hex for " + p);
            n.content = *bytes;
            n.has_content = true;
        } else if (item.contains("content")) {
            n.content = item["content"].get<std::string>();
            n.has_content = true;
        }
        n.size = n.has_content ? n.content.size() : item.value("size", n.is_dir ? 4096 : 0);
        seed.entries[p] = std::move(n);
    }
    for (const char* required : {"/", "/root", "/tmp", "/etc/passwd", "/bin", "/usr/bin"})
        if (!seed.entries.count(required))
            throw std::runtime_error("seed manifest " + path + ": missing required entry " +
                                     std::string(required));
    for (const auto& [p, node] : seed.entries) {
        if (p == "/") {
            if (!node.is_dir) throw std::runtime_error("seed manifest " + path + ": / not a dir");
            continue;
        }
        auto slash = p.find_last_of('/');
        std::string parent = slash == 0 ? "/" : p.substr(0, slash);
        auto it = seed.entries.find(parent);
        if (it == seed.entries.end() || !it->second.is_dir)
            throw std::runtime_error("seed manifest " + path + ": missing parent dir for " + p);
    }
    return seed;
}

// --------------------------------------------------------------------------

Shell::Shell(const SeedImage& seed, ShellConfig cfg, Clock clock, Fetcher fetch,
             ArtifactStore* artifacts)
    : seed_(seed), cfg_(std::move(cfg)), clock_(std::move(clock)), fetch_(std::move(fetch)),
      artifacts_(artifacts) {
    env_["HOME"] = "/root";
    env_["PATH"] = "/usr/local/sbin:/usr/local/bin:/usr/sbin:/usr/bin:/sbin:/bin";
    env_["USER"] = cfg_.username;
}

std::string Shell::prompt() const {
    std::string disp = cwd_;
    if (cwd_ == "/root") disp = "~";
    else if (cwd_.rfind("/root/", 0) == 0) disp = "~" + cwd_.substr(5);
    return "root@" + seed_.hostname + ":" + disp + "# ";
}

namespace {

// raw presence check: overlay wins, nullopt is a whiteout
std::optional<VfsNode> raw_lookup(const SeedImage& seed,
                                  const std::map<std::string, std::optional<VfsNode>>& overlay,
                                  const std::string& abs) {
    if (auto it = overlay.find(abs); it != overlay.end()) return it->second;
    if (auto it = seed.entries.find(abs); it != seed.entries.end()) return it->second;
    return std::nullopt;
}

std::string parent_of(const std::string& abs) {
    auto slash = abs.find_last_of('/');
    if (slash == std::string::npos || abs == "/") return "/";
    return slash == 0 ? "/" : abs.substr(0, slash);
}

std::string basename_of(const std::string& abs) {
    if (abs == "/") return "/";
    return abs.substr(abs.find_last_of('/') + 1);
}

} // namespace

std::variant<VfsNode, LookupError> Shell::lookup(const std::string& abs) const {
    // walk ancestors so "/etc/passwd/x" reports not-a-directory
    auto segs = split(abs, '/');
    std::string walk;
    for (size_t i = 0; i < segs.size(); i++) {
        if (segs[i].empty()) continue;
        walk += "/" + segs[i];
        auto node = raw_lookup(seed_, overlay_, walk);
        if (!node) return LookupError::not_found;
        if (walk != abs && !node->is_dir) return LookupError::not_a_directory;
    }
    auto node = raw_lookup(seed_, overlay_, abs);
    if (!node) return LookupError::not_found;
    return *node;
}

std::vector<std::string> Shell::list_dir(const std::string& abs) const {
    std::vector<std::string> names;
    auto consider = [&](const std::string& path, bool present) {
        if (parent_of(path) != abs || path == "/") return;
        std::string name = basename_of(path);
        auto it = std::find(names.begin(), names.end(), name);
        if (present && it == names.end()) names.push_back(name);
        if (!present && it != names.end()) names.erase(it);
    };
    for (const auto& [path, node] : seed_.entries)
        consider(path, raw_lookup(seed_, overlay_, path).has_value());
    for (const auto& [path, node] : overlay_) consider(path, node.has_value());
    std::sort(names.begin(), names.end());
    return names;
}

void Shell::put_node(const std::string& abs, VfsNode node) { overlay_[abs] = std::move(node); }

ExecResult Shell::execute(const std::string& line) {
    ExecResult res;
    if (trim(line).empty()) return res;
    res.events.push_back({SessionEventKind::command, CommandPayload{line}});
    int status = 0;
    for (const auto& chained : split_chain(line)) {
        if (exit_requested_) break;
        if (chained.and_if && status != 0) continue;
        auto argv = shell_tokenize(chained.text);
        if (argv.empty()) continue;
        status = run_command(argv, res.output, res.events);
    }
    res.exit_requested = exit_requested_;
    return res;
}

int Shell::run_command(const std::vector<std::string>& argv, std::string& out,
                       std::vector<ShellEvent>& events) {
    const std::string& cmd = argv[0];
    if (cmd == "exit" || cmd == "logout") {
        exit_requested_ = true;
        return 0;
    }
    if (cmd == "cd") return cmd_cd(argv, out);
    if (cmd == "pwd") {
        out += cwd_ + "\n";
        return 0;
    }
    if (cmd == "ls") return cmd_ls(argv, out);
    if (cmd == "cat") return cmd_cat(argv, out);
    if (cmd == "echo") {
        bool no_newline = argv.size() > 1 && argv[1] == "-n";
        std::string joined;
        for (size_t i = no_newline ? 2 : 1; i < argv.size(); i++) {
            if (!joined.empty()) joined += " ";
            joined += argv[i];
        }
        out += joined;
        if (!no_newline) out += "\n";
        return 0;
    }
    if (cmd == "uname") {
        bool all = false, release = false, node = false;
        for (size_t i = 1; i < argv.size(); i++) {
            if (argv[i].find('a') != std::string::npos && argv[i][0] == '-') all = true;
            if (argv[i] == "-r") release = true;
            if (argv[i] == "-n") node = true;
        }
        if (all) out += seed_.uname_line + "\n";
        else if (release) {
            auto fields = split(seed_.uname_line, ' ');
            out += (fields.size() > 2 ? fields[2] : "unknown") + "\n";
        } else if (node) out += seed_.hostname + "\n";
        else out += "Linux\n";
        return 0;
    }
    if (cmd == "whoami") {
        out += cfg_.username + "\n";
        return 0;
    }
    if (cmd == "id") {
        if (cfg_.username == "root") out += "uid=0(root) gid=0(root) groups=0(root)\n";
        else
            out += "uid=1000(" + cfg_.username + ") gid=1000(" + cfg_.username + ") groups=1000(" +
                   cfg_.username + ")\n";
        return 0;
    }
    if (cmd == "w") {
        time_t secs = static_cast<time_t>(clock_() / 1000);
        struct tm tmv{};
        gmtime_r(&secs, &tmv);
        char now[16], login[16];
        std::snprintf(now, sizeof(now), "%02d:%02d:%02d", tmv.tm_hour, tmv.tm_min, tmv.tm_sec);
        std::snprintf(login, sizeof(login), "%02d:%02d", tmv.tm_hour, tmv.tm_min);
        char line1[128];
        std::snprintf(line1, sizeof(line1),
                      " %s up 13 days,  2:41,  1 user,  load average: 0.05, 0.03, 0.01\n", now);
        out += line1;
        out += "USER     TTY      FROM             LOGIN@   IDLE   JCPU   PCPU WHAT\n";
        char line3[160];
        std::snprintf(line3, sizeof(line3), "%-8s pts/0    %-16s %s    0.00s  0.00s  0.00s w\n",
                      cfg_.username.c_str(), cfg_.remote_ip.c_str(), login);
        out += line3;
        return 0;
    }
    if (cmd == "ps") {
        out += "  PID TTY          TIME CMD\n"
               "    1 ?        00:00:01 init\n"
               "  712 ?        00:00:00 sshd\n"
               " 1033 pts/0    00:00:00 bash\n"
               " 1075 pts/0    00:00:00 ps\n";
        return 0;
    }
    if (cmd == "mkdir") return cmd_mkdir(argv, out);
    if (cmd == "rm") return cmd_rm(argv, out);
    if (cmd == "chmod") return cmd_chmod(argv, out);
    if (cmd == "wget") return cmd_fetch(argv, false, out, events);
    if (cmd == "curl") return cmd_fetch(argv, true, out, events);
    out += "bash: " + cmd + ": command not found\n";
    return 127;
}

int Shell::cmd_cd(const std::vector<std::string>& argv, std::string& out) {
    std::string target = argv.size() > 1 ? argv[1] : "~";
    std::string abs = normalize_path(cwd_, target);
    auto node = lookup(abs);
    if (std::holds_alternative<LookupError>(node)) {
        if (std::get<LookupError>(node) == LookupError::not_found)
            out += "bash: cd: " + target + ": No such file or directory\n";
        else out += "bash: cd: " + target + ": Not a directory\n";
        return 1;
    }
    if (!std::get<VfsNode>(node).is_dir) {
        out += "bash: cd: " + target + ": Not a directory\n";
        return 1;
    }
    cwd_ = abs;
    return 0;
}

namespace {

std::string ls_date(int64_t mtime_ms) {
    time_t secs = static_cast<time_t>(mtime_ms / 1000);
    struct tm tmv{};
    gmtime_r(&secs, &tmv);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%b %e %H:%M", &tmv);
    return buf;
}

} // namespace

int Shell::cmd_ls(const std::vector<std::string>& argv, std::string& out) {
    bool all = false, longfmt = false;
    std::vector<std::string> paths;
    for (size_t i = 1; i < argv.size(); i++) {
        if (!argv[i].empty() && argv[i][0] == '-' && argv[i].size() > 1) {
            if (argv[i].find('a') != std::string::npos) all = true;
            if (argv[i].find('l') != std::string::npos) longfmt = true;
        } else {
            paths.push_back(argv[i]);
        }
    }
    if (paths.empty()) paths.push_back(".");
    int status = 0;
    bool first = true;
    for (const auto& arg : paths) {
        std::string abs = normalize_path(cwd_, arg);
        auto found = lookup(abs);
        if (std::holds_alternative<LookupError>(found)) {
            out += "ls: cannot access " + arg + ": No such file or directory\n";
            status = 2;
            continue;
        }
        const VfsNode node = std::get<VfsNode>(found);
        if (!first) out += "\n";
        first = false;

        struct Entry {
            std::string name;
            VfsNode node;
        };
        std::vector<Entry> entries;
        if (node.is_dir) {
            if (paths.size() > 1) out += arg + ":\n";
            if (all) {
                entries.push_back({".", node});
                auto parent = lookup(parent_of(abs));
                entries.push_back(
                    {"..", std::holds_alternative<VfsNode>(parent) ? std::get<VfsNode>(parent)
                                                                   : node});
            }
            for (const auto& name : list_dir(abs)) {
                if (!all && !name.empty() && name[0] == '.') continue;
                auto child = lookup(abs == "/" ? "/" + name : abs + "/" + name);
                if (std::holds_alternative<VfsNode>(child))
                    entries.push_back({name, std::get<VfsNode>(child)});
            }
        } else {
            entries.push_back({arg, node});
        }

        if (!longfmt) {
            for (const auto& e : entries) out += e.name + "\n";
            continue;
        }
        size_t size_w = 1;
        uint64_t blocks = 0;
        for (const auto& e : entries) {
            size_w = std::max(size_w, std::to_string(e.node.size).size());
            blocks += (e.node.size + 1023) / 1024;
        }
        if (node.is_dir) out += "total " + std::to_string(blocks) + "\n";
        for (const auto& e : entries) {
            std::string size = std::to_string(e.node.size);
            out += e.node.mode + " " + (e.node.is_dir ? "2" : "1") + " root root " +
                   std::string(size_w - size.size(), ' ') + size + " " + ls_date(e.node.mtime_ms) +
                   " " + e.name + "\n";
        }
    }
    return status;
}

int Shell::cmd_cat(const std::vector<std::string>& argv, std::string& out) {
    int status = 0;
    for (size_t i = 1; i < argv.size(); i++) {
        std::string abs = normalize_path(cwd_, argv[i]);
        auto found = lookup(abs);
        if (std::holds_alternative<LookupError>(found)) {
            if (std::get<LookupError>(found) == LookupError::not_found)
                out += "cat: " + argv[i] + ": No such file or directory\n";
            else out += "cat: " + argv[i] + ": Not a directory\n";
            status = 1;
            continue;
        }
        const auto& node = std::get<VfsNode>(found);
        if (node.is_dir) {
            out += "cat: " + argv[i] + ": Is a directory\n";
            status = 1;
            continue;
        }
        out += node.content;
    }
    return status;
}

int Shell::cmd_mkdir(const std::vector<std::string>& argv, std::string& out) {
    bool parents = false;
    std::vector<std::string> paths;
    for (size_t i = 1; i < argv.size(); i++) {
        if (argv[i] == "-p") parents = true;
        else paths.push_back(argv[i]);
    }
    if (paths.empty()) {
        out += "mkdir: missing operand\n";
        return 1;
    }
    int status = 0;
    for (const auto& arg : paths) {
        std::string abs = normalize_path(cwd_, arg);
        auto existing = raw_lookup(seed_, overlay_, abs);
        if (existing) {
            if (!parents) {
                out += "mkdir: cannot create directory '" + arg + "': File exists\n";
                status = 1;
            }
            continue;
        }
        auto parent = lookup(parent_of(abs));
        if (std::holds_alternative<LookupError>(parent) || !std::get<VfsNode>(parent).is_dir) {
            if (!parents) {
                out += "mkdir: cannot create directory '" + arg +
                       "': No such file or directory\n";
                status = 1;
                continue;
            }
            // create every missing ancestor
            auto segs = split(abs, '/');
            std::string walk;
            bool blocked = false;
            for (const auto& seg : segs) {
                if (seg.empty()) continue;
                walk += "/" + seg;
                auto node = raw_lookup(seed_, overlay_, walk);
                if (!node) {
                    VfsNode d;
                    d.is_dir = true;
                    d.mode = "drwxr-xr-x";
                    d.size = 4096;
                    d.mtime_ms = clock_();
                    put_node(walk, d);
                } else if (!node->is_dir) {
                    out += "mkdir: cannot create directory '" + arg + "': Not a directory\n";
                    status = 1;
                    blocked = true;
                    break;
                }
            }
            if (blocked) continue;
        } else {
            VfsNode d;
            d.is_dir = true;
            d.mode = "drwxr-xr-x";
            d.size = 4096;
            d.mtime_ms = clock_();
            put_node(abs, d);
        }
    }
    return status;
}

int Shell::cmd_rm(const std::vector<std::string>& argv, std::string& out) {
    bool recursive = false, force = false;
    std::vector<std::string> paths;
    for (size_t i = 1; i < argv.size(); i++) {
        if (!argv[i].empty() && argv[i][0] == '-') {
            if (argv[i].find('r') != std::string::npos ||
                argv[i].find('R') != std::string::npos)
                recursive = true;
            if (argv[i].find('f') != std::string::npos) force = true;
        } else {
            paths.push_back(argv[i]);
        }
    }
    if (paths.empty()) {
        if (!force) out += "rm: missing operand\n";
        return force ? 0 : 1;
    }
    int status = 0;
    for (const auto& arg : paths) {
        std::string abs = normalize_path(cwd_, arg);
        if (abs == "/") {
            out += "rm: it is dangerous to operate recursively on '/'\n";
            status = 1;
            continue;
        }
        auto found = lookup(abs);
        if (std::holds_alternative<LookupError>(found)) {
            if (!force) {
                out += "rm: cannot remove '" + arg + "': No such file or directory\n";
                status = 1;
            }
            continue;
        }
        const auto& node = std::get<VfsNode>(found);
        if (node.is_dir && !recursive) {
            out += "rm: cannot remove '" + arg + "': Is a directory\n";
            status = 1;
            continue;
        }
        if (node.is_dir) {
            std::string prefix = abs + "/";
            std::vector<std::string> doomed;
            for (const auto& [p, n] : seed_.entries)
                if (p.rfind(prefix, 0) == 0) doomed.push_back(p);
            for (const auto& [p, n] : overlay_)
                if (p.rfind(prefix, 0) == 0) doomed.push_back(p);
            for (const auto& p : doomed) overlay_[p] = std::nullopt;
        }
        overlay_[abs] = std::nullopt;
        // the spec guarantees cwd always exists; fall back to / if it vanished
        if (cwd_ == abs || cwd_.rfind(abs + "/", 0) == 0) cwd_ = "/";
    }
    return status;
}

int Shell::cmd_chmod(const std::vector<std::string>& argv, std::string& out) {
    if (argv.size() < 3) {
        out += "chmod: missing operand\n";
        return 1;
    }
    const std::string& mode = argv[1];
    auto octal_triplet = [](char c) {
        int v = c - '0';
        std::string s;
        s += (v & 4) ? 'r' : '-';
        s += (v & 2) ? 'w' : '-';
        s += (v & 1) ? 'x' : '-';
        return s;
    };
    bool octal = !mode.empty() && mode.size() <= 4 &&
                 mode.find_first_not_of("01234567") == std::string::npos;
    bool add_exec = mode == "+x" || mode == "a+x" || mode == "u+x" || mode == "ugo+x";
    if (!octal && !add_exec) {
        out += "chmod: invalid mode: '" + mode + "'\n";
        return 1;
    }
    int status = 0;
    for (size_t i = 2; i < argv.size(); i++) {
        std::string abs = normalize_path(cwd_, argv[i]);
        auto found = lookup(abs);
        if (std::holds_alternative<LookupError>(found)) {
            out += "chmod: cannot access '" + argv[i] + "': No such file or directory\n";
            status = 1;
            continue;
        }
        VfsNode node = std::get<VfsNode>(found);
        if (octal) {
            std::string bits = mode.size() == 4 ? mode.substr(1) : mode;
            while (bits.size() < 3) bits = "0" + bits;
            node.mode = std::string(1, node.is_dir ? 'd' : '-') + octal_triplet(bits[0]) +
                        octal_triplet(bits[1]) + octal_triplet(bits[2]);
        } else {
            for (size_t pos : {3, 6, 9})
                if (pos < node.mode.size() && node.mode[pos] == '-') node.mode[pos] = 'x';
        }
        put_node(abs, node);
    }
    return status;
}

std::optional<ParsedUrl> parse_url(const std::string& url) {
    ParsedUrl p;
    std::string rest;
    if (url.rfind("http://", 0) == 0) {
        p.scheme = "http";
        p.port = 80;
        rest = url.substr(7);
    } else if (url.rfind("https://", 0) == 0) {
        p.scheme = "https";
        p.port = 443;
        rest = url.substr(8);
    } else {
        return std::nullopt;
    }
    auto slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    p.path = slash == std::string::npos ? "/" : rest.substr(slash);
    auto colon = authority.find(':');
    if (colon != std::string::npos) {
        p.host = authority.substr(0, colon);
        std::string port_s = authority.substr(colon + 1);
        if (port_s.empty() || port_s.find_first_not_of("0123456789") != std::string::npos)
            return std::nullopt;
        unsigned long v = std::strtoul(port_s.c_str(), nullptr, 10);
        if (v == 0 || v > 65535) return std::nullopt;
        p.port = static_cast<uint16_t>(v);
    } else {
        p.host = authority;
    }
    if (p.host.empty()) return std::nullopt;
    return p;
}

namespace {

std::string url_basename(const ParsedUrl& u) {
    std::string path = u.path.substr(0, u.path.find_first_of("?#"));
    std::string name = path.substr(path.find_last_of('/') + 1);
    return name.empty() ? "index.html" : name;
}

std::string wall_ts(int64_t ms) {
    time_t secs = static_cast<time_t>(ms / 1000);
    struct tm tmv{};
    gmtime_r(&secs, &tmv);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%d %H:%M:%S", &tmv);
    return buf;
}

} // namespace

int Shell::cmd_fetch(const std::vector<std::string>& argv, bool curl_style, std::string& out,
                     std::vector<ShellEvent>& events) {
    bool quiet = false, save_like_wget = !curl_style;
    std::string out_name, save_dir;
    std::vector<std::string> urls;
    for (size_t i = 1; i < argv.size(); i++) {
        const std::string& a = argv[i];
        if (a == "-q" || a == "-s") quiet = true;
        else if (a == "-O" && curl_style) save_like_wget = true;
        else if (a == "-O" && !curl_style && i + 1 < argv.size()) out_name = argv[++i];
        else if (a == "-o" && curl_style && i + 1 < argv.size()) {
            save_like_wget = true;
            out_name = argv[++i];
        } else if (a == "-P" && !curl_style && i + 1 < argv.size()) save_dir = argv[++i];
        else if (!a.empty() && a[0] == '-') continue; // unknown flags ignored
        else urls.push_back(a);
    }
    if (urls.empty()) {
        out += curl_style ? "curl: try 'curl --help' for more information\n"
                          : "wget: missing URL\n";
        return 1;
    }
    int status = 0;
    for (auto url : urls) {
        if (!curl_style && url.find("://") == std::string::npos) url = "http://" + url;
        auto parsed = parse_url(url);
        if (!parsed) {
            out += curl_style ? "curl: (1) Protocol not supported or malformed URL: " + url + "\n"
                              : "wget: unable to parse URL: " + url + "\n";
            status = 1;
            continue;
        }
        FetchResult fetched =
            fetch_ ? fetch_(url) : FetchResult{false, "", false, "Network is unreachable"};
        std::string host_port = parsed->host + ":" + std::to_string(parsed->port);
        if (!curl_style && !quiet)
            out += "--" + wall_ts(clock_()) + "--  " + url + "\nConnecting to " + host_port +
                   "... ";
        if (!fetched.ok) {
            if (curl_style)
                out += "curl: (7) Failed to connect to " + parsed->host + " port " +
                       std::to_string(parsed->port) + ": " + fetched.error + "\n";
            else if (!quiet) out += "failed: " + fetched.error + ".\n";
            else out += "wget: unable to connect: " + fetched.error + "\n";
            status = curl_style ? 7 : 4;
            continue;
        }
        std::string name = out_name.empty() ? url_basename(*parsed) : out_name;
        std::string sizes = std::to_string(fetched.body.size());
        if (!curl_style && !quiet)
            out += "connected.\nHTTP request sent, awaiting response... 200 OK\nLength: " + sizes +
                   " [application/octet-stream]\nSaving to: '" + name + "'\n\n" +
                   wall_ts(clock_()) + " (1.21 MB/s) - '" + name + "' saved [" + sizes + "/" +
                   sizes + "]\n\n";

        if (save_like_wget) {
            std::string full;
            if (!out_name.empty()) {
                full = normalize_path(cwd_, out_name); // -O paths resolve against cwd
            } else {
                std::string dir = save_dir.empty() ? cwd_ : normalize_path(cwd_, save_dir);
                full = dir == "/" ? "/" + name : dir + "/" + name;
            }
            auto target = lookup(full);
            if (std::holds_alternative<VfsNode>(target) && std::get<VfsNode>(target).is_dir) {
                out += curl_style ? "curl: (23) Failed writing body\n"
                                  : "wget: " + full + ": Is a directory\n";
                status = curl_style ? 23 : 3;
                continue;
            }
            std::string dir = parent_of(full);
            auto dir_found = lookup(dir);
            bool file_in_way =
                std::holds_alternative<VfsNode>(dir_found)
                    ? !std::get<VfsNode>(dir_found).is_dir
                    : std::get<LookupError>(dir_found) == LookupError::not_a_directory;
            if (file_in_way) {
                out += curl_style ? "curl: (23) Failed writing body\n"
                                  : "wget: " + dir + ": Not a directory\n";
                status = curl_style ? 23 : 3;
                continue;
            }
            if (std::holds_alternative<LookupError>(dir_found)) {
                // wget creates -P target directories on demand, parents included
                auto segs = split(dir, '/');
                std::string walk;
                for (const auto& seg : segs) {
                    if (seg.empty()) continue;
                    walk += "/" + seg;
                    if (raw_lookup(seed_, overlay_, walk)) continue;
                    VfsNode d;
                    d.is_dir = true;
                    d.mode = "drwxr-xr-x";
                    d.size = 4096;
                    d.mtime_ms = clock_();
                    put_node(walk, d);
                }
            }
            VfsNode f;
            f.mode = "-rw-r--r--";
            f.content = fetched.body;
            f.has_content = true;
            f.size = fetched.body.size();
            f.mtime_ms = clock_();
            put_node(full, f);
        } else {
            out += fetched.body; // bare curl prints the body
        }
        if (artifacts_) {
            auto rec = artifacts_->put(fetched.body, url, fetched.truncated);
            DownloadPayload dp;
            dp.sha256 = rec.sha256;
            dp.url = url;
            dp.size_bytes = fetched.body.size();
            dp.truncated = fetched.truncated;
            events.push_back({SessionEventKind::download, dp});
        }
    }
    return status;
}

} // namespace honeykit
