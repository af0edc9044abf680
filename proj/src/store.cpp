#include "honeykit/store.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "honeykit/geo.hpp"
#include "honeykit/sha256.hpp"
#include "honeykit/util.hpp"

namespace fs = std::filesystem;

namespace honeykit {

std::optional<std::string> remote_ip_of(const EventBody& body) {
    if (const auto* c = std::get_if<ConnectionEvent>(&body)) return c->remote_ip;
    if (const auto* l = std::get_if<LoginAttempt>(&body)) return l->remote_ip;
    if (const auto* s = std::get_if<ShellSession>(&body)) return s->remote_ip;
    if (const auto* d = std::get_if<DownloadRecord>(&body)) return d->remote_ip;
    return std::nullopt;
}

std::optional<uint16_t> local_port_of(const EventBody& body) {
    if (const auto* c = std::get_if<ConnectionEvent>(&body)) return c->local_port;
    return std::nullopt;
}

std::optional<std::string> session_id_of(const EventBody& body) {
    if (const auto* s = std::get_if<ShellSession>(&body)) return s->session_id;
    if (const auto* e = std::get_if<SessionEvent>(&body)) return e->session_id;
    if (const auto* d = std::get_if<DownloadRecord>(&body)) return d->session_id;
    return std::nullopt;
}

std::string mask_final_octet(const std::string& dotted_quad) {
    auto ip = parse_ipv4(dotted_quad);
    if (!ip) return dotted_quad;
    return format_ipv4(*ip & 0xffffff00u);
}

std::string display_ip(const std::string& dotted_quad, bool anonymized) {
    if (!anonymized) return dotted_quad;
    auto ip = parse_ipv4(dotted_quad);
    if (!ip) return dotted_quad;
    uint32_t v = *ip;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.xxx", (v >> 24) & 0xff, (v >> 16) & 0xff,
                  (v >> 8) & 0xff);
    return buf;
}

namespace {

void anonymize_body(EventBody& body) {
    if (auto* c = std::get_if<ConnectionEvent>(&body)) c->remote_ip = mask_final_octet(c->remote_ip);
    else if (auto* l = std::get_if<LoginAttempt>(&body)) l->remote_ip = mask_final_octet(l->remote_ip);
    else if (auto* s = std::get_if<ShellSession>(&body)) s->remote_ip = mask_final_octet(s->remote_ip);
    else if (auto* d = std::get_if<DownloadRecord>(&body)) d->remote_ip = mask_final_octet(d->remote_ip);
}

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) return std::nullopt;
    return buf.str();
}

void append_lines(const std::string& path, const std::vector<std::string>& lines) {
    if (lines.empty()) return;
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw std::runtime_error("cannot open for append: " + path);
    for (const auto& l : lines) out << l << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace

void index_snapshot(StoreSnapshot& snap) {
    snap.by_id.clear();
    snap.by_remote_ip.clear();
    snap.by_local_port.clear();
    for (auto& v : snap.by_hour) v.clear();
    snap.by_session.clear();
    for (size_t i = 0; i < snap.events.size(); i++) {
        const auto& e = snap.events[i];
        snap.by_id.emplace(e.id, i);
        if (auto ip = remote_ip_of(e.body)) snap.by_remote_ip[*ip].push_back(i);
        if (auto port = local_port_of(e.body)) snap.by_local_port[*port].push_back(i);
        if (auto sid = session_id_of(e.body)) snap.by_session[*sid].push_back(i);
        snap.by_hour[hour_of_day(e.ts_ms)].push_back(i);
    }
}

TelemetryStore::TelemetryStore(std::string dir, StoreOptions opts) : dir_(std::move(dir)) {
    fs::create_directories(fs::path(dir_) / "segments");
    fs::path meta_path = fs::path(dir_) / "meta.json";
    if (fs::exists(meta_path)) {
        auto text = read_file(meta_path.string());
        if (!text) throw std::runtime_error("cannot read " + meta_path.string());
        auto meta = nlohmann::json::parse(*text);
        anonymize_ = meta.value("anonymize", false);
        if (anonymize_ != opts.anonymize)
            throw std::runtime_error("store " + dir_ + " was created with anonymize=" +
                                     (anonymize_ ? "true" : "false") +
                                     "; reopen with the same setting");
    } else {
        anonymize_ = opts.anonymize;
        nlohmann::json meta;
        meta["anonymize"] = anonymize_;
        meta["version"] = 1;
        std::ofstream out(meta_path, std::ios::binary);
        out << meta.dump() << '\n';
        if (!out) throw std::runtime_error("cannot write " + meta_path.string());
    }
    load_existing();
}

void TelemetryStore::load_existing() {
    auto snap = std::make_shared<StoreSnapshot>();
    snap->anonymize = anonymize_;
    std::vector<fs::path> segs;
    for (const auto& entry : fs::directory_iterator(fs::path(dir_) / "segments")) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            segs.push_back(entry.path());
    }
    std::sort(segs.begin(), segs.end());
    for (const auto& seg : segs) {
        unsigned num = 0;
        if (std::sscanf(seg.filename().string().c_str(), "seg-%06u.jsonl", &num) == 1)
            next_segment_ = std::max(next_segment_, static_cast<uint64_t>(num) + 1);
        auto text = read_file(seg.string());
        if (!text) throw std::runtime_error("cannot read segment " + seg.string());
        size_t line_no = 0;
        std::istringstream in(*text);
        std::string line;
        while (std::getline(in, line)) {
            line_no++;
            if (line.empty()) continue;
            auto res = decode_event(line);
            if (const auto* err = std::get_if<DecodeError>(&res))
                throw std::runtime_error("corrupt segment " + seg.string() + ":" +
                                         std::to_string(line_no) + ": " + err->detail);
            auto env = std::get<EventEnvelope>(std::move(res));
            if (!snap->by_id.emplace(env.id, snap->events.size()).second)
                throw std::runtime_error("corrupt store: duplicate id " + env.id + " in " +
                                         seg.string());
            snap->events.push_back(std::move(env));
        }
    }
    index_snapshot(*snap);
    std::lock_guard lock(mu_);
    snap_ = std::move(snap);
}

std::shared_ptr<const StoreSnapshot> TelemetryStore::snapshot() const {
    std::lock_guard lock(mu_);
    return snap_;
}

IngestSummary TelemetryStore::ingest(const std::vector<std::string>& paths,
                                     const std::string& quarantine_path) {
    std::lock_guard lock(mu_);
    IngestSummary sum;
    std::vector<EventEnvelope> fresh;
    std::vector<std::string> fresh_lines;
    std::vector<std::string> rejects;
    std::vector<std::string> ledger_lines;
    std::unordered_map<std::string, size_t> batch_ids;

    for (const auto& path : paths) {
        auto text = read_file(path);
        if (!text) {
            sum.file_errors.push_back(path + ": cannot read file");
            continue;
        }
        uint64_t file_new = 0, file_dup = 0, file_bad = 0;
        std::istringstream in(*text);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            auto res = decode_event(line);
            if (std::holds_alternative<DecodeError>(res)) {
                file_bad++;
                rejects.push_back(line);
                continue;
            }
            auto env = std::get<EventEnvelope>(std::move(res));
            if (snap_->by_id.count(env.id) || batch_ids.count(env.id)) {
                file_dup++;
                continue;
            }
            if (anonymize_) anonymize_body(env.body);
            batch_ids.emplace(env.id, fresh.size());
            fresh_lines.push_back(encode_event(env));
            fresh.push_back(std::move(env));
            file_new++;
        }
        sum.new_events += file_new;
        sum.duplicates += file_dup;
        sum.malformed += file_bad;
        nlohmann::json entry;
        entry["digest"] = sha256_hex(*text);
        entry["duplicate"] = file_dup;
        entry["malformed"] = file_bad;
        entry["new"] = file_new;
        entry["path"] = path;
        ledger_lines.push_back(entry.dump());
    }

    if (!fresh_lines.empty()) {
        char name[32];
        std::snprintf(name, sizeof(name), "seg-%06llu.jsonl",
                      static_cast<unsigned long long>(next_segment_));
        fs::path final_path = fs::path(dir_) / "segments" / name;
        fs::path tmp_path = fs::path(dir_) / "segments" / (std::string(".tmp-") + name);
        {
            std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write segment " + tmp_path.string());
            for (const auto& l : fresh_lines) out << l << '\n';
            out.flush();
            if (!out) throw std::runtime_error("write failed: " + tmp_path.string());
        }
        fs::rename(tmp_path, final_path);
        next_segment_++;
    }
    append_lines(quarantine_path.empty() ? (fs::path(dir_) / "quarantine.jsonl").string()
                                         : quarantine_path,
                 rejects);
    append_lines((fs::path(dir_) / "ledger.jsonl").string(), ledger_lines);

    if (!fresh.empty()) {
        auto next = std::make_shared<StoreSnapshot>(*snap_);
        for (auto& env : fresh) next->events.push_back(std::move(env));
        index_snapshot(*next);
        snap_ = std::move(next);
    }
    return sum;
}

std::optional<std::string> TelemetryStore::geo_db_path() const {
    fs::path p = fs::path(dir_) / "geo.csv";
    if (fs::exists(p)) return p.string();
    return std::nullopt;
}

void TelemetryStore::install_geo_db(const std::string& csv_path) {
    auto text = read_file(csv_path);
    if (!text) throw std::runtime_error("cannot read geo csv: " + csv_path);
    parse_geo_csv(*text, csv_path); // reject malformed data before installing
    fs::path target = fs::path(dir_) / "geo.csv";
    fs::path tmp = fs::path(dir_) / ".tmp-geo.csv";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << *text;
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.close();
    fs::rename(tmp, target);
}

} // namespace honeykit
