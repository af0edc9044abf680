#include "honeykit/analytics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "honeykit/util.hpp"

namespace honeykit {

int64_t percent_bp(uint64_t count, uint64_t total) {
    if (total == 0) return 0;
    return static_cast<int64_t>((count * 20000 + total) / (2 * total));
}

std::string format_percent_bp(int64_t bp) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld.%02lld", static_cast<long long>(bp / 100),
                  static_cast<long long>(bp % 100));
    return buf;
}

ReportTable make_table(std::string dimension, std::vector<std::pair<std::string, uint64_t>> counts,
                       std::optional<size_t> k) {
    std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    ReportTable t;
    t.dimension = std::move(dimension);
    for (const auto& [key, count] : counts) t.total += count;
    for (const auto& [key, count] : counts) {
        if (k && t.rows.size() >= *k) break;
        t.rows.push_back({key, count, percent_bp(count, t.total), std::nullopt, std::nullopt});
    }
    return t;
}

ReportTable breakdown_by_port(const StoreSnapshot& snap, std::optional<size_t> k) {
    std::map<std::string, uint64_t> counts;
    for (const auto& e : snap.events) {
        const auto* c = std::get_if<ConnectionEvent>(&e.body);
        if (!c) continue;
        counts[std::to_string(c->local_port) + "/" + c->service_label]++;
    }
    return make_table("ports", {counts.begin(), counts.end()}, k);
}

std::array<uint64_t, 24> hour_of_day_histogram(const StoreSnapshot& snap, int tz_offset_min,
                                               std::optional<EventKind> kind) {
    if (tz_offset_min < -720 || tz_offset_min > 840)
        throw std::invalid_argument("tz offset out of range [-720, 840]: " +
                                    std::to_string(tz_offset_min));
    std::array<uint64_t, 24> bins{};
    for (const auto& e : snap.events) {
        if (kind && e.kind != *kind) continue;
        bins[hour_of_day(e.ts_ms, tz_offset_min)]++;
    }
    return bins;
}

namespace {

struct SourceCount {
    std::string ip;
    uint64_t count = 0;
};

// Completed connections per stored source IP, in final report order. Ties
// sort by stored IP, which matches rendered-key order because the rendered
// key starts with the IP and ' ' sorts below any IP character.
std::vector<SourceCount> completed_by_source(const StoreSnapshot& snap) {
    std::map<std::string, uint64_t> counts;
    for (const auto& e : snap.events) {
        const auto* c = std::get_if<ConnectionEvent>(&e.body);
        if (c && c->outcome == ConnOutcome::completed) counts[c->remote_ip]++;
    }
    std::vector<SourceCount> out;
    for (const auto& [ip, count] : counts) out.push_back({ip, count});
    std::sort(out.begin(), out.end(), [](const SourceCount& a, const SourceCount& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.ip < b.ip;
    });
    return out;
}

} // namespace

ReportTable top_sources(const StoreSnapshot& snap, std::optional<size_t> k, const GeoDb& db) {
    auto sources = completed_by_source(snap);
    ReportTable t;
    t.dimension = "sources";
    t.geo = true;
    for (const auto& s : sources) t.total += s.count;
    for (const auto& s : sources) {
        if (k && t.rows.size() >= *k) break;
        const GeoRange* range = geo_lookup(s.ip, db);
        ReportRow row;
        row.key = display_ip(s.ip, snap.anonymize) + " (" +
                  (range ? range->country_code : std::string("unknown")) + ")";
        row.count = s.count;
        row.percent_bp = percent_bp(s.count, t.total);
        if (range && range->lat && range->lon) {
            row.lat = range->lat;
            row.lon = range->lon;
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::vector<std::string> top_source_ips(const StoreSnapshot& snap, std::optional<size_t> k) {
    auto sources = completed_by_source(snap);
    std::vector<std::string> out;
    for (const auto& s : sources) {
        if (k && out.size() >= *k) break;
        out.push_back(s.ip);
    }
    return out;
}

std::vector<DownloadJoinRow> downloads_per_source(const StoreSnapshot& snap,
                                                  const std::vector<std::string>& source_keys) {
    std::map<std::string, uint64_t> completed;
    std::set<std::string> seen_in_connections;
    std::map<std::string, uint64_t> downloads;
    for (const auto& e : snap.events) {
        if (const auto* c = std::get_if<ConnectionEvent>(&e.body)) {
            seen_in_connections.insert(c->remote_ip);
            if (c->outcome == ConnOutcome::completed) completed[c->remote_ip]++;
        } else if (const auto* d = std::get_if<DownloadRecord>(&e.body)) {
            downloads[d->remote_ip]++;
        }
    }
    std::vector<DownloadJoinRow> rows;
    for (const auto& key : source_keys) {
        DownloadJoinRow row;
        row.key = key;
        if (auto it = completed.find(key); it != completed.end()) row.connections = it->second;
        if (auto it = downloads.find(key); it != downloads.end()) row.downloads = it->second;
        rows.push_back(std::move(row));
    }
    uint64_t orphaned = 0;
    for (const auto& [ip, n] : downloads)
        if (!seen_in_connections.count(ip)) orphaned += n;
    if (orphaned > 0) rows.push_back({"(orphan)", 0, orphaned});
    return rows;
}

ReportTable top_credentials(const StoreSnapshot& snap, std::optional<size_t> k, CredField field) {
    std::map<std::pair<std::string, std::string>, uint64_t> pairs;
    std::map<std::string, uint64_t> singles;
    for (const auto& e : snap.events) {
        const auto* la = std::get_if<LoginAttempt>(&e.body);
        if (!la) continue;
        switch (field) {
        case CredField::username: singles[la->username]++; break;
        case CredField::password: singles[la->password]++; break;
        case CredField::pair: pairs[{la->username, la->password}]++; break;
        }
    }
    std::vector<std::pair<std::string, uint64_t>> counts;
    const char* dimension = "credentials";
    if (field == CredField::pair) {
        for (const auto& [key, n] : pairs)
            counts.emplace_back(render_bytes(key.first) + ":" + render_bytes(key.second), n);
    } else {
        dimension = field == CredField::username ? "usernames" : "passwords";
        for (const auto& [key, n] : singles) counts.emplace_back(render_bytes(key), n);
    }
    return make_table(dimension, std::move(counts), k);
}

std::map<uint64_t, uint64_t> password_length_histogram(const StoreSnapshot& snap) {
    std::map<uint64_t, uint64_t> bins;
    for (const auto& e : snap.events)
        if (const auto* la = std::get_if<LoginAttempt>(&e.body)) bins[la->password.size()]++;
    return bins;
}

ReportTable top_commands(const StoreSnapshot& snap, std::optional<size_t> k) {
    std::map<std::string, uint64_t> counts;
    for (const auto& e : snap.events) {
        const auto* se = std::get_if<SessionEvent>(&e.body);
        if (!se || se->kind != SessionEventKind::command) continue;
        counts[std::get<CommandPayload>(se->payload).line]++;
    }
    std::vector<std::pair<std::string, uint64_t>> rendered;
    for (const auto& [line, n] : counts) rendered.emplace_back(render_bytes(line), n);
    return make_table("commands", std::move(rendered), k);
}

ArtifactReport unique_artifacts(const StoreSnapshot& snap) {
    std::map<std::string, ArtifactRow> by_sha;
    for (const auto& e : snap.events) {
        const auto* d = std::get_if<DownloadRecord>(&e.body);
        if (!d) continue;
        auto [it, fresh] = by_sha.try_emplace(d->sha256);
        auto& row = it->second;
        if (fresh) {
            row.sha256 = d->sha256;
            row.size_bytes = d->size_bytes;
            row.first_seen_ms = e.ts_ms;
            row.ref_count = 1;
        } else {
            row.ref_count++;
            if (e.ts_ms < row.first_seen_ms) {
                row.first_seen_ms = e.ts_ms;
                row.size_bytes = d->size_bytes;
            }
        }
    }
    ArtifactReport report;
    report.unique_count = by_sha.size();
    for (const auto& [sha, row] : by_sha) report.rows.push_back(row);
    std::sort(report.rows.begin(), report.rows.end(), [](const ArtifactRow& a, const ArtifactRow& b) {
        if (a.ref_count != b.ref_count) return a.ref_count > b.ref_count;
        return a.sha256 < b.sha256;
    });
    return report;
}

std::optional<ExportFormat> export_format_from_string(std::string_view s) {
    if (s == "csv") return ExportFormat::csv;
    if (s == "json") return ExportFormat::json;
    if (s == "ascii_bar") return ExportFormat::ascii_bar;
    if (s == "geojson") return ExportFormat::geojson;
    return std::nullopt;
}

namespace {

std::string truncate_key(const std::string& key) {
    if (key.size() <= 48) return key;
    return key.substr(0, 46) + "..";
}

// Shared bar renderer: key, count, optional percent column, 40-char bar
// scaled to the largest count.
std::string render_bars(const std::vector<std::tuple<std::string, uint64_t, std::string>>& rows) {
    size_t keyw = 0, cntw = 1, pctw = 0;
    uint64_t max_count = 0;
    for (const auto& [key, count, pct] : rows) {
        keyw = std::max(keyw, truncate_key(key).size());
        cntw = std::max(cntw, std::to_string(count).size());
        pctw = std::max(pctw, pct.size());
        max_count = std::max(max_count, count);
    }
    std::string out;
    for (const auto& [key, count, pct] : rows) {
        std::string k = truncate_key(key);
        out += k + std::string(keyw - k.size(), ' ');
        std::string c = std::to_string(count);
        out += "  " + std::string(cntw - c.size(), ' ') + c;
        if (pctw > 0) out += "  " + std::string(pctw - pct.size(), ' ') + pct;
        size_t bar = max_count == 0 ? 0 : static_cast<size_t>(count * 40 / max_count);
        out += "  |" + std::string(bar, '#') + "\n";
    }
    return out;
}

[[noreturn]] void reject_format(const char* what) {
    throw std::invalid_argument(std::string("unsupported export format for ") + what);
}

} // namespace

std::string export_table(const ReportTable& table, ExportFormat fmt) {
    switch (fmt) {
    case ExportFormat::csv: {
        std::string out = "key,count,percent\n";
        for (const auto& r : table.rows)
            out += csv_escape(r.key) + "," + std::to_string(r.count) + "," +
                   format_percent_bp(r.percent_bp) + "\n";
        return out;
    }
    case ExportFormat::json: {
        nlohmann::json j;
        j["dimension"] = table.dimension;
        j["total"] = table.total;
        j["rows"] = nlohmann::json::array();
        for (const auto& r : table.rows) {
            nlohmann::json row;
            row["key"] = r.key;
            row["count"] = r.count;
            row["percent"] = r.percent_bp / 100.0;
            if (r.lat && r.lon) {
                row["lat"] = *r.lat;
                row["lon"] = *r.lon;
            }
            j["rows"].push_back(std::move(row));
        }
        return j.dump() + "\n";
    }
    case ExportFormat::ascii_bar: {
        std::vector<std::tuple<std::string, uint64_t, std::string>> rows;
        for (const auto& r : table.rows)
            rows.emplace_back(r.key, r.count, format_percent_bp(r.percent_bp) + "%");
        return render_bars(rows);
    }
    case ExportFormat::geojson: {
        if (!table.geo) throw std::invalid_argument("geojson export requires a geo table");
        nlohmann::json features = nlohmann::json::array();
        for (const auto& r : table.rows) {
            if (!r.lat || !r.lon) continue;
            nlohmann::json f;
            f["type"] = "Feature";
            f["geometry"]["type"] = "Point";
            f["geometry"]["coordinates"] = {*r.lon, *r.lat};
            f["properties"]["key"] = r.key;
            f["properties"]["count"] = r.count;
            f["properties"]["percent"] = r.percent_bp / 100.0;
            features.push_back(std::move(f));
        }
        nlohmann::json j;
        j["type"] = "FeatureCollection";
        j["features"] = std::move(features);
        return j.dump() + "\n";
    }
    }
    reject_format("table");
}

std::string export_hours(const std::array<uint64_t, 24>& bins, ExportFormat fmt) {
    switch (fmt) {
    case ExportFormat::csv: {
        std::string out = "hour,count\n";
        for (int h = 0; h < 24; h++) {
            char key[8];
            std::snprintf(key, sizeof(key), "%02d", h);
            out += std::string(key) + "," + std::to_string(bins[h]) + "\n";
        }
        return out;
    }
    case ExportFormat::json: {
        nlohmann::json j;
        j["dimension"] = "hour_of_day";
        j["bins"] = bins;
        return j.dump() + "\n";
    }
    case ExportFormat::ascii_bar: {
        std::vector<std::tuple<std::string, uint64_t, std::string>> rows;
        for (int h = 0; h < 24; h++) {
            char key[8];
            std::snprintf(key, sizeof(key), "%02d", h);
            rows.emplace_back(key, bins[h], "");
        }
        return render_bars(rows);
    }
    default: reject_format("hour histogram");
    }
}

std::string export_lengths(const std::map<uint64_t, uint64_t>& bins, ExportFormat fmt) {
    switch (fmt) {
    case ExportFormat::csv: {
        std::string out = "length,count\n";
        for (const auto& [len, n] : bins) out += std::to_string(len) + "," + std::to_string(n) + "\n";
        return out;
    }
    case ExportFormat::json: {
        nlohmann::json j;
        j["dimension"] = "password_length";
        j["bins"] = nlohmann::json::array();
        for (const auto& [len, n] : bins) {
            nlohmann::json row;
            row["length"] = len;
            row["count"] = n;
            j["bins"].push_back(std::move(row));
        }
        return j.dump() + "\n";
    }
    case ExportFormat::ascii_bar: {
        std::vector<std::tuple<std::string, uint64_t, std::string>> rows;
        for (const auto& [len, n] : bins) rows.emplace_back(std::to_string(len), n, "");
        return render_bars(rows);
    }
    default: reject_format("length histogram");
    }
}

std::string export_join(const std::vector<DownloadJoinRow>& rows, ExportFormat fmt) {
    switch (fmt) {
    case ExportFormat::csv: {
        std::string out = "source,connections,downloads\n";
        for (const auto& r : rows)
            out += csv_escape(r.key) + "," + std::to_string(r.connections) + "," +
                   std::to_string(r.downloads) + "\n";
        return out;
    }
    case ExportFormat::json: {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : rows) {
            nlohmann::json row;
            row["source"] = r.key;
            row["connections"] = r.connections;
            row["downloads"] = r.downloads;
            j.push_back(std::move(row));
        }
        return j.dump() + "\n";
    }
    case ExportFormat::ascii_bar: {
        std::vector<std::tuple<std::string, uint64_t, std::string>> bars;
        for (const auto& r : rows)
            bars.emplace_back(r.key, r.downloads, std::to_string(r.connections) + " conns");
        return render_bars(bars);
    }
    default: reject_format("download join");
    }
}

std::string export_artifacts(const ArtifactReport& report, ExportFormat fmt) {
    switch (fmt) {
    case ExportFormat::csv: {
        std::string out = "sha256,size_bytes,ref_count,first_seen\n";
        for (const auto& r : report.rows)
            out += r.sha256 + "," + std::to_string(r.size_bytes) + "," +
                   std::to_string(r.ref_count) + "," + format_ts_ms(r.first_seen_ms) + "\n";
        return out;
    }
    case ExportFormat::json: {
        nlohmann::json j;
        j["unique"] = report.unique_count;
        j["rows"] = nlohmann::json::array();
        for (const auto& r : report.rows) {
            nlohmann::json row;
            row["sha256"] = r.sha256;
            row["size_bytes"] = r.size_bytes;
            row["ref_count"] = r.ref_count;
            row["first_seen"] = format_ts_ms(r.first_seen_ms);
            j["rows"].push_back(std::move(row));
        }
        return j.dump() + "\n";
    }
    case ExportFormat::ascii_bar: {
        std::vector<std::tuple<std::string, uint64_t, std::string>> bars;
        for (const auto& r : report.rows)
            bars.emplace_back(r.sha256, r.ref_count, std::to_string(r.size_bytes) + " B");
        return render_bars(bars);
    }
    default: reject_format("artifact report");
    }
}

} // namespace honeykit
