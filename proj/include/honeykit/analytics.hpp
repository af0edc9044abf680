#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "honeykit/geo.hpp"
#include "honeykit/store.hpp"

namespace honeykit {

// Percent values are carried as integer basis points (7752 = 77.52%) so the
// half-up rounding is exact and exports are byte-deterministic.
int64_t percent_bp(uint64_t count, uint64_t total);
std::string format_percent_bp(int64_t bp);

struct ReportRow {
    std::string key;
    uint64_t count = 0;
    int64_t percent_bp = 0;
    std::optional<double> lat;
    std::optional<double> lon;

    bool operator==(const ReportRow&) const = default;
};

// Rows sorted by count descending, ties by key ascending. `total` is the sum
// over the untruncated row set, so truncated tables keep the original shares.
struct ReportTable {
    std::string dimension;
    uint64_t total = 0;
    std::vector<ReportRow> rows;
    bool geo = false;

    bool operator==(const ReportTable&) const = default;
};

// Build a table from (key,count) pairs: sorts, totals, computes percents,
// then keeps the top k rows if k is set. Duplicate keys are kept as-is.
ReportTable make_table(std::string dimension, std::vector<std::pair<std::string, uint64_t>> counts,
                       std::optional<size_t> k = std::nullopt);

// Keyed `port/label`, one row per (local_port, service_label) over every
// connection event regardless of outcome.
ReportTable breakdown_by_port(const StoreSnapshot& snap, std::optional<size_t> k = std::nullopt);

// Bin = hour of (ts + offset); offset must lie in [-720, 840] minutes.
// `kind` narrows to one event kind; nullopt bins every event.
std::array<uint64_t, 24> hour_of_day_histogram(const StoreSnapshot& snap, int tz_offset_min = 0,
                                               std::optional<EventKind> kind = std::nullopt);

// Completed connections only, grouped by stored remote IP; key rendered as
// "<ip> (<country>)" with `unknown` when the geo db has no match. Carries
// coordinates when the db provides them (feeds the geojson export).
ReportTable top_sources(const StoreSnapshot& snap, std::optional<size_t> k, const GeoDb& db);

// The stored source IPs in top_sources order — the join key list for
// downloads_per_source.
std::vector<std::string> top_source_ips(const StoreSnapshot& snap, std::optional<size_t> k);

struct DownloadJoinRow {
    std::string key; // source IP, or "(orphan)"
    uint64_t connections = 0; // completed connections from that source
    uint64_t downloads = 0;

    bool operator==(const DownloadJoinRow&) const = default;
};

// One row per source key in the given order. Downloads from addresses with
// no connection events at all are aggregated under a trailing "(orphan)" row.
std::vector<DownloadJoinRow> downloads_per_source(const StoreSnapshot& snap,
                                                  const std::vector<std::string>& source_keys);

enum class CredField { username, password, pair };

// Case-sensitive exact byte counting; keys rendered with hex escapes, pairs
// as "user:password" (counted on the raw pair before rendering).
ReportTable top_credentials(const StoreSnapshot& snap, std::optional<size_t> k, CredField field);

// Password length in raw bytes over every login attempt.
std::map<uint64_t, uint64_t> password_length_histogram(const StoreSnapshot& snap);

// Full raw command lines, counted per invocation.
ReportTable top_commands(const StoreSnapshot& snap, std::optional<size_t> k = std::nullopt);

struct ArtifactRow {
    std::string sha256;
    uint64_t size_bytes = 0;
    uint64_t ref_count = 0;
    int64_t first_seen_ms = 0;

    bool operator==(const ArtifactRow&) const = default;
};

struct ArtifactReport {
    uint64_t unique_count = 0;
    std::vector<ArtifactRow> rows; // ref_count desc, sha256 asc

    bool operator==(const ArtifactReport&) const = default;
};

ArtifactReport unique_artifacts(const StoreSnapshot& snap);

enum class ExportFormat { csv, json, ascii_bar, geojson };
std::optional<ExportFormat> export_format_from_string(std::string_view s);

// All exports are pure functions of their input. geojson requires a geo
// table and emits Point features for rows that resolved to coordinates;
// anything else raises std::invalid_argument.
std::string export_table(const ReportTable& table, ExportFormat fmt);
std::string export_hours(const std::array<uint64_t, 24>& bins, ExportFormat fmt);
std::string export_lengths(const std::map<uint64_t, uint64_t>& bins, ExportFormat fmt);
std::string export_join(const std::vector<DownloadJoinRow>& rows, ExportFormat fmt);
std::string export_artifacts(const ArtifactReport& report, ExportFormat fmt);

} // namespace honeykit
