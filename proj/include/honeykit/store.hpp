#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "honeykit/event.hpp"

namespace honeykit {

struct IngestSummary {
    uint64_t new_events = 0;
    uint64_t duplicates = 0;
    uint64_t malformed = 0;
    std::vector<std::string> file_errors;

    bool operator==(const IngestSummary&) const = default;
};

// Immutable view over everything ingested so far. Indexes hold positions
// into `events`; events that lack the keyed field are simply absent.
struct StoreSnapshot {
    bool anonymize = false;
    std::vector<EventEnvelope> events;
    std::unordered_map<std::string, size_t> by_id;
    std::map<std::string, std::vector<size_t>> by_remote_ip;
    std::map<uint16_t, std::vector<size_t>> by_local_port;
    std::array<std::vector<size_t>, 24> by_hour;
    std::map<std::string, std::vector<size_t>> by_session;
};

// Field extractors shared by the indexes and by analytics.
std::optional<std::string> remote_ip_of(const EventBody& body);
std::optional<uint16_t> local_port_of(const EventBody& body);
std::optional<std::string> session_id_of(const EventBody& body);

// Zero the final octet: 93.114.45.13 -> 93.114.45.0.
std::string mask_final_octet(const std::string& dotted_quad);
// Render for reports; anonymized stores show a.b.c.xxx.
std::string display_ip(const std::string& dotted_quad, bool anonymized);

struct StoreOptions {
    bool anonymize = false;
};

// Append-only on-disk event store:
//   <dir>/meta.json            store-wide flags
//   <dir>/segments/seg-*.jsonl one per ingest batch, renamed into place
//   <dir>/ledger.jsonl         one line per ingested source file
//   <dir>/quarantine.jsonl     rejected input lines (default location)
// Single writer; snapshot() hands out an immutable shared view.
class TelemetryStore {
public:
    // Opens an existing store or creates one. If the store exists, its
    // recorded anonymize flag must match opts (std::runtime_error otherwise).
    TelemetryStore(std::string dir, StoreOptions opts = {});

    IngestSummary ingest(const std::vector<std::string>& paths,
                         const std::string& quarantine_path = "");

    std::shared_ptr<const StoreSnapshot> snapshot() const;

    const std::string& dir() const { return dir_; }
    bool anonymize() const { return anonymize_; }
    // Path of the geo db installed by geo-import, if present.
    std::optional<std::string> geo_db_path() const;
    void install_geo_db(const std::string& csv_path);

private:
    std::string dir_;
    bool anonymize_ = false;
    mutable std::mutex mu_;
    std::shared_ptr<const StoreSnapshot> snap_;
    uint64_t next_segment_ = 1;

    void load_existing();
    void append_events(const std::vector<EventEnvelope>& fresh);
};

// Rebuild all indexes from the event list (also the test oracle's helper).
void index_snapshot(StoreSnapshot& snap);

} // namespace honeykit
