#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace honeykit {

// One row of the offline IP-range database. Coordinates are optional; they
// only matter for the geojson export.
struct GeoRange {
    uint32_t start_ip = 0;
    uint32_t end_ip = 0;
    std::string country_code; // ISO 3166-1 alpha-2, uppercase
    std::string region;
    std::string city;
    std::optional<double> lat;
    std::optional<double> lon;

    bool operator==(const GeoRange&) const = default;
};

// Sorted by start_ip, non-overlapping. Both guaranteed by load_geo_db.
using GeoDb = std::vector<GeoRange>;

// Binary search for the range containing ip (ends inclusive), nullptr if none.
const GeoRange* geo_lookup(uint32_t ip, const GeoDb& db);
const GeoRange* geo_lookup(const std::string& dotted_quad, const GeoDb& db);

// CSV rows: start_ip,end_ip,country,region,city[,lat,lon]. IPs may be dotted
// quads or plain integers. '#' lines and blank lines are skipped. Throws
// std::runtime_error with the line number on parse errors and with both
// offending ranges on overlap.
GeoDb parse_geo_csv(std::string_view text, const std::string& source_name = "geo csv");
GeoDb load_geo_db(const std::string& path);

} // namespace honeykit
