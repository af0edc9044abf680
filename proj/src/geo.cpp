#include "honeykit/geo.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "honeykit/util.hpp"

namespace honeykit {

const GeoRange* geo_lookup(uint32_t ip, const GeoDb& db) {
    auto it = std::upper_bound(db.begin(), db.end(), ip,
                               [](uint32_t v, const GeoRange& r) { return v < r.start_ip; });
    if (it == db.begin()) return nullptr;
    --it;
    return ip <= it->end_ip ? &*it : nullptr;
}

const GeoRange* geo_lookup(const std::string& dotted_quad, const GeoDb& db) {
    auto ip = parse_ipv4(dotted_quad);
    if (!ip) return nullptr;
    return geo_lookup(*ip, db);
}

namespace {

[[noreturn]] void fail(const std::string& source, size_t line_no, const std::string& what) {
    throw std::runtime_error(source + ":" + std::to_string(line_no) + ": " + what);
}

uint32_t parse_ip_field(const std::string& source, size_t line_no, const std::string& field) {
    std::string s(trim(field));
    if (s.find('.') != std::string::npos) {
        auto ip = parse_ipv4(s);
        if (!ip) fail(source, line_no, "bad IPv4 '" + s + "'");
        return *ip;
    }
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        fail(source, line_no, "bad IP integer '" + s + "'");
    errno = 0;
    char* end = nullptr;
    unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (errno != 0 || *end != '\0' || v > 0xffffffffULL)
        fail(source, line_no, "IP integer out of range '" + s + "'");
    return static_cast<uint32_t>(v);
}

double parse_coord(const std::string& source, size_t line_no, const std::string& field,
                   double lo, double hi, const char* name) {
    std::string s(trim(field));
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || errno != 0 || end != s.c_str() + s.size() || v < lo || v > hi)
        fail(source, line_no, std::string("bad ") + name + " '" + s + "'");
    return v;
}

std::string describe(const GeoRange& r) {
    return format_ipv4(r.start_ip) + "-" + format_ipv4(r.end_ip) + " (" + r.country_code + ")";
}

} // namespace

GeoDb parse_geo_csv(std::string_view text, const std::string& source_name) {
    GeoDb db;
    size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        line_no++;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto fields = split_csv_line(line);
        if (!fields) fail(source_name, line_no, "unbalanced quotes");
        if (fields->size() != 5 && fields->size() != 7)
            fail(source_name, line_no,
                 "expected 5 or 7 fields, got " + std::to_string(fields->size()));
        GeoRange r;
        r.start_ip = parse_ip_field(source_name, line_no, (*fields)[0]);
        r.end_ip = parse_ip_field(source_name, line_no, (*fields)[1]);
        if (r.start_ip > r.end_ip) fail(source_name, line_no, "start_ip > end_ip");
        std::string cc(trim((*fields)[2]));
        if (cc.size() != 2 || !std::isalpha((unsigned char)cc[0]) ||
            !std::isalpha((unsigned char)cc[1]))
            fail(source_name, line_no, "country code must be two letters, got '" + cc + "'");
        r.country_code = {static_cast<char>(std::toupper((unsigned char)cc[0])),
                          static_cast<char>(std::toupper((unsigned char)cc[1]))};
        r.region = std::string(trim((*fields)[3]));
        r.city = std::string(trim((*fields)[4]));
        if (fields->size() == 7) {
            r.lat = parse_coord(source_name, line_no, (*fields)[5], -90.0, 90.0, "latitude");
            r.lon = parse_coord(source_name, line_no, (*fields)[6], -180.0, 180.0, "longitude");
        }
        db.push_back(std::move(r));
    }
    std::stable_sort(db.begin(), db.end(),
                     [](const GeoRange& a, const GeoRange& b) { return a.start_ip < b.start_ip; });
    for (size_t i = 1; i < db.size(); i++) {
        if (db[i].start_ip <= db[i - 1].end_ip)
            throw std::runtime_error(source_name + ": overlapping ranges " +
                                     describe(db[i - 1]) + " and " + describe(db[i]));
    }
    return db;
}

GeoDb load_geo_db(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open geo db: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_geo_csv(buf.str(), path);
}

} // namespace honeykit
