#include "honeykit/util.hpp"

#include <cstdio>
#include <cstring>
#include <ctime>

namespace honeykit {

static const char kHexDigits[] = "0123456789abcdef";

std::string hex_encode(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out.push_back(kHexDigits[c >> 4]);
        out.push_back(kHexDigits[c & 0xf]);
    }
    return out;
}

static int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::optional<std::string> hex_decode(std::string_view hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    std::string out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_val(hex[i]);
        int lo = hex_val(hex[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<char>((hi << 4) | lo));
    }
    return out;
}

bool is_valid_utf8(std::string_view s) {
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = s[i];
        size_t len;
        uint32_t cp;
        if (c < 0x80) {
            i++;
            continue;
        } else if ((c & 0xe0) == 0xc0) {
            len = 2;
            cp = c & 0x1f;
        } else if ((c & 0xf0) == 0xe0) {
            len = 3;
            cp = c & 0x0f;
        } else if ((c & 0xf8) == 0xf0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > s.size()) return false;
        for (size_t j = 1; j < len; j++) {
            unsigned char cc = s[i + j];
            if ((cc & 0xc0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3f);
        }
        // overlong forms, surrogates and out-of-range code points are invalid
        if (len == 2 && cp < 0x80) return false;
        if (len == 3 && cp < 0x800) return false;
        if (len == 4 && cp < 0x10000) return false;
        if (cp > 0x10ffff) return false;
        if (cp >= 0xd800 && cp <= 0xdfff) return false;
        i += len;
    }
    return true;
}

bool is_token(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

std::optional<uint32_t> parse_ipv4(std::string_view s) {
    uint32_t parts[4];
    int part = 0;
    size_t i = 0;
    while (part < 4) {
        if (i >= s.size() || s[i] < '0' || s[i] > '9') return std::nullopt;
        uint32_t v = 0;
        size_t digits = 0;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
            v = v * 10 + (s[i] - '0');
            if (v > 255) return std::nullopt;
            digits++;
            if (digits > 3) return std::nullopt;
            i++;
        }
        parts[part++] = v;
        if (part < 4) {
            if (i >= s.size() || s[i] != '.') return std::nullopt;
            i++;
        }
    }
    if (i != s.size()) return std::nullopt;
    return (parts[0] << 24) | (parts[1] << 16) | (parts[2] << 8) | parts[3];
}

std::string format_ipv4(uint32_t ip) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (ip >> 24) & 0xff, (ip >> 16) & 0xff,
                  (ip >> 8) & 0xff, ip & 0xff);
    return buf;
}

std::string format_ts_ms(int64_t epoch_ms) {
    time_t secs = static_cast<time_t>(epoch_ms / 1000);
    int ms = static_cast<int>(epoch_ms % 1000);
    if (ms < 0) {
        ms += 1000;
        secs -= 1;
    }
    struct tm tm_utc;
    gmtime_r(&secs, &tm_utc);
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm_utc.tm_year + 1900,
                  tm_utc.tm_mon + 1, tm_utc.tm_mday, tm_utc.tm_hour, tm_utc.tm_min, tm_utc.tm_sec,
                  ms);
    return buf;
}

std::optional<int64_t> parse_ts_ms(std::string_view s) {
    // strict: YYYY-MM-DDTHH:MM:SS.mmmZ
    if (s.size() != 24 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' ||
        s[16] != ':' || s[19] != '.' || s[23] != 'Z')
        return std::nullopt;
    auto num = [&](size_t pos, size_t len) -> int {
        int v = 0;
        for (size_t i = pos; i < pos + len; i++) {
            if (s[i] < '0' || s[i] > '9') return -1;
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    int year = num(0, 4), mon = num(5, 2), day = num(8, 2);
    int hour = num(11, 2), min = num(14, 2), sec = num(17, 2), ms = num(20, 3);
    if (year < 0 || mon < 1 || mon > 12 || day < 1 || day > 31 || hour < 0 || hour > 23 ||
        min < 0 || min > 59 || sec < 0 || sec > 60 || ms < 0)
        return std::nullopt;
    struct tm tm_utc;
    std::memset(&tm_utc, 0, sizeof(tm_utc));
    tm_utc.tm_year = year - 1900;
    tm_utc.tm_mon = mon - 1;
    tm_utc.tm_mday = day;
    tm_utc.tm_hour = hour;
    tm_utc.tm_min = min;
    tm_utc.tm_sec = sec;
    // timegm normalizes its argument, so keep the requested date to compare
    int want_year = tm_utc.tm_year, want_mon = tm_utc.tm_mon, want_mday = tm_utc.tm_mday;
    time_t secs = timegm(&tm_utc);
    if (secs == static_cast<time_t>(-1)) return std::nullopt;
    // round-trip check catches out-of-range days like Feb 30
    struct tm back;
    gmtime_r(&secs, &back);
    if (back.tm_year != want_year || back.tm_mon != want_mon || back.tm_mday != want_mday)
        return std::nullopt;
    return static_cast<int64_t>(secs) * 1000 + ms;
}

std::string bytes_to_json_string(std::string_view bytes) {
    if (is_valid_utf8(bytes) && bytes.substr(0, 4) != "hex:") return std::string(bytes);
    return "hex:" + hex_encode(bytes);
}

std::optional<std::string> bytes_from_json_string(std::string_view s) {
    if (s.substr(0, 4) == "hex:") return hex_decode(s.substr(4));
    if (!is_valid_utf8(s)) return std::nullopt;
    return std::string(s);
}

std::string render_bytes(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size());
    size_t i = 0;
    while (i < bytes.size()) {
        unsigned char c = bytes[i];
        if (c == '\\') {
            out += "\\\\";
            i++;
        } else if (c >= 0x20 && c < 0x7f) {
            out.push_back(static_cast<char>(c));
            i++;
        } else if (c >= 0x80) {
            // copy a whole valid UTF-8 sequence, else escape the byte
            size_t len = (c & 0xe0) == 0xc0 ? 2 : (c & 0xf0) == 0xe0 ? 3 : (c & 0xf8) == 0xf0 ? 4 : 0;
            if (len > 0 && i + len <= bytes.size() && is_valid_utf8(bytes.substr(i, len))) {
                out.append(bytes.substr(i, len));
                i += len;
                continue;
            }
            char buf[5];
            std::snprintf(buf, sizeof(buf), "\\x%02x", c);
            out += buf;
            i++;
        } else {
            char buf[5];
            std::snprintf(buf, sizeof(buf), "\\x%02x", c);
            out += buf;
            i++;
        }
    }
    return out;
}

std::optional<std::vector<std::string>> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    i += 2;
                } else {
                    quoted = false;
                    i++;
                }
            } else {
                cur.push_back(c);
                i++;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
            i++;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            i++;
        } else {
            cur.push_back(c);
            i++;
        }
    }
    if (quoted) return std::nullopt;
    fields.push_back(std::move(cur));
    return fields;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

int hour_of_day(int64_t epoch_ms, int utc_offset_min) {
    int64_t shifted = epoch_ms + static_cast<int64_t>(utc_offset_min) * 60000;
    int64_t day = 24LL * 3600000LL;
    int64_t rem = shifted % day;
    if (rem < 0) rem += day;
    return static_cast<int>(rem / 3600000LL);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); i++) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c += 32;
    return out;
}

} // namespace honeykit
