#include "honeykit/sshwire.hpp"

#include <stdexcept>

namespace honeykit::sshwire {

void put_u8(std::string& b, uint8_t v) { b.push_back(static_cast<char>(v)); }

void put_u32(std::string& b, uint32_t v) {
    b.push_back(static_cast<char>(v >> 24));
    b.push_back(static_cast<char>(v >> 16));
    b.push_back(static_cast<char>(v >> 8));
    b.push_back(static_cast<char>(v));
}

void put_bool(std::string& b, bool v) { put_u8(b, v ? 1 : 0); }

void put_string(std::string& b, std::string_view s) {
    put_u32(b, static_cast<uint32_t>(s.size()));
    b.append(s);
}

void put_namelist(std::string& b, const std::vector<std::string>& names) {
    std::string joined;
    for (const auto& n : names) {
        if (!joined.empty()) joined += ",";
        joined += n;
    }
    put_string(b, joined);
}

void put_mpint(std::string& b, std::string_view unsigned_be) {
    size_t i = 0;
    while (i < unsigned_be.size() && unsigned_be[i] == '\0') i++;
    std::string_view v = unsigned_be.substr(i);
    if (v.empty()) {
        put_u32(b, 0);
        return;
    }
    bool sign = static_cast<unsigned char>(v[0]) & 0x80;
    put_u32(b, static_cast<uint32_t>(v.size() + (sign ? 1 : 0)));
    if (sign) b.push_back('\0');
    b.append(v);
}

void Reader::need(size_t n) const {
    if (pos_ + n > d_.size()) throw std::runtime_error("short ssh payload");
}

uint8_t Reader::u8() {
    need(1);
    return static_cast<uint8_t>(d_[pos_++]);
}

uint32_t Reader::u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; i++) v = (v << 8) | static_cast<uint8_t>(d_[pos_++]);
    return v;
}

bool Reader::boolean() { return u8() != 0; }

std::string Reader::string() {
    uint32_t len = u32();
    need(len);
    std::string s(d_.substr(pos_, len));
    pos_ += len;
    return s;
}

std::vector<std::string> Reader::namelist() {
    std::string joined = string();
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= joined.size()) {
        size_t comma = joined.find(',', start);
        if (comma == std::string::npos) {
            if (start < joined.size()) out.push_back(joined.substr(start));
            break;
        }
        out.push_back(joined.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

std::string Reader::mpint() { return string(); }

void Reader::skip(size_t n) {
    need(n);
    pos_ += n;
}

} // namespace honeykit::sshwire
