#include "honeykit/ttyrec.hpp"

#include <chrono>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "honeykit/util.hpp"

namespace honeykit {

static void put_u32be(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v >> 24));
    out.push_back(static_cast<char>(v >> 16));
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v));
}

static uint32_t get_u32be(const unsigned char* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

static void check_frame(const TtyFrame& f) {
    if (f.payload.empty()) throw std::invalid_argument("tty frame payload must be non-empty");
    if (f.payload.size() > kTtyMaxPayload) throw std::invalid_argument("tty frame payload too large");
}

std::string encode_frame(const TtyFrame& f) {
    check_frame(f);
    std::string out;
    out.reserve(9 + f.payload.size());
    put_u32be(out, f.delta_ms);
    out.push_back(static_cast<char>(f.direction));
    put_u32be(out, static_cast<uint32_t>(f.payload.size()));
    out += f.payload;
    return out;
}

static std::string encode_header(const std::string& session_id) {
    if (session_id.size() != 26) throw std::invalid_argument("session id must be 26 chars");
    std::string out(kTtyMagic, 4);
    out.push_back(static_cast<char>(kTtyVersion));
    out += session_id;
    return out;
}

std::string encode_recording(const TtyRecording& rec) {
    std::string out = encode_header(rec.session_id);
    for (const auto& f : rec.frames) out += encode_frame(f);
    return out;
}

TtyRecording decode_recording(std::string_view bytes) {
    // A short prefix of a valid header counts as truncation, a magic
    // mismatch means this is not a recording at all.
    size_t probe = std::min<size_t>(bytes.size(), 4);
    if (std::memcmp(bytes.data(), kTtyMagic, probe) != 0)
        throw std::runtime_error("not a tty recording (bad magic)");
    TtyRecording rec;
    if (bytes.size() < kTtyHeaderSize) {
        rec.truncated = true;
        return rec;
    }
    if (static_cast<uint8_t>(bytes[4]) != kTtyVersion)
        throw std::runtime_error("unsupported tty recording version");
    rec.session_id = std::string(bytes.substr(5, 26));

    size_t pos = kTtyHeaderSize;
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    while (pos < bytes.size()) {
        if (bytes.size() - pos < 9) {
            rec.truncated = true;
            break;
        }
        uint32_t delta = get_u32be(data + pos);
        uint8_t dir = data[pos + 4];
        uint32_t len = get_u32be(data + pos + 5);
        if (dir > 1 || len == 0 || len > kTtyMaxPayload) {
            rec.truncated = true;
            break;
        }
        if (bytes.size() - pos - 9 < len) {
            rec.truncated = true;
            break;
        }
        TtyFrame f;
        f.delta_ms = delta;
        f.direction = static_cast<TtyDirection>(dir);
        f.payload = std::string(bytes.substr(pos + 9, len));
        rec.frames.push_back(std::move(f));
        pos += 9 + len;
    }
    return rec;
}

TtyRecording load_recording(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) throw std::runtime_error("cannot open recording: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return decode_recording(buf.str());
}

TtyRecorder::TtyRecorder(const std::string& path, const std::string& session_id) : path_(path) {
    std::string header = encode_header(session_id);
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_.is_open()) {
        failed_ = true;
        return;
    }
    out_.write(header.data(), static_cast<std::streamsize>(header.size()));
    out_.flush();
    if (!out_.good()) failed_ = true;
}

TtyRecorder::~TtyRecorder() { close(); }

bool TtyRecorder::append(uint32_t delta_ms, TtyDirection dir, std::string_view payload) {
    if (failed_ || payload.empty()) return !failed_;
    TtyFrame f;
    f.delta_ms = delta_ms;
    f.direction = dir;
    // oversize writes are split so every frame stays decodable
    size_t pos = 0;
    while (pos < payload.size()) {
        size_t n = std::min<size_t>(payload.size() - pos, kTtyMaxPayload);
        f.payload = std::string(payload.substr(pos, n));
        std::string enc = encode_frame(f);
        out_.write(enc.data(), static_cast<std::streamsize>(enc.size()));
        out_.flush();
        if (!out_.good()) {
            failed_ = true;
            return false;
        }
        frames_++;
        f.delta_ms = 0;
        pos += n;
    }
    return true;
}

void TtyRecorder::close() {
    if (out_.is_open()) out_.close();
}

PlaybackReport playback(const TtyRecording& rec, const PlaybackOptions& opt, std::ostream& out,
                        const SleepFn& sleeper) {
    PlaybackReport report;
    report.truncated = rec.truncated;
    SleepFn sleep_fn = sleeper;
    if (!sleep_fn) sleep_fn = [](uint32_t ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); };
    for (const auto& f : rec.frames) {
        if (!opt.instant && f.delta_ms > 0) {
            double speed = opt.speed > 0 ? opt.speed : 1.0;
            auto wait = static_cast<uint32_t>(static_cast<double>(f.delta_ms) / speed);
            if (wait > 0) sleep_fn(wait);
        }
        if (f.direction == TtyDirection::output_to_client) {
            out.write(f.payload.data(), static_cast<std::streamsize>(f.payload.size()));
        } else if (opt.render_input) {
            out << "\x1b[7m";
            out.write(f.payload.data(), static_cast<std::streamsize>(f.payload.size()));
            out << "\x1b[27m";
        }
        report.frames_played++;
    }
    out.flush();
    return report;
}

std::string transcript(const TtyRecording& rec) {
    std::ostringstream out;
    out << "# hpt session=" << rec.session_id << " frames=" << rec.frames.size() << "\n";
    uint64_t offset = 0;
    for (const auto& f : rec.frames) {
        offset += f.delta_ms;
        out << "[+" << offset << " "
            << (f.direction == TtyDirection::output_to_client ? "out" : "in") << " "
            << f.payload.size() << "]\n";
        out << render_bytes(f.payload) << "\n";
    }
    if (rec.truncated) out << "[truncated]\n";
    return out.str();
}

} // namespace honeykit
