#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace honeykit {

// Binary session recording (.hpt): 4-byte magic "HPT1", 1-byte version,
// 26-byte session id, then frames of
//   delta_ms(u32 BE) direction(u8) length(u32 BE) payload
// Deltas are relative to the previous frame so recordings are relocatable.

enum class TtyDirection : uint8_t { output_to_client = 0, input_from_client = 1 };

constexpr uint32_t kTtyMaxPayload = 1u << 20;
constexpr char kTtyMagic[4] = {'H', 'P', 'T', '1'};
constexpr uint8_t kTtyVersion = 0x01;
constexpr size_t kTtyHeaderSize = 31;

struct TtyFrame {
    uint32_t delta_ms = 0;
    TtyDirection direction = TtyDirection::output_to_client;
    std::string payload; // non-empty, <= kTtyMaxPayload

    bool operator==(const TtyFrame&) const = default;
};

struct TtyRecording {
    std::string session_id;
    std::vector<TtyFrame> frames;
    bool truncated = false; // file ended mid-frame or with a corrupt frame header

    bool operator==(const TtyRecording&) const = default;
};

std::string encode_frame(const TtyFrame& f);
std::string encode_recording(const TtyRecording& rec);

// Decodes the longest valid prefix; header damage or a non-.hpt blob throws
// std::runtime_error, anything after a valid magic yields frames + truncated.
TtyRecording decode_recording(std::string_view bytes);
TtyRecording load_recording(const std::string& path);

// Streaming writer used during live sessions. Each frame is flushed so a
// crash loses at most the final partial frame. Write failures flip failed()
// instead of throwing; the session keeps running.
class TtyRecorder {
  public:
    TtyRecorder(const std::string& path, const std::string& session_id);
    ~TtyRecorder();

    bool append(uint32_t delta_ms, TtyDirection dir, std::string_view payload);
    void close();

    const std::string& path() const { return path_; }
    bool failed() const { return failed_; }
    uint64_t frames_written() const { return frames_; }

  private:
    std::string path_;
    std::ofstream out_;
    bool failed_ = false;
    uint64_t frames_ = 0;
};

struct PlaybackOptions {
    double speed = 1.0;  // ignored when instant
    bool instant = false;
    bool render_input = false; // reverse-video input frames instead of dropping them
};

struct PlaybackReport {
    size_t frames_played = 0;
    bool truncated = false;
};

using SleepFn = std::function<void(uint32_t /*ms*/)>;

PlaybackReport playback(const TtyRecording& rec, const PlaybackOptions& opt, std::ostream& out,
                        const SleepFn& sleeper = nullptr);

// Text dump: one [+offset_ms dir len] header per frame, payload hex-escaped.
std::string transcript(const TtyRecording& rec);

} // namespace honeykit
