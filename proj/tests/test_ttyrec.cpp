#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include "honeykit/ttyrec.hpp"
#include "support.hpp"

using namespace honeykit;

static const std::string kSid = "01ARZ3NDEKTSV4RRFFQ69G5FAV";

static TtyRecording random_recording(std::mt19937_64& rng, size_t max_frames) {
    TtyRecording rec;
    rec.session_id = kSid;
    std::uniform_int_distribution<size_t> nframes(0, max_frames);
    std::uniform_int_distribution<uint32_t> delta(0, 5000);
    size_t n = nframes(rng);
    for (size_t i = 0; i < n; i++) {
        TtyFrame f;
        f.delta_ms = delta(rng);
        f.direction = (rng() % 2) ? TtyDirection::input_from_client : TtyDirection::output_to_client;
        size_t len = 1 + rng() % 300;
        f.payload.resize(len);
        for (auto& c : f.payload) c = static_cast<char>(rng() % 256);
        rec.frames.push_back(std::move(f));
    }
    return rec;
}

TEST_CASE("empty session encodes to the 31 byte header") {
    TtyRecording rec;
    rec.session_id = kSid;
    std::string bytes = encode_recording(rec);
    CHECK(bytes.size() == 31);
    CHECK(bytes.substr(0, 4) == "HPT1");
    CHECK(bytes[4] == 0x01);
    auto back = decode_recording(bytes);
    CHECK(back.session_id == kSid);
    CHECK(back.frames.empty());
    CHECK(!back.truncated);
}

TEST_CASE("two frame golden round trip") {
    TtyRecording rec;
    rec.session_id = kSid;
    rec.frames.push_back({0, TtyDirection::output_to_client, "a"});
    rec.frames.push_back({100, TtyDirection::input_from_client, "b"});
    auto back = decode_recording(encode_recording(rec));
    CHECK(back == rec);
}

TEST_CASE("round trip of 1000 random frames is byte identical") {
    std::mt19937_64 rng(424242);
    TtyRecording rec;
    rec.session_id = kSid;
    for (int i = 0; i < 1000; i++) {
        TtyFrame f;
        f.delta_ms = static_cast<uint32_t>(rng());
        f.direction = (rng() % 2) ? TtyDirection::input_from_client : TtyDirection::output_to_client;
        f.payload.resize(1 + rng() % 512);
        for (auto& c : f.payload) c = static_cast<char>(rng() % 256);
        rec.frames.push_back(std::move(f));
    }
    std::string bytes = encode_recording(rec);
    TtyRecording decoded = decode_recording(bytes);
    CHECK(decoded == rec);
    CHECK(encode_recording(decoded) == bytes);
}

TEST_CASE("recorder writes incrementally and reloads") {
    testsupport::TempDir tmp("ttyrec");
    std::string path = tmp.file("s.hpt");
    {
        TtyRecorder rec(path, kSid);
        CHECK(!rec.failed());
        CHECK(rec.append(0, TtyDirection::output_to_client, "welcome"));
        CHECK(rec.append(120, TtyDirection::input_from_client, "ls\r"));
        CHECK(rec.append(10, TtyDirection::output_to_client, "file\r\n"));
    }
    auto rec = load_recording(path);
    REQUIRE(rec.frames.size() == 3);
    CHECK(rec.frames[0].payload == "welcome");
    CHECK(rec.frames[1].delta_ms == 120);
    CHECK(!rec.truncated);
}

TEST_CASE("any byte truncation decodes to a flagged prefix") {
    std::mt19937_64 rng(777);
    auto rec = random_recording(rng, 40);
    std::string bytes = encode_recording(rec);
    for (int i = 0; i < 200; i++) {
        size_t cut = rng() % (bytes.size() + 1);
        std::string_view prefix(bytes.data(), cut);
        if (cut < 4 && std::string(prefix) != std::string("HPT1").substr(0, cut)) continue;
        TtyRecording got = decode_recording(prefix);
        if (cut == bytes.size()) {
            CHECK(got == rec);
        } else {
            CHECK(got.truncated);
            REQUIRE(got.frames.size() <= rec.frames.size());
            for (size_t k = 0; k < got.frames.size(); k++) CHECK(got.frames[k] == rec.frames[k]);
        }
    }
}

TEST_CASE("garbage input is rejected outright") {
    CHECK_THROWS(decode_recording("GIFF1234not a recording"));
    std::string wrong_version = encode_recording({kSid, {}, false});
    wrong_version[4] = 0x02;
    CHECK_THROWS(decode_recording(wrong_version));
}

TEST_CASE("instant playback equals concatenated output payloads") {
    std::mt19937_64 rng(99);
    for (int round = 0; round < 50; round++) {
        auto rec = random_recording(rng, 30);
        std::string expect;
        for (const auto& f : rec.frames)
            if (f.direction == TtyDirection::output_to_client) expect += f.payload;
        std::ostringstream out;
        PlaybackOptions opt;
        opt.instant = true;
        auto report = playback(rec, opt, out);
        CHECK(out.str() == expect);
        CHECK(report.frames_played == rec.frames.size());
    }
}

TEST_CASE("input-only recording with suppression plays nothing") {
    TtyRecording rec;
    rec.session_id = kSid;
    rec.frames.push_back({0, TtyDirection::input_from_client, "secret"});
    rec.frames.push_back({5, TtyDirection::input_from_client, "keys"});
    std::ostringstream out;
    PlaybackOptions opt;
    opt.instant = true;
    playback(rec, opt, out);
    CHECK(out.str().empty());
}

TEST_CASE("playback waits scale with speed") {
    TtyRecording rec;
    rec.session_id = kSid;
    rec.frames.push_back({100, TtyDirection::output_to_client, "a"});
    rec.frames.push_back({200, TtyDirection::output_to_client, "b"});
    PlaybackOptions opt;
    opt.speed = 2.0;
    std::ostringstream out;
    auto start = std::chrono::steady_clock::now();
    playback(rec, opt, out);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    CHECK(elapsed >= 140);
    CHECK(elapsed <= 220);
    CHECK(out.str() == "ab");
}

TEST_CASE("playback with injected sleeper sums scaled deltas") {
    TtyRecording rec;
    rec.session_id = kSid;
    rec.frames.push_back({100, TtyDirection::output_to_client, "a"});
    rec.frames.push_back({250, TtyDirection::input_from_client, "x"});
    rec.frames.push_back({50, TtyDirection::output_to_client, "b"});
    uint64_t slept = 0;
    PlaybackOptions opt;
    opt.speed = 0.5; // half speed doubles every wait
    std::ostringstream out;
    playback(rec, opt, out, [&](uint32_t ms) { slept += ms; });
    CHECK(slept == 200 + 500 + 100);
}

TEST_CASE("transcript offsets are cumulative and non-decreasing") {
    TtyRecording rec;
    rec.session_id = kSid;
    rec.frames.push_back({0, TtyDirection::output_to_client, "a"});
    rec.frames.push_back({100, TtyDirection::input_from_client, "b"});
    std::string text = transcript(rec);
    CHECK(text.find("[+0 out 1]\n") != std::string::npos);
    CHECK(text.find("[+100 in 1]\n") != std::string::npos);

    // property: offsets never decrease, over random recordings
    std::mt19937_64 rng(31337);
    for (int round = 0; round < 30; round++) {
        auto r = random_recording(rng, 50);
        std::istringstream lines(transcript(r));
        std::string line;
        long long prev = -1;
        while (std::getline(lines, line)) {
            if (line.rfind("[+", 0) != 0) continue;
            long long off = std::stoll(line.substr(2));
            CHECK(off >= prev);
            prev = off;
        }
    }
}

TEST_CASE("empty recording transcript is header only") {
    TtyRecording rec;
    rec.session_id = kSid;
    std::string text = transcript(rec);
    CHECK(text == "# hpt session=" + kSid + " frames=0\n");
}

TEST_CASE("transcript escapes non printable bytes") {
    TtyRecording rec;
    rec.session_id = kSid;
    rec.frames.push_back({0, TtyDirection::output_to_client, std::string("\x1b[31mred\r\n", 10)});
    std::string text = transcript(rec);
    CHECK(text.find("\\x1b[31mred\\x0d\\x0a") != std::string::npos);
}
