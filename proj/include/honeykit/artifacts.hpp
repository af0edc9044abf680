#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "honeykit/clock.hpp"
#include "honeykit/event.hpp"

namespace honeykit {

// Content-addressed store for captured downloads:
//   <dir>/objects/<sha256>   the bytes, written once
//   <dir>/index.jsonl        append-only record states, last line per sha wins
// put() is insert-or-increment and safe to call from concurrent sessions.
class ArtifactStore {
public:
    ArtifactStore(std::string dir, Clock clock = system_clock_ms());

    ArtifactRecord put(std::string_view content, const std::string& source, bool truncated);

    std::optional<ArtifactRecord> get(const std::string& sha256) const;
    std::optional<std::string> read_object(const std::string& sha256) const;
    std::vector<ArtifactRecord> records() const; // sorted by sha256
    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
    Clock clock_;
    mutable std::mutex mu_;
    std::map<std::string, ArtifactRecord> index_;

    void append_index(const ArtifactRecord& rec);
};

} // namespace honeykit
