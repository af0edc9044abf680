#include "honeykit/artifacts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "honeykit/sha256.hpp"
#include "honeykit/util.hpp"

namespace fs = std::filesystem;

namespace honeykit {

ArtifactStore::ArtifactStore(std::string dir, Clock clock)
    : dir_(std::move(dir)), clock_(std::move(clock)) {
    fs::create_directories(fs::path(dir_) / "objects");
    fs::path index_path = fs::path(dir_) / "index.jsonl";
    if (!fs::exists(index_path)) return;
    std::ifstream in(index_path, std::ios::binary);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("sha256"))
            throw std::runtime_error("corrupt artifact index " + index_path.string() + ":" +
                                     std::to_string(line_no));
        ArtifactRecord rec;
        rec.sha256 = j.at("sha256").get<std::string>();
        rec.size_bytes = j.at("size_bytes").get<uint64_t>();
        rec.source = j.at("source").get<std::string>();
        auto ts = parse_ts_ms(j.at("first_seen").get<std::string>());
        if (!ts || !is_sha256_hex(rec.sha256))
            throw std::runtime_error("corrupt artifact index " + index_path.string() + ":" +
                                     std::to_string(line_no));
        rec.first_seen_ms = *ts;
        rec.ref_count = j.at("ref_count").get<uint64_t>();
        rec.truncated = j.at("truncated").get<bool>();
        index_[rec.sha256] = rec; // later lines supersede earlier ones
    }
}

void ArtifactStore::append_index(const ArtifactRecord& rec) {
    nlohmann::json j;
    j["first_seen"] = format_ts_ms(rec.first_seen_ms);
    j["ref_count"] = rec.ref_count;
    j["sha256"] = rec.sha256;
    j["size_bytes"] = rec.size_bytes;
    j["source"] = rec.source;
    j["truncated"] = rec.truncated;
    std::ofstream out(fs::path(dir_) / "index.jsonl", std::ios::binary | std::ios::app);
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot append artifact index in " + dir_);
}

ArtifactRecord ArtifactStore::put(std::string_view content, const std::string& source,
                                  bool truncated) {
    std::string sha = sha256_hex(content);
    std::lock_guard lock(mu_);
    auto it = index_.find(sha);
    if (it != index_.end()) {
        it->second.ref_count++;
        append_index(it->second);
        return it->second;
    }
    fs::path obj = fs::path(dir_) / "objects" / sha;
    fs::path tmp = fs::path(dir_) / "objects" / (".tmp-" + sha);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("cannot write artifact object " + tmp.string());
    }
    fs::rename(tmp, obj);
    ArtifactRecord rec;
    rec.sha256 = sha;
    rec.size_bytes = content.size();
    rec.source = source;
    rec.first_seen_ms = clock_();
    rec.ref_count = 1;
    rec.truncated = truncated;
    index_[sha] = rec;
    append_index(rec);
    return rec;
}

std::optional<ArtifactRecord> ArtifactStore::get(const std::string& sha256) const {
    std::lock_guard lock(mu_);
    auto it = index_.find(sha256);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> ArtifactStore::read_object(const std::string& sha256) const {
    if (!is_sha256_hex(sha256)) return std::nullopt;
    std::ifstream in(fs::path(dir_) / "objects" / sha256, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<ArtifactRecord> ArtifactStore::records() const {
    std::lock_guard lock(mu_);
    std::vector<ArtifactRecord> out;
    for (const auto& [sha, rec] : index_) out.push_back(rec);
    return out;
}

} // namespace honeykit
