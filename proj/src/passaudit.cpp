#include "honeykit/passaudit.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "honeykit/util.hpp"

namespace honeykit {

const char* to_string(AuditStatus s) {
    switch (s) {
    case AuditStatus::seen_exact: return "seen_exact";
    case AuditStatus::seen_normalized: return "seen_normalized";
    case AuditStatus::seen_transformed: return "seen_transformed";
    case AuditStatus::not_seen: return "not_seen";
    }
    return "not_seen";
}

std::vector<std::string> default_audit_rules() { return {"lowercase", "leet", "strip_digits"}; }

AuditCorpus build_corpus(const StoreSnapshot& snap,
                         const std::vector<std::string>& import_paths) {
    // read every import fully before merging so a failure never leaves a
    // half-built corpus behind
    std::vector<std::string> imported;
    for (const auto& path : import_paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read import list: " + path);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            imported.push_back(line);
        }
        if (in.bad()) throw std::runtime_error("cannot read import list: " + path);
    }

    AuditCorpus corpus;
    for (const auto& e : snap.events) {
        if (const auto* la = std::get_if<LoginAttempt>(&e.body)) {
            auto& entry = corpus.entries[la->password];
            entry.count++;
            entry.observed = true;
        }
    }
    for (const auto& pw : imported) {
        auto& entry = corpus.entries[pw];
        entry.count++;
        entry.imported = true;
    }
    for (const auto& [pw, entry] : corpus.entries) corpus.normalized[to_lower(pw)].insert(pw);
    return corpus;
}

std::optional<uint64_t> rank_of(const AuditCorpus& corpus, const std::string& form) {
    auto it = corpus.entries.find(form);
    if (it == corpus.entries.end()) return std::nullopt;
    uint64_t before = 0;
    for (const auto& [pw, entry] : corpus.entries) {
        if (entry.count > it->second.count) before++;
        else if (entry.count == it->second.count && pw < form) before++;
    }
    return before + 1;
}

namespace {

std::string leet_fold(const std::string& s) {
    std::string out = s;
    for (auto& c : out) {
        switch (c) {
        case '0': c = 'o'; break;
        case '1': c = 'l'; break;
        case '3': c = 'e'; break;
        case '4': c = 'a'; break;
        case '5': c = 's'; break;
        case '$': c = 's'; break;
        case '@': c = 'a'; break;
        default: break;
        }
    }
    return out;
}

std::string strip_trailing_digits(const std::string& s) {
    size_t end = s.size();
    while (end > 0 && s[end - 1] >= '0' && s[end - 1] <= '9') end--;
    return s.substr(0, end);
}

// Best original form for a normalized key: highest count, ties by key.
const std::string* pick_original(const AuditCorpus& corpus, const std::string& folded) {
    auto it = corpus.normalized.find(folded);
    if (it == corpus.normalized.end()) return nullptr;
    const std::string* best = nullptr;
    uint64_t best_count = 0;
    for (const auto& form : it->second) {
        uint64_t count = corpus.entries.at(form).count;
        if (!best || count > best_count || (count == best_count && form < *best)) {
            best = &form;
            best_count = count;
        }
    }
    return best;
}

AuditVerdict hit(AuditStatus status, const AuditCorpus& corpus, const std::string& form,
                 std::optional<std::string> rule) {
    AuditVerdict v;
    v.status = status;
    v.matched_form = form;
    v.count = corpus.entries.at(form).count;
    v.rank = rank_of(corpus, form);
    v.transform_applied = std::move(rule);
    return v;
}

} // namespace

AuditVerdict check(const std::string& password, const AuditCorpus& corpus,
                   const std::vector<std::string>& rules) {
    if (corpus.entries.count(password))
        return hit(AuditStatus::seen_exact, corpus, password, std::nullopt);

    std::string folded = to_lower(password);
    for (const auto& rule : rules) {
        if (rule == "lowercase") {
            if (const auto* form = pick_original(corpus, folded))
                return hit(AuditStatus::seen_normalized, corpus, *form, rule);
        } else if (rule == "leet") {
            if (const auto* form = pick_original(corpus, leet_fold(folded)))
                return hit(AuditStatus::seen_transformed, corpus, *form, rule);
        } else if (rule == "strip_digits") {
            std::string stripped = strip_trailing_digits(folded);
            if (stripped.size() == folded.size()) continue; // nothing stripped
            if (const auto* form = pick_original(corpus, stripped))
                return hit(AuditStatus::seen_transformed, corpus, *form, rule);
        } else {
            throw std::invalid_argument("unknown audit rule: " + rule);
        }
    }
    return AuditVerdict{};
}

} // namespace honeykit
