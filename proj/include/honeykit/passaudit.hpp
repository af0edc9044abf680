#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "honeykit/store.hpp"

namespace honeykit {

struct CorpusEntry {
    uint64_t count = 0;
    bool observed = false; // seen as a LoginAttempt in the store
    bool imported = false; // came from an imported word list

    bool operator==(const CorpusEntry&) const = default;
};

// Keys are raw password bytes. `normalized` maps the ASCII-lowercased form
// to every original form present, and is what the transform rules consult.
struct AuditCorpus {
    std::map<std::string, CorpusEntry> entries;
    std::map<std::string, std::set<std::string>> normalized;
};

// Import lists are one password per line; lines starting with '#' are
// comments and blank lines are skipped. Unreadable files throw
// std::runtime_error naming the file before anything merges.
AuditCorpus build_corpus(const StoreSnapshot& snap,
                         const std::vector<std::string>& import_paths = {});

enum class AuditStatus { seen_exact, seen_normalized, seen_transformed, not_seen };
const char* to_string(AuditStatus s);

struct AuditVerdict {
    AuditStatus status = AuditStatus::not_seen;
    std::optional<std::string> matched_form; // raw corpus bytes that matched
    std::optional<uint64_t> count;
    std::optional<uint64_t> rank;            // 1-based, (count desc, key asc)
    std::optional<std::string> transform_applied;

    bool operator==(const AuditVerdict&) const = default;
};

// Rule names accepted in the ordered transform list.
//   lowercase    case-fold and consult the normalization index
//   leet         fold 0→o 1→l 3→e 4→a 5→s $→s @→a on the case-folded form
//   strip_digits drop trailing digits from the case-folded form
std::vector<std::string> default_audit_rules();

// Exact byte match first, then the rules in order; the first hit wins and
// names its rule. An empty rule list reduces to exact matching. The
// candidate itself is never written anywhere.
AuditVerdict check(const std::string& password, const AuditCorpus& corpus,
                   const std::vector<std::string>& rules);

// 1-based position of `form` in the corpus ordered by count descending then
// key ascending; nullopt when absent.
std::optional<uint64_t> rank_of(const AuditCorpus& corpus, const std::string& form);

} // namespace honeykit
