#pragma once
// Evidence accumulation for one reasoning chain: a deduplicated, ordered
// set of verbalized graph facts, each carrying the origins (retrieval mode,
// source mentions, matched entities, graph path) it arrived through.

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mirage/error.hpp"
#include "mirage/kg.hpp"

namespace mirage {

enum class RetrievalMode { anchor, bridge };

inline std::string_view retrieval_mode_name(RetrievalMode m) {
    switch (m) {
        case RetrievalMode::anchor: return "anchor";
        case RetrievalMode::bridge: return "bridge";
    }
    throw InvariantError("unreachable retrieval mode");
}

inline RetrievalMode retrieval_mode_from_name(std::string_view name) {
    if (name == "anchor") return RetrievalMode::anchor;
    if (name == "bridge") return RetrievalMode::bridge;
    throw ParseError("unknown retrieval mode: " + std::string(name));
}

// "Diabetes has symptom Fatigue": head, relation with underscores read as
// spaces, tail.
inline std::string verbalize(const Triple& t) {
    std::string relation_words = t.relation;
    for (char& c : relation_words)
        if (c == '_') c = ' ';
    return t.head + " " + relation_words + " " + t.tail;
}

struct EvidenceOrigin {
    RetrievalMode mode = RetrievalMode::anchor;
    std::vector<std::string> mentions;  // raw mentions from the search block
    std::vector<std::string> entities;  // matched canonical entity ids
    std::vector<Triple> path;           // the triple (anchor) or chain (bridge)

    friend bool operator==(const EvidenceOrigin&, const EvidenceOrigin&) = default;
};

struct EvidenceItem {
    std::string fact;
    std::vector<EvidenceOrigin> origins;

    friend bool operator==(const EvidenceItem&, const EvidenceItem&) = default;
};

// Fact strings stay unique and keep first-seen order; a fact re-arriving
// through a new route gains that origin record instead of a duplicate entry.
class EvidenceSet {
public:
    void merge(const std::vector<EvidenceItem>& incoming) {
        for (const EvidenceItem& item : incoming) {
            auto it = index_.find(item.fact);
            if (it == index_.end()) {
                index_.emplace(item.fact, items_.size());
                items_.push_back(item);
                continue;
            }
            EvidenceItem& existing = items_[it->second];
            for (const EvidenceOrigin& origin : item.origins) {
                bool seen = false;
                for (const EvidenceOrigin& have : existing.origins)
                    if (have == origin) {
                        seen = true;
                        break;
                    }
                if (!seen) existing.origins.push_back(origin);
            }
        }
    }

    const std::vector<EvidenceItem>& items() const { return items_; }

    std::vector<std::string> facts() const {
        std::vector<std::string> out;
        out.reserve(items_.size());
        for (const EvidenceItem& item : items_) out.push_back(item.fact);
        return out;
    }

    bool contains_fact(std::string_view fact) const {
        return index_.find(std::string(fact)) != index_.end();
    }

    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }

    friend bool operator==(const EvidenceSet& a, const EvidenceSet& b) {
        return a.items_ == b.items_;
    }

private:
    std::vector<EvidenceItem> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace mirage
