#pragma once
// Answer synthesis: normalize terms, detect evidence conflicts between
// sub-answers via relation-pair rules, resolve them by support strength
// (majority-based verification), and generate the final reply from the
// verified answers only.
//
// Support strength is the lexicographic triple (distinct evidence chains,
// distinct relation types, query-token overlap); exact ties keep the lower
// sub-question index.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mirage/backend.hpp"
#include "mirage/decomposer.hpp"
#include "mirage/error.hpp"
#include "mirage/evidence.hpp"
#include "mirage/prompts.hpp"
#include "mirage/text.hpp"

namespace mirage {

struct SubAnswer {
    SubQuestion sub_question;
    std::string text;
    EvidenceSet evidence;
};

struct FinalAnswer {
    std::string text;
};

// Relation pairs that are mutually inconsistent when they connect the same
// head and tail (e.g. a drug that both treats and causes one symptom).
struct ConflictRules {
    std::vector<std::pair<std::string, std::string>> pairs;

    static ConflictRules defaults() { return ConflictRules{{{"treats", "causes"}}}; }

    static ConflictRules load_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open conflict rules: " + path);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ": invalid JSON: " + e.what());
        }
        if (!doc.is_array()) throw ParseError(path + ": expected an array of relation pairs");
        ConflictRules rules;
        for (const auto& entry : doc) {
            if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
                !entry[1].is_string()) {
                throw ParseError(path + ": each rule must be a 2-element array of strings");
            }
            rules.pairs.emplace_back(entry[0].get<std::string>(), entry[1].get<std::string>());
        }
        rules.validate();
        return rules;
    }

    void validate() const {
        if (pairs.empty()) throw InvalidArgumentError("conflict rule set must be nonempty");
        for (const auto& [a, b] : pairs) {
            if (a.empty() || b.empty())
                throw InvalidArgumentError("conflict rule relations must be nonempty");
            if (a == b)
                throw InvalidArgumentError("conflict rule relations must differ: " + a);
        }
    }
};

struct ConflictReport {
    std::size_t index_i = 0;  // sub-question indices, index_i <= index_j
    std::size_t index_j = 0;
    std::string rule;  // "relation_a/relation_b"
    std::string description;
    long kept = -1;        // resolved winner; -1 until resolve() runs
    long suppressed = -1;  // resolved loser; -1 when nothing is suppressed

    friend bool operator==(const ConflictReport&, const ConflictReport&) = default;
};

struct SupportScore {
    std::size_t chain_count = 0;       // distinct origin paths
    std::size_t relation_breadth = 0;  // distinct relation types across paths
    std::size_t query_overlap = 0;     // query tokens found in evidence entities

    friend auto operator<=>(const SupportScore&, const SupportScore&) = default;
};

// Table-driven canonicalization of entity terms; the default table is empty
// so terms reduce to their norm_key only.
class TermNormalizer {
public:
    TermNormalizer() = default;
    explicit TermNormalizer(std::map<std::string, std::string> table)
        : table_(std::move(table)) {}

    std::string normalize(std::string_view term) const {
        std::string key = norm_key(term);
        auto it = table_.find(key);
        return it == table_.end() ? key : it->second;
    }

private:
    std::map<std::string, std::string> table_;
};

inline SupportScore support_score(const SubAnswer& answer, const std::string& query) {
    SupportScore score;
    std::set<std::string> paths;
    std::set<std::string> relations;
    std::set<std::string> entity_tokens;
    for (const EvidenceItem& item : answer.evidence.items()) {
        for (const EvidenceOrigin& origin : item.origins) {
            std::string path_key;
            for (const Triple& t : origin.path) {
                path_key += t.head + "\x1f" + t.relation + "\x1f" + t.tail + "\x1e";
                relations.insert(t.relation);
                for (const std::string& tok : tokenize(t.head)) entity_tokens.insert(tok);
                for (const std::string& tok : tokenize(t.tail)) entity_tokens.insert(tok);
            }
            paths.insert(std::move(path_key));
        }
    }
    score.chain_count = paths.size();
    score.relation_breadth = relations.size();
    std::set<std::string> counted;
    for (const std::string& tok : tokenize(query))
        if (entity_tokens.count(tok)) counted.insert(tok);
    score.query_overlap = counted.size();
    return score;
}

namespace detail {

// (normalized head, normalized tail) pairs per relation, with a
// representative surface form for report text.
struct RelationPairs {
    std::map<std::pair<std::string, std::string>, std::pair<std::string, std::string>> pairs;
};

inline std::map<std::string, RelationPairs> collect_relation_pairs(
    const SubAnswer& answer, const TermNormalizer& normalizer) {
    std::map<std::string, RelationPairs> by_relation;
    for (const EvidenceItem& item : answer.evidence.items()) {
        for (const EvidenceOrigin& origin : item.origins) {
            for (const Triple& t : origin.path) {
                auto key = std::make_pair(normalizer.normalize(t.head),
                                          normalizer.normalize(t.tail));
                by_relation[t.relation].pairs.emplace(key, std::make_pair(t.head, t.tail));
            }
        }
    }
    return by_relation;
}

}  // namespace detail

// Flags every (head, tail) supported by one rule relation in one answer and
// the other rule relation in the other (or the same) answer. Reports come
// back sorted and unresolved (kept == -1); answers are keyed by their
// sub-question index, so list order never matters.
inline std::vector<ConflictReport> detect_conflicts(
    const std::vector<SubAnswer>& answers, const ConflictRules& rules,
    const TermNormalizer& normalizer = TermNormalizer()) {
    rules.validate();

    std::map<std::size_t, std::map<std::string, detail::RelationPairs>> evidence;
    for (const SubAnswer& a : answers) {
        if (evidence.count(a.sub_question.index))
            throw InvalidArgumentError("duplicate sub-question index " +
                                       std::to_string(a.sub_question.index));
        evidence[a.sub_question.index] = detail::collect_relation_pairs(a, normalizer);
    }

    std::vector<ConflictReport> reports;
    auto scan = [&](std::size_t idx_a, std::size_t idx_b, const std::string& rel_a,
                    const std::string& rel_b, const std::string& rule_id) {
        auto it_a = evidence[idx_a].find(rel_a);
        auto it_b = evidence[idx_b].find(rel_b);
        if (it_a == evidence[idx_a].end() || it_b == evidence[idx_b].end()) return;
        for (const auto& [key, surface] : it_a->second.pairs) {
            auto hit = it_b->second.pairs.find(key);
            if (hit == it_b->second.pairs.end()) continue;
            ConflictReport report;
            report.index_i = std::min(idx_a, idx_b);
            report.index_j = std::max(idx_a, idx_b);
            report.rule = rule_id;
            report.description = surface.first + " both " + rel_a + " and " + rel_b + " " +
                                 surface.second;
            reports.push_back(std::move(report));
        }
    };

    std::vector<std::size_t> indices;
    for (const auto& [idx, _] : evidence) indices.push_back(idx);
    for (std::size_t a = 0; a < indices.size(); ++a) {
        for (std::size_t b = a; b < indices.size(); ++b) {
            for (const auto& [rel_1, rel_2] : rules.pairs) {
                const std::string rule_id = rel_1 + "/" + rel_2;
                scan(indices[a], indices[b], rel_1, rel_2, rule_id);
                if (a != b) scan(indices[b], indices[a], rel_1, rel_2, rule_id);
            }
        }
    }

    std::sort(reports.begin(), reports.end(), [](const ConflictReport& x, const ConflictReport& y) {
        return std::tie(x.index_i, x.index_j, x.rule, x.description) <
               std::tie(y.index_i, y.index_j, y.rule, y.description);
    });
    reports.erase(std::unique(reports.begin(), reports.end()), reports.end());
    return reports;
}

struct ResolutionResult {
    std::vector<SubAnswer> verified;         // ascending sub-question index
    std::vector<ConflictReport> reports;     // kept/suppressed filled in
    std::set<std::size_t> suppressed_indices;
};

// Majority-based verification: per conflict keep the answer with the
// lexicographically greater support score; exact tie keeps the lower
// sub-question index. Self-conflicts (index_i == index_j) suppress nothing.
inline ResolutionResult resolve(std::vector<ConflictReport> conflicts,
                                const std::vector<SubAnswer>& answers,
                                const std::string& query) {
    std::map<std::size_t, const SubAnswer*> by_index;
    std::map<std::size_t, SupportScore> scores;
    for (const SubAnswer& a : answers) {
        by_index[a.sub_question.index] = &a;
        scores[a.sub_question.index] = support_score(a, query);
    }

    ResolutionResult result;
    for (ConflictReport& report : conflicts) {
        if (!by_index.count(report.index_i) || !by_index.count(report.index_j))
            throw InvalidArgumentError("conflict report references unknown sub-question index");
        if (report.index_i == report.index_j) {
            report.kept = static_cast<long>(report.index_i);
            report.suppressed = -1;
        } else {
            const SupportScore& si = scores[report.index_i];
            const SupportScore& sj = scores[report.index_j];
            std::size_t winner = report.index_i;
            if (sj > si) winner = report.index_j;  // tie keeps the lower index
            std::size_t loser = winner == report.index_i ? report.index_j : report.index_i;
            report.kept = static_cast<long>(winner);
            report.suppressed = static_cast<long>(loser);
            result.suppressed_indices.insert(loser);
        }
        result.reports.push_back(report);
    }
    for (const auto& [idx, answer] : by_index) {
        if (!result.suppressed_indices.count(idx)) result.verified.push_back(*answer);
    }
    return result;
}

// One cool-temperature generation over the verified answers and their
// pooled evidence. When the rendered prompt would blow the context budget,
// evidence facts are dropped oldest-first until it fits.
inline FinalAnswer synthesize_final(const std::string& query,
                                    const std::vector<SubAnswer>& verified, Backend& backend,
                                    const PromptSet& prompts,
                                    const SamplingParams& sampling =
                                        SamplingParams::conservative_defaults(),
                                    const ContextBudget& budget = ContextBudget{},
                                    std::uint32_t max_tokens = 4096) {
    if (verified.empty())
        throw StageError("synthesize", "no verified answers to synthesize from");

    std::string qa_pairs;
    for (const SubAnswer& a : verified) {
        qa_pairs += "Q" + std::to_string(a.sub_question.index + 1) + ": " +
                    a.sub_question.text + "\n";
        qa_pairs += "A" + std::to_string(a.sub_question.index + 1) + ": " + a.text + "\n";
    }

    std::vector<std::string> facts;
    std::set<std::string> seen;
    for (const SubAnswer& a : verified) {
        for (const std::string& fact : a.evidence.facts()) {
            if (seen.insert(fact).second) facts.push_back(fact);
        }
    }

    auto render = [&](std::size_t first_fact) {
        std::string evidence_text;
        for (std::size_t i = first_fact; i < facts.size(); ++i) {
            evidence_text += facts[i];
            evidence_text += '\n';
        }
        if (evidence_text.empty()) evidence_text = "(none)\n";
        return render_template(prompts.synthesize, {{"query", query},
                                                    {"qa_pairs", qa_pairs},
                                                    {"evidence", evidence_text}});
    };

    // keep the newest suffix of facts that fits the budget
    std::size_t first_fact = 0;
    std::string prompt = render(first_fact);
    while (prompt.size() > budget.budget_chars() && first_fact < facts.size()) {
        ++first_fact;
        prompt = render(first_fact);
    }

    GenerationRequest req;
    req.chain_id = "synthesize";
    req.messages.push_back(Message{Role::user, std::move(prompt)});
    req.sampling = sampling;
    req.max_tokens = max_tokens;
    try {
        GenerationResponse resp = backend.generate(req);
        return FinalAnswer{resp.content};
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError("synthesize", e.what());
    }
}

}  // namespace mirage
