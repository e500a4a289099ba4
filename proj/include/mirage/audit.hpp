#pragma once
// The audit record: a machine-readable trace of one pipeline run, from the
// raw decomposition reply through every chain turn to the final answer.
// Records round-trip through JSON exactly, and the generations they store
// are sufficient to rebuild a scripted backend that replays the run.
//
// Top-level JSON keys, in order: query, config, decomposition, chains,
// conflicts, final_answer, timings, started_at, finished_at.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mirage/config.hpp"
#include "mirage/decomposer.hpp"
#include "mirage/error.hpp"
#include "mirage/evidence.hpp"
#include "mirage/retriever.hpp"
#include "mirage/scripted_backend.hpp"
#include "mirage/synthesizer.hpp"

namespace mirage {

struct StageTimings {
    double decompose_ms = 0.0;
    double chains_ms = 0.0;
    double conflicts_ms = 0.0;
    double synthesize_ms = 0.0;
    double total_ms = 0.0;

    friend bool operator==(const StageTimings&, const StageTimings&) = default;
};

struct AuditRecord {
    std::string query;
    RunConfig config;
    DecompositionResult decomposition;
    std::vector<ReasoningChain> chains;
    std::vector<ConflictReport> conflicts;
    std::string final_answer;
    StageTimings timings;
    std::string started_at;   // ISO-8601 UTC, millisecond precision
    std::string finished_at;
};

inline std::string iso_utc_timestamp(
    std::chrono::system_clock::time_point tp = std::chrono::system_clock::now()) {
    auto since_epoch = tp.time_since_epoch();
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(since_epoch).count();
    std::time_t secs = static_cast<std::time_t>(ms / 1000);
    std::tm tm_utc{};
    gmtime_r(&secs, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm_utc);
    char out[40];
    std::snprintf(out, sizeof(out), "%s.%03dZ", buf, static_cast<int>(ms % 1000));
    return out;
}

namespace detail {

inline nlohmann::ordered_json triple_to_json(const Triple& t) {
    return {{"head", t.head}, {"relation", t.relation}, {"tail", t.tail}};
}

inline Triple triple_from_json(const nlohmann::json& j) {
    return Triple{j.at("head").get<std::string>(), j.at("relation").get<std::string>(),
                  j.at("tail").get<std::string>()};
}

inline nlohmann::ordered_json sub_question_to_json(const SubQuestion& q) {
    return {{"index", q.index}, {"text", q.text}, {"seed_entities", q.seed_entities}};
}

inline SubQuestion sub_question_from_json(const nlohmann::json& j) {
    SubQuestion q;
    q.index = j.at("index").get<std::size_t>();
    q.text = j.at("text").get<std::string>();
    q.seed_entities = j.at("seed_entities").get<std::vector<std::string>>();
    return q;
}

inline nlohmann::ordered_json action_to_json(const TurnAction& action) {
    nlohmann::ordered_json j;
    j["kind"] = std::string(turn_action_kind_name(action.kind));
    if (action.kind == TurnAction::Kind::searched) {
        j["mentions"] = action.block->mentions;
        j["raw"] = action.block->raw;
    } else if (action.kind == TurnAction::Kind::control) {
        j["signal"] = std::string(control_signal_name(*action.signal));
    }
    return j;
}

inline TurnAction action_from_json(const nlohmann::json& j) {
    TurnAction action;
    action.kind = turn_action_kind_from_name(j.at("kind").get<std::string>());
    if (action.kind == TurnAction::Kind::searched) {
        SearchBlock block;
        block.mentions = j.at("mentions").get<std::vector<std::string>>();
        block.raw = j.at("raw").get<std::string>();
        action.block = std::move(block);
    } else if (action.kind == TurnAction::Kind::control) {
        action.signal = control_signal_from_name(j.at("signal").get<std::string>());
    }
    return action;
}

inline nlohmann::ordered_json evidence_to_json(const EvidenceSet& evidence) {
    nlohmann::ordered_json j;
    j["facts"] = nlohmann::ordered_json::array();
    j["origins"] = nlohmann::ordered_json::array();
    const auto& items = evidence.items();
    for (std::size_t i = 0; i < items.size(); ++i) {
        j["facts"].push_back(items[i].fact);
        for (const EvidenceOrigin& origin : items[i].origins) {
            nlohmann::ordered_json o;
            o["fact"] = i;
            o["mode"] = std::string(retrieval_mode_name(origin.mode));
            o["mentions"] = origin.mentions;
            o["entities"] = origin.entities;
            o["path"] = nlohmann::ordered_json::array();
            for (const Triple& t : origin.path) o["path"].push_back(triple_to_json(t));
            j["origins"].push_back(std::move(o));
        }
    }
    return j;
}

inline EvidenceSet evidence_from_json(const nlohmann::json& j) {
    std::vector<EvidenceItem> items;
    for (const auto& fact : j.at("facts")) items.push_back(EvidenceItem{fact.get<std::string>(), {}});
    for (const auto& o : j.at("origins")) {
        std::size_t idx = o.at("fact").get<std::size_t>();
        if (idx >= items.size()) throw ParseError("audit origin references unknown fact index");
        EvidenceOrigin origin;
        origin.mode = retrieval_mode_from_name(o.at("mode").get<std::string>());
        origin.mentions = o.at("mentions").get<std::vector<std::string>>();
        origin.entities = o.at("entities").get<std::vector<std::string>>();
        for (const auto& t : o.at("path")) origin.path.push_back(triple_from_json(t));
        items[idx].origins.push_back(std::move(origin));
    }
    EvidenceSet set;
    set.merge(items);
    return set;
}

}  // namespace detail

inline nlohmann::ordered_json audit_to_json(const AuditRecord& record) {
    nlohmann::ordered_json j;
    j["query"] = record.query;
    j["config"] = record.config.to_json();

    nlohmann::ordered_json decomposition;
    decomposition["decomposed"] = record.decomposition.decomposed;
    decomposition["raw"] = record.decomposition.raw;
    decomposition["sub_questions"] = nlohmann::ordered_json::array();
    for (const SubQuestion& q : record.decomposition.sub_questions)
        decomposition["sub_questions"].push_back(detail::sub_question_to_json(q));
    j["decomposition"] = std::move(decomposition);

    std::set<std::size_t> suppressed;
    for (const ConflictReport& c : record.conflicts)
        if (c.suppressed >= 0) suppressed.insert(static_cast<std::size_t>(c.suppressed));

    j["chains"] = nlohmann::ordered_json::array();
    for (const ReasoningChain& chain : record.chains) {
        nlohmann::ordered_json cj;
        cj["sub_question"] = detail::sub_question_to_json(chain.sub_question);
        cj["turns"] = nlohmann::ordered_json::array();
        for (const TurnRecord& turn : chain.turns) {
            nlohmann::ordered_json tj;
            tj["turn_index"] = turn.turn_index;
            tj["generation"] = turn.generation;
            tj["action"] = detail::action_to_json(turn.action);
            tj["injected_result"] =
                turn.injected_result ? nlohmann::ordered_json(*turn.injected_result)
                                     : nlohmann::ordered_json(nullptr);
            cj["turns"].push_back(std::move(tj));
        }
        cj["retrieval_count"] = chain.retrieval_count;
        cj["evidence"] = detail::evidence_to_json(chain.evidence);
        cj["answer"] = chain.answer ? nlohmann::ordered_json(*chain.answer)
                                    : nlohmann::ordered_json(nullptr);
        cj["status"] = chain.status;
        cj["error"] = chain.error;
        cj["suppressed"] = suppressed.count(chain.sub_question.index) > 0;
        j["chains"].push_back(std::move(cj));
    }

    j["conflicts"] = nlohmann::ordered_json::array();
    for (const ConflictReport& c : record.conflicts) {
        j["conflicts"].push_back({{"index_i", c.index_i},
                                  {"index_j", c.index_j},
                                  {"rule", c.rule},
                                  {"description", c.description},
                                  {"kept", c.kept},
                                  {"suppressed", c.suppressed}});
    }

    j["final_answer"] = record.final_answer;
    j["timings"] = {{"decompose_ms", record.timings.decompose_ms},
                    {"chains_ms", record.timings.chains_ms},
                    {"conflicts_ms", record.timings.conflicts_ms},
                    {"synthesize_ms", record.timings.synthesize_ms},
                    {"total_ms", record.timings.total_ms}};
    j["started_at"] = record.started_at;
    j["finished_at"] = record.finished_at;
    return j;
}

inline AuditRecord audit_from_json(const nlohmann::json& j) {
    AuditRecord record;
    record.query = j.at("query").get<std::string>();
    record.config = RunConfig::from_json(j.at("config"));

    const auto& d = j.at("decomposition");
    record.decomposition.decomposed = d.at("decomposed").get<bool>();
    record.decomposition.raw = d.at("raw").get<std::string>();
    for (const auto& q : d.at("sub_questions"))
        record.decomposition.sub_questions.push_back(detail::sub_question_from_json(q));

    for (const auto& cj : j.at("chains")) {
        ReasoningChain chain;
        chain.sub_question = detail::sub_question_from_json(cj.at("sub_question"));
        for (const auto& tj : cj.at("turns")) {
            TurnRecord turn;
            turn.turn_index = tj.at("turn_index").get<std::size_t>();
            turn.generation = tj.at("generation").get<std::string>();
            turn.action = detail::action_from_json(tj.at("action"));
            if (!tj.at("injected_result").is_null())
                turn.injected_result = tj.at("injected_result").get<std::string>();
            chain.turns.push_back(std::move(turn));
        }
        chain.retrieval_count = cj.at("retrieval_count").get<std::size_t>();
        chain.evidence = detail::evidence_from_json(cj.at("evidence"));
        if (!cj.at("answer").is_null()) chain.answer = cj.at("answer").get<std::string>();
        chain.status = cj.at("status").get<std::string>();
        chain.error = cj.at("error").get<std::string>();
        record.chains.push_back(std::move(chain));
    }

    for (const auto& c : j.at("conflicts")) {
        ConflictReport report;
        report.index_i = c.at("index_i").get<std::size_t>();
        report.index_j = c.at("index_j").get<std::size_t>();
        report.rule = c.at("rule").get<std::string>();
        report.description = c.at("description").get<std::string>();
        report.kept = c.at("kept").get<long>();
        report.suppressed = c.at("suppressed").get<long>();
        record.conflicts.push_back(std::move(report));
    }

    record.final_answer = j.at("final_answer").get<std::string>();
    const auto& t = j.at("timings");
    record.timings.decompose_ms = t.at("decompose_ms").get<double>();
    record.timings.chains_ms = t.at("chains_ms").get<double>();
    record.timings.conflicts_ms = t.at("conflicts_ms").get<double>();
    record.timings.synthesize_ms = t.at("synthesize_ms").get<double>();
    record.timings.total_ms = t.at("total_ms").get<double>();
    record.started_at = j.at("started_at").get<std::string>();
    record.finished_at = j.at("finished_at").get<std::string>();
    return record;
}

inline void emit_audit(const AuditRecord& record, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write audit record: " + path);
    out << audit_to_json(record).dump(2) << '\n';
    if (!out) throw IoError("failed writing audit record: " + path);
}

inline AuditRecord load_audit(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open audit record: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON: " + e.what());
    }
    try {
        return audit_from_json(doc);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": bad audit record: " + e.what());
    }
}

// Rebuild the scripted backend that reproduces this run: the decomposition
// reply, every chain turn in order, each chain's sub-answer, and the final
// synthesis reply.
inline std::shared_ptr<ScriptedBackend> script_from_audit(const AuditRecord& record) {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->add_entry({"decompose", 0, record.decomposition.raw});
    for (const ReasoningChain& chain : record.chains) {
        const std::string chain_id = "chain:" + std::to_string(chain.sub_question.index);
        std::uint32_t step = 0;
        for (const TurnRecord& turn : chain.turns)
            backend->add_entry({chain_id, step++, turn.generation});
        if (chain.answer) backend->add_entry({chain_id, step, *chain.answer});
    }
    if (!record.final_answer.empty())
        backend->add_entry({"synthesize", 0, record.final_answer});
    return backend;
}

}  // namespace mirage
