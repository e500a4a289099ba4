#pragma once
// The per-sub-question retrieval-reasoning loop: alternate model turns with
// knowledge-graph queries under a turn budget (max_turns) and a retrieval
// budget (n_r), accumulating verbalized evidence, then synthesize the
// sub-answer from what was gathered.
//
// Loop contract per turn: generate; termination marker or absent search
// block ends the loop; a malformed block injects `malformed_query` and
// continues; an exhausted retrieval budget injects `max_limit_reached`;
// otherwise the search runs, consumes one retrieval, and injects its
// result block. Search failures never raise toward the model — they come
// back as in-band fact lines.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mirage/backend.hpp"
#include "mirage/decomposer.hpp"
#include "mirage/embedding.hpp"
#include "mirage/error.hpp"
#include "mirage/evidence.hpp"
#include "mirage/kg.hpp"
#include "mirage/linker.hpp"
#include "mirage/prompts.hpp"
#include "mirage/protocol.hpp"

namespace mirage {

struct ChainConfig {
    std::size_t max_turns = 10;  // reasoning turns per sub-question
    std::size_t n_r = 5;         // retrieval calls per sub-question
    std::size_t k = 10;          // neighbors per relation (anchor mode)
    std::size_t h = 3;           // max hops (bridge mode)
    std::size_t n = 5;           // max chains per entity pair (bridge mode)
    double tau = 0.7;            // entity similarity threshold

    void validate() const {
        if (max_turns < 1) throw InvalidArgumentError("max_turns must be >= 1");
        if (n_r < 1) throw InvalidArgumentError("n_r must be >= 1");
        if (k < 1) throw InvalidArgumentError("k must be >= 1");
        if (h < 1) throw InvalidArgumentError("h must be >= 1");
        if (n < 1) throw InvalidArgumentError("n must be >= 1");
        if (!(tau > 0.0) || tau > 1.0) throw InvalidArgumentError("tau must be in (0, 1]");
    }

    friend bool operator==(const ChainConfig&, const ChainConfig&) = default;
};

struct TurnAction {
    enum class Kind { searched, control, terminated, malformed };

    Kind kind = Kind::terminated;
    std::optional<SearchBlock> block;     // kind == searched
    std::optional<ControlSignal> signal;  // kind == control

    friend bool operator==(const TurnAction&, const TurnAction&) = default;
};

inline std::string_view turn_action_kind_name(TurnAction::Kind k) {
    switch (k) {
        case TurnAction::Kind::searched: return "searched";
        case TurnAction::Kind::control: return "control";
        case TurnAction::Kind::terminated: return "terminated";
        case TurnAction::Kind::malformed: return "malformed";
    }
    throw InvariantError("unreachable turn action kind");
}

inline TurnAction::Kind turn_action_kind_from_name(std::string_view name) {
    if (name == "searched") return TurnAction::Kind::searched;
    if (name == "control") return TurnAction::Kind::control;
    if (name == "terminated") return TurnAction::Kind::terminated;
    if (name == "malformed") return TurnAction::Kind::malformed;
    throw ParseError("unknown turn action kind: " + std::string(name));
}

struct TurnRecord {
    std::size_t turn_index = 0;
    std::string generation;
    TurnAction action;
    std::optional<std::string> injected_result;

    friend bool operator==(const TurnRecord&, const TurnRecord&) = default;
};

struct ReasoningChain {
    SubQuestion sub_question;
    std::vector<TurnRecord> turns;
    std::size_t retrieval_count = 0;
    EvidenceSet evidence;
    std::optional<std::string> answer;
    std::string status = "ok";  // "ok" | "failed"
    std::string error;          // populated when status == "failed"
};

// What one kg_search produced: the lines injected into the result block
// (sentinel lines included) and the evidence items actually backed by graph
// facts (empty for sentinel outcomes).
struct RetrievalOutcome {
    std::vector<std::string> lines;
    std::vector<EvidenceItem> items;
    bool no_match = false;
};

class Retriever {
public:
    Retriever(const KnowledgeGraph& graph, std::shared_ptr<const Embedder> embedder)
        : graph_(graph), linker_(graph, std::move(embedder)) {}

    const EntityLinker& linker() const { return linker_; }

    // Anchor mode for one mention, bridge mode for two. All failures are
    // in-band: unmatched mention -> `no_entity_match`, nothing retrievable
    // -> `no path found`.
    RetrievalOutcome kg_search(const SearchBlock& block, const ChainConfig& cfg) const {
        cfg.validate();
        if (block.mentions.size() == 1) return anchor_search(block, cfg);
        if (block.mentions.size() == 2) return bridge_search(block, cfg);
        throw InvalidArgumentError("search block must carry 1 or 2 mentions");
    }

    ReasoningChain run_chain(const SubQuestion& q, const ChainConfig& cfg, Backend& backend,
                             const PromptSet& prompts, const SamplingSet& sampling,
                             const ContextBudget& budget, std::uint32_t max_tokens = 4096,
                             std::string chain_id = "") const {
        cfg.validate();
        if (chain_id.empty()) chain_id = "chain:" + std::to_string(q.index);

        ReasoningChain chain;
        chain.sub_question = q;

        std::vector<Message> messages;
        messages.push_back(Message{
            Role::user, render_template(prompts.reason, {{"sub_question", q.text},
                                                         {"evidence_so_far", "(none)"}})});

        std::size_t r = 0;
        for (std::size_t t = 0; t < cfg.max_turns; ++t) {
            apply_context_budget(messages, budget);
            GenerationRequest req{chain_id, messages, sampling.retrieval, max_tokens};
            GenerationResponse resp;
            try {
                resp = backend.generate(req);
            } catch (const Error& e) {
                chain.status = "failed";
                chain.error = std::string("turn ") + std::to_string(t) + ": " + e.what();
                return chain;
            }
            messages.push_back(Message{Role::assistant, resp.content});

            TurnRecord rec;
            rec.turn_index = t;
            rec.generation = resp.content;

            if (detect_termination(resp.content)) {
                rec.action.kind = TurnAction::Kind::terminated;
                chain.turns.push_back(std::move(rec));
                break;
            }

            SearchBlock block;
            try {
                // termination was not detected, so a begin delimiter exists
                block = *extract_search_block(resp.content);
            } catch (const ProtocolError&) {
                rec.action.kind = TurnAction::Kind::malformed;
                rec.injected_result = render_malformed_query_block();
                messages.push_back(Message{Role::user, *rec.injected_result});
                chain.turns.push_back(std::move(rec));
                continue;
            }

            if (r >= cfg.n_r) {
                rec.action.kind = TurnAction::Kind::control;
                rec.action.signal = ControlSignal::max_limit_reached;
                rec.injected_result = render_result_block(ControlSignal::max_limit_reached);
                messages.push_back(Message{Role::user, *rec.injected_result});
                chain.turns.push_back(std::move(rec));
                continue;
            }

            RetrievalOutcome outcome = kg_search(block, cfg);
            ++r;
            chain.retrieval_count = r;
            chain.evidence.merge(outcome.items);
            rec.action.kind = TurnAction::Kind::searched;
            rec.action.block = std::move(block);
            rec.injected_result = render_result_block(outcome.lines);
            messages.push_back(Message{Role::user, *rec.injected_result});
            chain.turns.push_back(std::move(rec));
        }

        synthesize_sub_answer(chain, backend, prompts, sampling, max_tokens, chain_id);
        return chain;
    }

private:
    RetrievalOutcome anchor_search(const SearchBlock& block, const ChainConfig& cfg) const {
        RetrievalOutcome out;
        LinkResult match = linker_.link(block.mentions[0], cfg.tau);
        if (!match) {
            out.lines = {std::string(tokens::kNoEntityMatch)};
            out.no_match = true;
            return out;
        }
        std::vector<Triple> triples = graph_.neighbors(match->entity_id, cfg.k);
        if (triples.empty()) {
            out.lines = {std::string(tokens::kNoPathFound)};
            return out;
        }
        for (const Triple& t : triples) {
            std::string fact = verbalize(t);
            out.items.push_back(EvidenceItem{
                fact, {EvidenceOrigin{RetrievalMode::anchor, block.mentions,
                                      {match->entity_id}, {t}}}});
            out.lines.push_back(std::move(fact));
        }
        return out;
    }

    RetrievalOutcome bridge_search(const SearchBlock& block, const ChainConfig& cfg) const {
        RetrievalOutcome out;
        LinkResult first = linker_.link(block.mentions[0], cfg.tau);
        LinkResult second = linker_.link(block.mentions[1], cfg.tau);
        if (!first || !second) {
            out.lines = {std::string(tokens::kNoEntityMatch)};
            out.no_match = true;
            return out;
        }
        if (first->entity_index == second->entity_index) {
            // both mentions resolve to one entity; no chain can connect it
            out.lines = {std::string(tokens::kNoPathFound)};
            return out;
        }
        std::vector<Chain> chains =
            graph_.find_chains(first->entity_id, second->entity_id, cfg.h, cfg.n);
        if (chains.empty()) {
            out.lines = {std::string(tokens::kNoPathFound)};
            return out;
        }
        const std::vector<std::string> entities{first->entity_id, second->entity_id};
        for (const Chain& chain : chains) {
            std::string joined;
            for (std::size_t i = 0; i < chain.steps.size(); ++i) {
                std::string fact = verbalize(chain.steps[i]);
                if (i) joined += "; ";
                joined += fact;
                out.items.push_back(EvidenceItem{
                    std::move(fact), {EvidenceOrigin{RetrievalMode::bridge, block.mentions,
                                                     entities, chain.steps}}});
            }
            out.lines.push_back(std::move(joined));
            out.lines.push_back("chain " + first->entity_id + " -> " + second->entity_id +
                                " (" + std::to_string(chain.length()) + " hops)");
        }
        return out;
    }

    void synthesize_sub_answer(ReasoningChain& chain, Backend& backend,
                               const PromptSet& prompts, const SamplingSet& sampling,
                               std::uint32_t max_tokens, const std::string& chain_id) const {
        std::string evidence_text;
        for (const std::string& fact : chain.evidence.facts()) {
            evidence_text += fact;
            evidence_text += '\n';
        }
        if (evidence_text.empty()) evidence_text = "(none)\n";

        GenerationRequest req;
        req.chain_id = chain_id;
        req.messages.push_back(Message{
            Role::user,
            render_template(prompts.answer, {{"sub_question", chain.sub_question.text},
                                             {"evidence", evidence_text}})});
        req.sampling = sampling.synthesize;
        req.max_tokens = max_tokens;
        try {
            GenerationResponse resp = backend.generate(req);
            if (trim(resp.content).empty()) {
                chain.status = "failed";
                chain.error = "empty sub-answer generation";
                return;
            }
            chain.answer = resp.content;
        } catch (const Error& e) {
            chain.status = "failed";
            chain.error = std::string("sub-answer: ") + e.what();
        }
    }

    const KnowledgeGraph& graph_;
    EntityLinker linker_;
};

}  // namespace mirage
