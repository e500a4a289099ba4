#pragma once
// Pipeline orchestration over the shared workspace: decompose the query,
// run one reasoning chain per sub-question in parallel, detect and resolve
// conflicts, synthesize the final answer, and assemble the audit record.
//
// A chain failure degrades the run (the chain is recorded and excluded from
// synthesis); only decomposition failure, synthesis failure, or every chain
// failing aborts, and the thrown PipelineError still carries the partial
// audit so the trace is never lost.

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mirage/audit.hpp"
#include "mirage/backend.hpp"
#include "mirage/config.hpp"
#include "mirage/decomposer.hpp"
#include "mirage/error.hpp"
#include "mirage/kg.hpp"
#include "mirage/retriever.hpp"
#include "mirage/synthesizer.hpp"
#include "mirage/workspace.hpp"

namespace mirage {

class PipelineError : public Error {
public:
    PipelineError(const std::string& what, AuditRecord partial)
        : Error(what), partial_(std::move(partial)) {}

    const AuditRecord& partial_audit() const { return partial_; }

private:
    AuditRecord partial_;
};

struct PipelineOutcome {
    FinalAnswer final_answer;
    AuditRecord audit;
};

class Coordinator {
public:
    Coordinator(const KnowledgeGraph& graph, RunConfig config, std::shared_ptr<Backend> backend)
        : graph_(graph),
          config_(std::move(config)),
          backend_(std::move(backend)),
          prompts_(config_.load_prompts()),
          rules_(config_.load_rules()),
          retriever_(graph_, default_embedder()) {
        config_.validate();
        if (!backend_) throw InvalidArgumentError("coordinator needs a backend");
    }

    const Workspace& workspace() const { return workspace_; }

    // One query per coordinator: the workspace is single-assignment, so a
    // second run would collide with the published keys.
    PipelineOutcome run(const std::string& query) {
        if (ran_) throw InvalidArgumentError("coordinator already ran; create a fresh one");
        ran_ = true;
        using clock = std::chrono::steady_clock;
        auto ms_between = [](clock::time_point a, clock::time_point b) {
            return std::chrono::duration<double, std::milli>(b - a).count();
        };

        AuditRecord record;
        record.query = query;
        record.config = config_;
        record.started_at = iso_utc_timestamp();
        const auto run_start = clock::now();

        auto fail = [&](const std::string& message) {
            record.finished_at = iso_utc_timestamp();
            record.timings.total_ms = ms_between(run_start, clock::now());
            return PipelineError(message, record);
        };

        // decomposition
        auto stage_start = clock::now();
        try {
            record.decomposition =
                decompose(query, config_.n_q, *backend_, prompts_, config_.sampling.decompose,
                          config_.max_tokens);
        } catch (const Error& e) {
            workspace_.put("decomposition", std::string(e.what()), StageStatus::failed);
            throw fail(e.what());
        }
        workspace_.put("decomposition", record.decomposition);
        record.timings.decompose_ms = ms_between(stage_start, clock::now());

        // parallel chains
        stage_start = clock::now();
        run_chains(record.decomposition.sub_questions);
        std::vector<std::string> chain_keys;
        for (const SubQuestion& q : record.decomposition.sub_questions)
            chain_keys.push_back(chain_key(q.index));
        workspace_.wait_all(chain_keys);
        for (const SubQuestion& q : record.decomposition.sub_questions)
            record.chains.push_back(workspace_.get<ReasoningChain>(chain_key(q.index)));
        record.timings.chains_ms = ms_between(stage_start, clock::now());

        std::vector<SubAnswer> answers;
        for (const ReasoningChain& chain : record.chains) {
            if (chain.status == "ok" && chain.answer)
                answers.push_back(SubAnswer{chain.sub_question, *chain.answer, chain.evidence});
        }
        if (answers.empty()) throw fail("all reasoning chains failed");

        // conflict detection and majority-based verification
        stage_start = clock::now();
        ResolutionResult resolution =
            resolve(detect_conflicts(answers, rules_, normalizer_), answers, query);
        record.conflicts = resolution.reports;
        workspace_.put("conflicts", resolution.reports);
        record.timings.conflicts_ms = ms_between(stage_start, clock::now());

        // final synthesis
        stage_start = clock::now();
        FinalAnswer final_answer;
        try {
            final_answer = synthesize_final(query, resolution.verified, *backend_, prompts_,
                                            config_.sampling.synthesize, config_.context,
                                            config_.max_tokens);
        } catch (const Error& e) {
            workspace_.put("final", std::string(e.what()), StageStatus::failed);
            throw fail(e.what());
        }
        record.final_answer = final_answer.text;
        workspace_.put("final", final_answer.text);
        record.timings.synthesize_ms = ms_between(stage_start, clock::now());

        record.finished_at = iso_utc_timestamp();
        record.timings.total_ms = ms_between(run_start, clock::now());
        return PipelineOutcome{std::move(final_answer), std::move(record)};
    }

private:
    static std::string chain_key(std::size_t index) {
        return "chain:" + std::to_string(index);
    }

    void run_chains(const std::vector<SubQuestion>& sub_questions) {
        std::size_t parallelism = config_.jobs ? config_.jobs : sub_questions.size();
        if (parallelism < 1) parallelism = 1;
        auto gate = std::make_shared<std::counting_semaphore<>>(
            static_cast<std::ptrdiff_t>(parallelism));

        std::vector<std::thread> workers;
        workers.reserve(sub_questions.size());
        for (const SubQuestion& q : sub_questions) {
            workers.emplace_back([this, q, gate] {
                gate->acquire();
                ReasoningChain chain;
                try {
                    chain = retriever_.run_chain(q, config_.chain, *backend_, prompts_,
                                                 config_.sampling, config_.context,
                                                 config_.max_tokens, chain_key(q.index));
                } catch (const std::exception& e) {
                    chain.sub_question = q;
                    chain.status = "failed";
                    chain.error = e.what();
                }
                gate->release();
                StageStatus status = chain_status(chain);
                workspace_.put(chain_key(q.index), std::move(chain), status);
            });
        }
        for (std::thread& w : workers) w.join();
    }

    static StageStatus chain_status(const ReasoningChain& chain) {
        return chain.status == "ok" ? StageStatus::ready : StageStatus::failed;
    }

    const KnowledgeGraph& graph_;
    RunConfig config_;
    std::shared_ptr<Backend> backend_;
    PromptSet prompts_;
    ConflictRules rules_;
    TermNormalizer normalizer_;
    Retriever retriever_;
    Workspace workspace_;
    bool ran_ = false;
};

struct ReplayReport {
    bool match = false;
    std::string original;
    std::string replayed;
};

// Re-execute a recorded run by replaying its stored generations through the
// full pipeline against the given graph, then compare final answers. The
// prompt/rule paths recorded in the config are not needed (scripted replies
// are keyed by stage and step, not prompt text), so builtins stand in.
inline ReplayReport replay_audit(const AuditRecord& record, const KnowledgeGraph& graph) {
    if (record.final_answer.empty())
        throw UsageError("audit record has no final answer; only completed runs can replay");
    RunConfig config = record.config;
    config.templates_dir.clear();
    config.rules_path.clear();

    Coordinator coordinator(graph, config, script_from_audit(record));
    ReplayReport report;
    report.original = record.final_answer;
    try {
        PipelineOutcome outcome = coordinator.run(record.query);
        report.replayed = outcome.final_answer.text;
    } catch (const Error& e) {
        report.replayed = std::string("<replay failed: ") + e.what() + ">";
    }
    report.match = report.original == report.replayed;
    return report;
}

}  // namespace mirage
