// Command-line entry points: graph tooling (`kg stats`, `kg validate`),
// single-query runs (`ask`), batch runs (`batch`), and audit replay
// (`replay`). Exit codes: 0 success, 1 pipeline/data failure, 2 usage.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mirage/mirage.hpp"

namespace {

struct ChainOverrides {
    std::optional<std::size_t> max_turns;
    std::optional<std::size_t> n_q;
    std::optional<std::size_t> n_r;
    std::optional<std::size_t> k;
    std::optional<std::size_t> h;
    std::optional<std::size_t> n;
    std::optional<double> tau;
    std::optional<std::size_t> jobs;

    void apply(mirage::RunConfig& cfg) const {
        if (max_turns) cfg.chain.max_turns = *max_turns;
        if (n_q) cfg.n_q = *n_q;
        if (n_r) cfg.chain.n_r = *n_r;
        if (k) cfg.chain.k = *k;
        if (h) cfg.chain.h = *h;
        if (n) cfg.chain.n = *n;
        if (tau) cfg.chain.tau = *tau;
        if (jobs) cfg.jobs = *jobs;
        cfg.validate();
    }
};

mirage::GraphFormat parse_format(const std::string& format, const std::string& path) {
    mirage::GraphSection section;
    section.path = path;
    section.format = format;
    return section.resolved_format();
}

int cmd_kg_stats(const std::string& path, const std::string& format) {
    mirage::KnowledgeGraph graph =
        mirage::KnowledgeGraph::load_file(path, parse_format(format, path));
    mirage::GraphStats stats = graph.stats();
    std::cout << "entities: " << stats.entity_count << "\n";
    std::cout << "triples: " << stats.triple_count << "\n";
    std::cout << "relations: " << stats.relation_count << "\n";
    std::cout << "out-degree histogram:\n";
    for (const auto& [degree, count] : stats.out_degree_histogram)
        std::cout << "  " << degree << ": " << count << "\n";
    return 0;
}

int cmd_kg_validate(const std::string& path, const std::string& format) {
    mirage::KnowledgeGraph graph =
        mirage::KnowledgeGraph::load_file(path, parse_format(format, path));
    // the out-index and in-index must describe the same unique triple set
    std::vector<mirage::Triple> outs;
    std::vector<mirage::Triple> ins;
    outs.reserve(graph.triple_count());
    ins.reserve(graph.triple_count());
    for (std::uint32_t i = 0; i < graph.entity_count(); ++i) {
        const std::string& id = graph.entity(i).id;
        for (mirage::Triple& t : graph.outgoing(id)) outs.push_back(std::move(t));
        for (mirage::Triple& t : graph.incoming(id)) ins.push_back(std::move(t));
    }
    auto order = [](const mirage::Triple& a, const mirage::Triple& b) {
        return std::tie(a.head, a.relation, a.tail) < std::tie(b.head, b.relation, b.tail);
    };
    std::sort(outs.begin(), outs.end(), order);
    std::sort(ins.begin(), ins.end(), order);
    if (outs != ins || outs.size() != graph.triple_count() ||
        std::adjacent_find(outs.begin(), outs.end()) != outs.end()) {
        std::cerr << "INDEX MISMATCH: adjacency indexes disagree with the triple set\n";
        return 1;
    }
    std::cout << "OK: " << path << " (" << graph.entity_count() << " entities, "
              << graph.triple_count() << " triples, " << graph.relation_count()
              << " relations)\n";
    return 0;
}

void write_audit_file(const mirage::AuditRecord& record, const std::string& dir,
                      const std::string& file_name) {
    std::filesystem::create_directories(dir);
    std::string path = (std::filesystem::path(dir) / file_name).string();
    mirage::emit_audit(record, path);
    std::cerr << "audit: " << path << "\n";
}

int cmd_ask(const std::string& query, const std::string& config_path,
            const std::string& audit_out, const ChainOverrides& overrides) {
    mirage::RunConfig config = mirage::RunConfig::load_file(config_path);
    overrides.apply(config);
    std::string audit_dir = audit_out.empty() ? config.audit_dir : audit_out;

    mirage::KnowledgeGraph graph = config.load_graph();
    mirage::Coordinator coordinator(graph, config, config.make_backend());
    try {
        mirage::PipelineOutcome outcome = coordinator.run(query);
        for (const mirage::ReasoningChain& chain : outcome.audit.chains) {
            if (chain.status != "ok")
                std::cerr << "chain " << chain.sub_question.index << " failed: " << chain.error
                          << "\n";
        }
        if (!audit_dir.empty()) write_audit_file(outcome.audit, audit_dir, "audit.json");
        std::cout << outcome.final_answer.text << "\n";
        return 0;
    } catch (const mirage::PipelineError& e) {
        std::cerr << "pipeline error: " << e.what() << "\n";
        if (!audit_dir.empty()) write_audit_file(e.partial_audit(), audit_dir, "audit.json");
        return 1;
    }
}

struct BatchJob {
    std::string id;
    std::string query;
};

std::vector<BatchJob> load_batch_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mirage::UsageError("cannot open batch input: " + path);
    std::vector<BatchJob> jobs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw mirage::UsageError(path + ":" + std::to_string(line_no) +
                                     ": invalid JSON: " + e.what());
        }
        if (!obj.is_object() || !obj.contains("id") || !obj.contains("query") ||
            !obj["id"].is_string() || !obj["query"].is_string()) {
            throw mirage::UsageError(path + ":" + std::to_string(line_no) +
                                     ": expected {\"id\", \"query\"}");
        }
        BatchJob job{obj["id"].get<std::string>(), obj["query"].get<std::string>()};
        if (job.id.empty() || job.id.find('/') != std::string::npos ||
            job.id.find("..") != std::string::npos) {
            throw mirage::UsageError(path + ":" + std::to_string(line_no) +
                                     ": id must be a plain file name");
        }
        jobs.push_back(std::move(job));
    }
    if (jobs.empty()) throw mirage::UsageError(path + ": no jobs found");
    return jobs;
}

int cmd_batch(const std::string& input_path, const std::string& config_path,
              const std::string& out_dir, std::size_t jobs_limit,
              const ChainOverrides& overrides) {
    mirage::RunConfig config = mirage::RunConfig::load_file(config_path);
    overrides.apply(config);
    std::vector<BatchJob> jobs = load_batch_input(input_path);
    std::filesystem::create_directories(out_dir);

    mirage::KnowledgeGraph graph = config.load_graph();
    if (jobs_limit < 1) jobs_limit = 1;

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> failures{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const BatchJob& job = jobs[i];
            std::string out_path =
                (std::filesystem::path(out_dir) / (job.id + ".json")).string();
            try {
                // each job gets a fresh backend so scripted cursors start at 0
                mirage::Coordinator coordinator(graph, config, config.make_backend());
                mirage::PipelineOutcome outcome = coordinator.run(job.query);
                mirage::emit_audit(outcome.audit, out_path);
                std::lock_guard<std::mutex> lock(log_mutex);
                std::cerr << "done: " << job.id << "\n";
            } catch (const mirage::PipelineError& e) {
                failures.fetch_add(1);
                try {
                    mirage::emit_audit(e.partial_audit(), out_path);
                } catch (const mirage::Error&) {
                }
                std::lock_guard<std::mutex> lock(log_mutex);
                std::cerr << "failed: " << job.id << ": " << e.what() << "\n";
            } catch (const std::exception& e) {
                failures.fetch_add(1);
                std::lock_guard<std::mutex> lock(log_mutex);
                std::cerr << "failed: " << job.id << ": " << e.what() << "\n";
            }
        }
    };
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < jobs_limit && i < jobs.size(); ++i)
        workers.emplace_back(worker);
    for (std::thread& w : workers) w.join();

    std::cerr << jobs.size() - failures.load() << "/" << jobs.size() << " jobs succeeded\n";
    return failures.load() == 0 ? 0 : 1;
}

int cmd_replay(const std::string& audit_path, const std::string& graph_override,
               const std::string& format) {
    mirage::AuditRecord record = mirage::load_audit(audit_path);
    mirage::KnowledgeGraph graph =
        graph_override.empty()
            ? record.config.load_graph()
            : mirage::KnowledgeGraph::load_file(graph_override,
                                                parse_format(format, graph_override));
    mirage::ReplayReport report = mirage::replay_audit(record, graph);
    if (report.match) {
        std::cout << "MATCH\n";
        return 0;
    }
    std::cout << "MISMATCH\n";
    std::cerr << "original: " << report.original << "\n";
    std::cerr << "replayed: " << report.replayed << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-graph retrieval-reasoning engine"};
    app.require_subcommand(1);

    // kg stats | kg validate
    auto* kg = app.add_subcommand("kg", "graph tooling");
    kg->require_subcommand(1);
    std::string kg_path;
    std::string kg_format = "auto";
    auto* kg_stats = kg->add_subcommand("stats", "print graph statistics");
    kg_stats->add_option("path", kg_path, "triple file")->required();
    kg_stats->add_option("--format", kg_format, "tsv|jsonl|auto");
    auto* kg_validate = kg->add_subcommand("validate", "load and cross-check indexes");
    kg_validate->add_option("path", kg_path, "triple file")->required();
    kg_validate->add_option("--format", kg_format, "tsv|jsonl|auto");

    // shared chain overrides; `--jobs` means chain parallelism for ask but
    // job parallelism for batch, so only ask wires it here
    ChainOverrides overrides;
    auto add_overrides = [&overrides](CLI::App* cmd, bool with_jobs) {
        cmd->add_option("--max-turns", overrides.max_turns, "reasoning turns per sub-question");
        cmd->add_option("--nq", overrides.n_q, "max sub-questions per query");
        cmd->add_option("--nr", overrides.n_r, "retrieval calls per sub-question");
        cmd->add_option("-k,--neighbors", overrides.k, "neighbors per relation");
        cmd->add_option("--hops", overrides.h, "max hops in bridge mode");
        cmd->add_option("--max-chains", overrides.n, "max chains per entity pair");
        cmd->add_option("--tau", overrides.tau, "entity similarity threshold");
        if (with_jobs) cmd->add_option("--jobs", overrides.jobs, "chain parallelism");
    };

    // ask
    auto* ask = app.add_subcommand("ask", "answer one query");
    std::string ask_query;
    std::string ask_config;
    std::string ask_audit_out;
    ask->add_option("--query", ask_query, "the query to answer")->required();
    ask->add_option("--config", ask_config, "run config file")->required();
    ask->add_option("--audit-out", ask_audit_out, "directory for audit.json");
    add_overrides(ask, true);

    // batch
    auto* batch = app.add_subcommand("batch", "answer queries from a JSONL file");
    std::string batch_input;
    std::string batch_config;
    std::string batch_out;
    std::size_t batch_jobs = 1;
    batch->add_option("--input", batch_input, "JSONL of {\"id\", \"query\"}")->required();
    batch->add_option("--config", batch_config, "run config file")->required();
    batch->add_option("--out", batch_out, "output directory")->required();
    batch->add_option("--jobs", batch_jobs, "parallel jobs (default 1)");
    add_overrides(batch, false);

    // replay
    auto* replay = app.add_subcommand("replay", "re-execute a recorded audit");
    std::string replay_audit_path;
    std::string replay_graph;
    std::string replay_format = "auto";
    replay->add_option("--audit", replay_audit_path, "audit record to replay")->required();
    replay->add_option("--graph", replay_graph, "graph override path");
    replay->add_option("--format", replay_format, "tsv|jsonl|auto for --graph");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (kg_stats->parsed()) return cmd_kg_stats(kg_path, kg_format);
        if (kg_validate->parsed()) return cmd_kg_validate(kg_path, kg_format);
        if (ask->parsed()) return cmd_ask(ask_query, ask_config, ask_audit_out, overrides);
        if (batch->parsed())
            return cmd_batch(batch_input, batch_config, batch_out, batch_jobs, overrides);
        if (replay->parsed()) return cmd_replay(replay_audit_path, replay_graph, replay_format);
        std::cerr << "no subcommand given\n";
        return 2;
    } catch (const mirage::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const mirage::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
