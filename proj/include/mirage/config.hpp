#pragma once
// Run configuration: one JSON file is the single source of truth for a run;
// CLI flags override individual fields. Omitted keys fall back to the
// engine defaults, so a minimal config is just a graph path and a backend.
//
// Relative paths inside the file resolve against the config file's own
// directory. Unknown keys are rejected — typos should fail loudly.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mirage/backend.hpp"
#include "mirage/error.hpp"
#include "mirage/http_backend.hpp"
#include "mirage/kg.hpp"
#include "mirage/prompts.hpp"
#include "mirage/retriever.hpp"
#include "mirage/scripted_backend.hpp"
#include "mirage/synthesizer.hpp"

namespace mirage {

struct GraphSection {
    std::string path;
    std::string format = "auto";  // "tsv" | "jsonl" | "auto" (by extension)

    GraphFormat resolved_format() const {
        if (format == "tsv") return GraphFormat::tsv;
        if (format == "jsonl") return GraphFormat::jsonl;
        if (format == "auto") {
            std::string ext = std::filesystem::path(path).extension().string();
            return (ext == ".jsonl" || ext == ".ndjson") ? GraphFormat::jsonl : GraphFormat::tsv;
        }
        throw UsageError("graph.format must be tsv, jsonl, or auto; got: " + format);
    }

    friend bool operator==(const GraphSection&, const GraphSection&) = default;
};

struct BackendSection {
    std::string kind;    // "scripted" | "http"
    std::string script;  // scripted: path to the JSONL script
    HttpBackendConfig http;

    friend bool operator==(const BackendSection&, const BackendSection&) = default;
};

struct RunConfig {
    GraphSection graph;
    ChainConfig chain;
    std::size_t n_q = 4;  // max sub-questions per query
    SamplingSet sampling;
    ContextBudget context;
    std::uint32_t max_tokens = 4096;
    BackendSection backend;
    std::string templates_dir;  // empty -> builtin templates
    std::string rules_path;     // empty -> default conflict rules
    std::string audit_dir;      // empty -> no audit written by default
    std::size_t jobs = 0;       // chain parallelism; 0 -> one per sub-question

    friend bool operator==(const RunConfig&, const RunConfig&) = default;

    void validate() const {
        std::vector<std::string> missing;
        if (graph.path.empty()) missing.push_back("graph.path");
        if (backend.kind.empty()) {
            missing.push_back("backend.kind");
        } else if (backend.kind == "scripted") {
            if (backend.script.empty()) missing.push_back("backend.script");
        } else if (backend.kind == "http") {
            if (backend.http.endpoint.empty()) missing.push_back("backend.endpoint");
        } else {
            throw UsageError("backend.kind must be scripted or http; got: " + backend.kind);
        }
        if (!missing.empty()) {
            std::string joined;
            for (std::size_t i = 0; i < missing.size(); ++i) {
                if (i) joined += ", ";
                joined += missing[i];
            }
            throw UsageError("missing config keys: " + joined);
        }
        graph.resolved_format();  // rejects bad format values
        if (n_q < 1) throw UsageError("n_q must be >= 1");
        try {
            chain.validate();
        } catch (const InvalidArgumentError& e) {
            throw UsageError(e.what());
        }
    }

    static RunConfig load_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw UsageError("cannot open config file: " + path);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw UsageError(path + ": invalid JSON: " + e.what());
        }
        std::string base_dir = std::filesystem::path(path).parent_path().string();
        return from_json(doc, base_dir);
    }

    static RunConfig from_json(const nlohmann::json& doc, const std::string& base_dir = "") {
        if (!doc.is_object()) throw UsageError("config root must be a JSON object");
        RunConfig cfg;
        auto resolve = [&base_dir](const std::string& p) {
            if (p.empty() || base_dir.empty() || std::filesystem::path(p).is_absolute())
                return p;
            return (std::filesystem::path(base_dir) / p).string();
        };

        for (const auto& [key, value] : doc.items()) {
            if (key == "graph") {
                expect_object(value, "graph");
                for (const auto& [gk, gv] : value.items()) {
                    if (gk == "path")
                        cfg.graph.path = resolve(as_string(gv, "graph.path"));
                    else if (gk == "format")
                        cfg.graph.format = as_string(gv, "graph.format");
                    else
                        throw UsageError("unknown config key: graph." + gk);
                }
            } else if (key == "chain") {
                expect_object(value, "chain");
                for (const auto& [ck, cv] : value.items()) {
                    if (ck == "max_turns") cfg.chain.max_turns = as_count(cv, "chain.max_turns");
                    else if (ck == "n_r") cfg.chain.n_r = as_count(cv, "chain.n_r");
                    else if (ck == "k") cfg.chain.k = as_count(cv, "chain.k");
                    else if (ck == "h") cfg.chain.h = as_count(cv, "chain.h");
                    else if (ck == "n") cfg.chain.n = as_count(cv, "chain.n");
                    else if (ck == "tau") cfg.chain.tau = as_number(cv, "chain.tau");
                    else throw UsageError("unknown config key: chain." + ck);
                }
            } else if (key == "n_q") {
                cfg.n_q = as_count(value, "n_q");
            } else if (key == "sampling") {
                expect_object(value, "sampling");
                for (const auto& [sk, sv] : value.items()) {
                    if (sk == "retrieval")
                        cfg.sampling.retrieval = parse_sampling(sv, "sampling.retrieval");
                    else if (sk == "decompose")
                        cfg.sampling.decompose = parse_sampling(sv, "sampling.decompose");
                    else if (sk == "synthesize")
                        cfg.sampling.synthesize = parse_sampling(sv, "sampling.synthesize");
                    else
                        throw UsageError("unknown config key: sampling." + sk);
                }
            } else if (key == "context") {
                expect_object(value, "context");
                for (const auto& [ck, cv] : value.items()) {
                    if (ck == "max_input_tokens")
                        cfg.context.max_input_tokens =
                            static_cast<std::uint32_t>(as_count(cv, "context.max_input_tokens"));
                    else if (ck == "chars_per_token")
                        cfg.context.chars_per_token =
                            static_cast<std::uint32_t>(as_count(cv, "context.chars_per_token"));
                    else
                        throw UsageError("unknown config key: context." + ck);
                }
            } else if (key == "max_tokens") {
                cfg.max_tokens = static_cast<std::uint32_t>(as_count(value, "max_tokens"));
            } else if (key == "backend") {
                expect_object(value, "backend");
                for (const auto& [bk, bv] : value.items()) {
                    if (bk == "kind") cfg.backend.kind = as_string(bv, "backend.kind");
                    else if (bk == "script")
                        cfg.backend.script = resolve(as_string(bv, "backend.script"));
                    else if (bk == "endpoint")
                        cfg.backend.http.endpoint = as_string(bv, "backend.endpoint");
                    else if (bk == "model") cfg.backend.http.model = as_string(bv, "backend.model");
                    else if (bk == "api_key_env")
                        cfg.backend.http.api_key_env = as_string(bv, "backend.api_key_env");
                    else if (bk == "timeout_seconds")
                        cfg.backend.http.timeout_seconds =
                            static_cast<std::uint32_t>(as_count(bv, "backend.timeout_seconds"));
                    else if (bk == "max_retries")
                        cfg.backend.http.max_retries = static_cast<std::uint32_t>(
                            as_nonneg(bv, "backend.max_retries"));
                    else if (bk == "backoff_initial_ms")
                        cfg.backend.http.backoff_initial_ms = static_cast<std::uint32_t>(
                            as_nonneg(bv, "backend.backoff_initial_ms"));
                    else
                        throw UsageError("unknown config key: backend." + bk);
                }
            } else if (key == "templates_dir") {
                cfg.templates_dir = resolve(as_string(value, "templates_dir"));
            } else if (key == "rules_path") {
                cfg.rules_path = resolve(as_string(value, "rules_path"));
            } else if (key == "audit_dir") {
                cfg.audit_dir = resolve(as_string(value, "audit_dir"));
            } else if (key == "jobs") {
                cfg.jobs = as_nonneg(value, "jobs");
            } else {
                throw UsageError("unknown config key: " + key);
            }
        }
        cfg.validate();
        return cfg;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json doc;
        doc["graph"] = {{"path", graph.path}, {"format", graph.format}};
        doc["chain"] = {{"max_turns", chain.max_turns}, {"n_r", chain.n_r}, {"k", chain.k},
                        {"h", chain.h},                 {"n", chain.n},     {"tau", chain.tau}};
        doc["n_q"] = n_q;
        auto sampling_json = [](const SamplingParams& p) {
            return nlohmann::ordered_json{{"temperature", p.temperature},
                                          {"top_p", p.top_p},
                                          {"top_k", p.top_k},
                                          {"repetition_penalty", p.repetition_penalty}};
        };
        doc["sampling"] = {{"retrieval", sampling_json(sampling.retrieval)},
                           {"decompose", sampling_json(sampling.decompose)},
                           {"synthesize", sampling_json(sampling.synthesize)}};
        doc["context"] = {{"max_input_tokens", context.max_input_tokens},
                          {"chars_per_token", context.chars_per_token}};
        doc["max_tokens"] = max_tokens;
        nlohmann::ordered_json backend_json;
        backend_json["kind"] = backend.kind;
        if (backend.kind == "scripted") {
            backend_json["script"] = backend.script;
        } else {
            backend_json["endpoint"] = backend.http.endpoint;
            backend_json["model"] = backend.http.model;
            backend_json["api_key_env"] = backend.http.api_key_env;
            backend_json["timeout_seconds"] = backend.http.timeout_seconds;
            backend_json["max_retries"] = backend.http.max_retries;
            backend_json["backoff_initial_ms"] = backend.http.backoff_initial_ms;
        }
        doc["backend"] = backend_json;
        if (!templates_dir.empty()) doc["templates_dir"] = templates_dir;
        if (!rules_path.empty()) doc["rules_path"] = rules_path;
        if (!audit_dir.empty()) doc["audit_dir"] = audit_dir;
        if (jobs != 0) doc["jobs"] = jobs;
        return doc;
    }

    KnowledgeGraph load_graph() const {
        return KnowledgeGraph::load_file(graph.path, graph.resolved_format());
    }

    std::shared_ptr<Backend> make_backend() const {
        if (backend.kind == "scripted") return ScriptedBackend::load_script(backend.script);
        return std::make_shared<HttpBackend>(backend.http);
    }

    PromptSet load_prompts() const {
        return templates_dir.empty() ? builtin_prompt_set() : load_prompt_dir(templates_dir);
    }

    ConflictRules load_rules() const {
        return rules_path.empty() ? ConflictRules::defaults()
                                  : ConflictRules::load_file(rules_path);
    }

private:
    static void expect_object(const nlohmann::json& v, const std::string& key) {
        if (!v.is_object()) throw UsageError("config key " + key + " must be an object");
    }
    static std::string as_string(const nlohmann::json& v, const std::string& key) {
        if (!v.is_string()) throw UsageError("config key " + key + " must be a string");
        return v.get<std::string>();
    }
    static double as_number(const nlohmann::json& v, const std::string& key) {
        if (!v.is_number()) throw UsageError("config key " + key + " must be a number");
        return v.get<double>();
    }
    // nlohmann stores in-memory integers as signed and parsed non-negative
    // literals as unsigned; accept both representations, reject floats.
    static std::size_t as_count(const nlohmann::json& v, const std::string& key) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 1)
            throw UsageError("config key " + key + " must be a positive integer");
        return v.get<std::size_t>();
    }
    static std::size_t as_nonneg(const nlohmann::json& v, const std::string& key) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
            throw UsageError("config key " + key + " must be a non-negative integer");
        return v.get<std::size_t>();
    }
    static SamplingParams parse_sampling(const nlohmann::json& v, const std::string& key) {
        expect_object(v, key);
        SamplingParams p;
        for (const auto& [sk, sv] : v.items()) {
            if (sk == "temperature") p.temperature = as_number(sv, key + ".temperature");
            else if (sk == "top_p") p.top_p = as_number(sv, key + ".top_p");
            else if (sk == "top_k")
                p.top_k = static_cast<std::uint32_t>(as_nonneg(sv, key + ".top_k"));
            else if (sk == "repetition_penalty")
                p.repetition_penalty = as_number(sv, key + ".repetition_penalty");
            else
                throw UsageError("unknown config key: " + key + "." + sk);
        }
        return p;
    }
};

}  // namespace mirage
