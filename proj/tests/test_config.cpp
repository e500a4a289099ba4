// Run-config parsing: defaults, strict key checking, path resolution,
// JSON round-trips, factory helpers, and prompt template rendering.

#include <doctest.h>

#include "test_support.hpp"

using namespace mirage;

namespace {

nlohmann::json minimal_doc() {
    return nlohmann::json{{"graph", {{"path", "/abs/g.tsv"}}},
                         {"backend", {{"kind", "scripted"}, {"script", "/abs/s.jsonl"}}}};
}

}  // namespace

TEST_CASE("a minimal config gets the engine defaults") {
    RunConfig cfg = RunConfig::from_json(minimal_doc());
    CHECK(cfg.graph.path == "/abs/g.tsv");
    CHECK(cfg.graph.format == "auto");
    CHECK(cfg.chain.max_turns == 10);
    CHECK(cfg.chain.n_r == 5);
    CHECK(cfg.chain.k == 10);
    CHECK(cfg.chain.h == 3);
    CHECK(cfg.chain.n == 5);
    CHECK(cfg.chain.tau == doctest::Approx(0.7));
    CHECK(cfg.n_q == 4);
    CHECK(cfg.sampling.retrieval.temperature == doctest::Approx(0.7));
    CHECK(cfg.sampling.retrieval.top_p == doctest::Approx(0.8));
    CHECK(cfg.sampling.retrieval.top_k == 20);
    CHECK(cfg.sampling.retrieval.repetition_penalty == doctest::Approx(1.05));
    CHECK(cfg.sampling.decompose.temperature == doctest::Approx(0.6));
    CHECK(cfg.sampling.synthesize.temperature == doctest::Approx(0.6));
    CHECK(cfg.context.max_input_tokens == 32768);
    CHECK(cfg.context.chars_per_token == 4);
    CHECK(cfg.context.budget_chars() == 131072);
    CHECK(cfg.max_tokens == 4096);
    CHECK(cfg.templates_dir.empty());
    CHECK(cfg.rules_path.empty());
    CHECK(cfg.audit_dir.empty());
    CHECK(cfg.jobs == 0);
}

TEST_CASE("relative paths resolve against the config file directory") {
    testsupport::TempDir dir;
    testsupport::write_file(dir.file("run.json"), R"({
        "graph": {"path": "data/graph.tsv"},
        "backend": {"kind": "scripted", "script": "/elsewhere/script.jsonl"},
        "templates_dir": "tmpl",
        "rules_path": "rules.json",
        "audit_dir": "audits"
    })");
    RunConfig cfg = RunConfig::load_file(dir.file("run.json"));
    CHECK(cfg.graph.path == dir.str() + "/data/graph.tsv");
    CHECK(cfg.backend.script == "/elsewhere/script.jsonl");  // absolute: untouched
    CHECK(cfg.templates_dir == dir.str() + "/tmpl");
    CHECK(cfg.rules_path == dir.str() + "/rules.json");
    CHECK(cfg.audit_dir == dir.str() + "/audits");

    // without a base directory the relative path is preserved as written
    nlohmann::json doc = minimal_doc();
    doc["graph"]["path"] = "rel/graph.tsv";
    CHECK(RunConfig::from_json(doc).graph.path == "rel/graph.tsv");
}

TEST_CASE("unknown keys are rejected at every level") {
    nlohmann::json doc = minimal_doc();
    doc["grpah"] = nlohmann::json::object();
    CHECK_THROWS_WITH_AS(RunConfig::from_json(doc), doctest::Contains("unknown config key: grpah"),
                         UsageError);
    doc = minimal_doc();
    doc["graph"]["pathh"] = "x";
    CHECK_THROWS_WITH_AS(RunConfig::from_json(doc),
                         doctest::Contains("unknown config key: graph.pathh"), UsageError);
    doc = minimal_doc();
    doc["chain"] = {{"max_turn", 3}};
    CHECK_THROWS_WITH_AS(RunConfig::from_json(doc),
                         doctest::Contains("unknown config key: chain.max_turn"), UsageError);
    doc = minimal_doc();
    doc["sampling"] = {{"retrival", nlohmann::json::object()}};
    CHECK_THROWS_WITH_AS(RunConfig::from_json(doc),
                         doctest::Contains("unknown config key: sampling.retrival"), UsageError);
    doc = minimal_doc();
    doc["sampling"] = {{"retrieval", {{"temp", 0.5}}}};
    CHECK_THROWS_WITH_AS(RunConfig::from_json(doc),
                         doctest::Contains("unknown config key: sampling.retrieval.temp"),
                         UsageError);
    doc = minimal_doc();
    doc["context"] = {{"max_tokens", 512}};
    CHECK_THROWS_WITH_AS(RunConfig::from_json(doc),
                         doctest::Contains("unknown config key: context.max_tokens"), UsageError);
    doc = minimal_doc();
    doc["backend"]["url"] = "x";
    CHECK_THROWS_WITH_AS(RunConfig::from_json(doc),
                         doctest::Contains("unknown config key: backend.url"), UsageError);
}

TEST_CASE("missing required keys are reported together") {
    CHECK_THROWS_WITH_AS(RunConfig::from_json(nlohmann::json::object()),
                         "missing config keys: graph.path, backend.kind", UsageError);
    CHECK_THROWS_WITH_AS(
        RunConfig::from_json(nlohmann::json{{"backend", {{"kind", "scripted"}}}}),
        "missing config keys: graph.path, backend.script", UsageError);
    CHECK_THROWS_WITH_AS(RunConfig::from_json(nlohmann::json{{"backend", {{"kind", "http"}}}}),
                         "missing config keys: graph.path, backend.endpoint", UsageError);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::array()), UsageError);
}

TEST_CASE("backend kind must be scripted or http") {
    nlohmann::json doc = minimal_doc();
    doc["backend"] = {{"kind", "grpc"}};
    CHECK_THROWS_WITH_AS(RunConfig::from_json(doc),
                         doctest::Contains("backend.kind must be scripted or http"), UsageError);
}

TEST_CASE("graph format resolution") {
    CHECK(GraphSection{"x.tsv", "auto"}.resolved_format() == GraphFormat::tsv);
    CHECK(GraphSection{"x.jsonl", "auto"}.resolved_format() == GraphFormat::jsonl);
    CHECK(GraphSection{"x.ndjson", "auto"}.resolved_format() == GraphFormat::jsonl);
    CHECK(GraphSection{"noext", "auto"}.resolved_format() == GraphFormat::tsv);
    CHECK(GraphSection{"x.jsonl", "tsv"}.resolved_format() == GraphFormat::tsv);
    CHECK(GraphSection{"x.tsv", "jsonl"}.resolved_format() == GraphFormat::jsonl);
    CHECK_THROWS_WITH_AS((GraphSection{"x.tsv", "xml"}.resolved_format()),
                         doctest::Contains("graph.format must be"), UsageError);
    nlohmann::json doc = minimal_doc();
    doc["graph"]["format"] = "xml";
    CHECK_THROWS_AS(RunConfig::from_json(doc), UsageError);  // validate() rejects it too
}

TEST_CASE("typed values are checked strictly") {
    auto with = [](const std::string& key, nlohmann::json value) {
        nlohmann::json doc = minimal_doc();
        doc[key] = std::move(value);
        return doc;
    };
    CHECK_THROWS_WITH_AS(RunConfig::from_json(with("n_q", 0)),
                         doctest::Contains("n_q must be a positive integer"), UsageError);
    CHECK_THROWS_AS(RunConfig::from_json(with("n_q", -2)), UsageError);
    CHECK_THROWS_AS(RunConfig::from_json(with("n_q", 2.5)), UsageError);
    CHECK_THROWS_AS(RunConfig::from_json(with("n_q", "four")), UsageError);
    CHECK_THROWS_AS(RunConfig::from_json(with("jobs", -1)), UsageError);
    CHECK(RunConfig::from_json(with("jobs", 0)).jobs == 0);  // zero is a valid job count
    CHECK_THROWS_WITH_AS(RunConfig::from_json(with("chain", {{"tau", "high"}})),
                         doctest::Contains("chain.tau must be a number"), UsageError);
    CHECK_THROWS_WITH_AS(RunConfig::from_json(with("chain", {{"tau", 1.5}})),
                         doctest::Contains("tau"), UsageError);
    CHECK_THROWS_AS(RunConfig::from_json(with("chain", {{"k", 0}})), UsageError);
    CHECK_THROWS_WITH_AS(RunConfig::from_json(with("graph", "g.tsv")),
                         doctest::Contains("config key graph must be an object"), UsageError);
    nlohmann::json httpdoc = minimal_doc();
    httpdoc["backend"] = {{"kind", "http"},
                          {"endpoint", "http://h/v1"},
                          {"max_retries", 0},
                          {"backoff_initial_ms", 0}};
    RunConfig cfg = RunConfig::from_json(httpdoc);
    CHECK(cfg.backend.http.max_retries == 0);
    CHECK_THROWS_AS(RunConfig::from_json(with("max_tokens", 0)), UsageError);
}

TEST_CASE("configs round-trip through JSON") {
    RunConfig scripted = testsupport::fatigue_config();
    CHECK(RunConfig::from_json(scripted.to_json()) == scripted);

    RunConfig http;
    http.graph.path = "/data/graph.jsonl";
    http.graph.format = "jsonl";
    http.chain.max_turns = 6;
    http.chain.tau = 0.85;
    http.n_q = 2;
    http.sampling.retrieval.temperature = 0.5;
    http.context.max_input_tokens = 2048;
    http.max_tokens = 256;
    http.backend.kind = "http";
    http.backend.http.endpoint = "http://127.0.0.1:8000/v1/chat/completions";
    http.backend.http.model = "local-model";
    http.backend.http.api_key_env = "LLM_KEY";
    http.backend.http.timeout_seconds = 7;
    http.backend.http.max_retries = 1;
    http.backend.http.backoff_initial_ms = 50;
    http.templates_dir = "/tmpl";
    http.rules_path = "/rules.json";
    http.audit_dir = "/audits";
    http.jobs = 3;
    http.validate();
    CHECK(RunConfig::from_json(http.to_json()) == http);
    nlohmann::ordered_json doc = http.to_json();
    CHECK(doc["backend"]["endpoint"] == "http://127.0.0.1:8000/v1/chat/completions");
    CHECK_FALSE(doc["backend"].contains("script"));
}

TEST_CASE("load_file reports unreadable and malformed files as usage errors") {
    testsupport::TempDir dir;
    CHECK_THROWS_WITH_AS(RunConfig::load_file(dir.file("absent.json")),
                         doctest::Contains("cannot open config file"), UsageError);
    testsupport::write_file(dir.file("bad.json"), "{not json");
    CHECK_THROWS_WITH_AS(RunConfig::load_file(dir.file("bad.json")),
                         doctest::Contains("invalid JSON"), UsageError);
}

TEST_CASE("factory helpers build the configured collaborators") {
    RunConfig cfg = testsupport::fatigue_config();
    CHECK(cfg.make_backend()->name() == "scripted");
    CHECK(cfg.load_graph().entity_count() == 8);
    CHECK(cfg.load_prompts() == builtin_prompt_set());
    CHECK(cfg.load_rules().pairs == ConflictRules::defaults().pairs);

    RunConfig http = cfg;
    http.backend.kind = "http";
    http.backend.http.endpoint = "http://127.0.0.1:1/v1/chat/completions";
    CHECK(http.make_backend()->name() == "http");
}

TEST_CASE("shipped template files stay in sync with the builtins") {
    PromptSet from_disk = load_prompt_dir(testsupport::source_dir() + "/prompts");
    CHECK(from_disk == builtin_prompt_set());
    testsupport::TempDir dir;
    CHECK_THROWS_AS(load_prompt_dir(dir.str()), IoError);  // all four files required
}

TEST_CASE("template rendering substitutes each placeholder once") {
    CHECK(render_template("Q: {query} N: {n}", {{"query", "why"}, {"n", "4"}}) == "Q: why N: 4");
    CHECK(render_template("{a}{a}!", {{"a", "x"}}) == "xx!");
    CHECK(render_template("keep {unknown} verbatim", {}) == "keep {unknown} verbatim");
    CHECK(render_template("unclosed {brace", {{"brace", "x"}}) == "unclosed {brace");
    CHECK(render_template("{}", {}) == "{}");
    // substituted values are never re-scanned for placeholders
    CHECK(render_template("{a}", {{"a", "{b}"}, {"b", "boom"}}) == "{b}");
    CHECK(render_template("", {{"a", "x"}}).empty());
}
