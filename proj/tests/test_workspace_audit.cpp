// Single-assignment workspace semantics, timestamp format, audit JSON
// shape and round-trip, file I/O, and script reconstruction.

#include <doctest.h>

#include <regex>
#include <thread>

#include "test_support.hpp"

using namespace mirage;

namespace {

PipelineOutcome run_fatigue_pipeline() {
    RunConfig config = testsupport::fatigue_config();
    KnowledgeGraph graph = config.load_graph();
    Coordinator coordinator(graph, config, config.make_backend());
    return coordinator.run("Why am I always tired even after sleeping?");
}

std::vector<std::string> key_order(const nlohmann::ordered_json& obj) {
    std::vector<std::string> keys;
    for (const auto& [key, _] : obj.items()) keys.push_back(key);
    return keys;
}

}  // namespace

TEST_CASE("workspace publishes each key exactly once") {
    Workspace ws;
    CHECK(ws.status("x") == StageStatus::pending);
    ws.put("x", std::string("payload"));
    CHECK(ws.status("x") == StageStatus::ready);
    CHECK(ws.get<std::string>("x") == "payload");
    CHECK_THROWS_AS(ws.put("x", std::string("again")), InvariantError);
    CHECK_THROWS_AS(ws.put("y", 1, StageStatus::pending), InvalidArgumentError);
}

TEST_CASE("workspace failures carry payloads too") {
    Workspace ws;
    ws.put("stage", std::string("what went wrong"), StageStatus::failed);
    CHECK(ws.status("stage") == StageStatus::failed);
    CHECK(ws.get<std::string>("stage") == "what went wrong");
}

TEST_CASE("workspace lookup errors") {
    Workspace ws;
    ws.put("n", 42);
    CHECK_THROWS_AS(ws.get<int>("missing"), NotFoundError);
    CHECK_THROWS_AS(ws.get<std::string>("n"), InvalidArgumentError);
    CHECK(ws.get<int>("n") == 42);
}

TEST_CASE("wait_all blocks until every key is published") {
    Workspace ws;
    std::thread producer([&ws] {
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        ws.put("a", 1);
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        ws.put("b", 2, StageStatus::failed);
    });
    ws.wait_all({"a", "b"});
    CHECK(ws.status("a") == StageStatus::ready);
    CHECK(ws.status("b") == StageStatus::failed);
    producer.join();
    CHECK(ws.keys() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("stage status names") {
    CHECK(stage_status_name(StageStatus::pending) == "pending");
    CHECK(stage_status_name(StageStatus::ready) == "ready");
    CHECK(stage_status_name(StageStatus::failed) == "failed");
}

TEST_CASE("timestamps are ISO-8601 UTC with millisecond precision") {
    std::string now = iso_utc_timestamp();
    std::regex shape(R"(^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\.\d{3}Z$)");
    CHECK(std::regex_match(now, shape));
    // a pinned instant renders exactly
    auto tp = std::chrono::system_clock::time_point(std::chrono::milliseconds(1500000000123));
    CHECK(iso_utc_timestamp(tp) == "2017-07-14T02:40:00.123Z");
}

TEST_CASE("audit JSON top-level keys appear in the documented order") {
    PipelineOutcome outcome = run_fatigue_pipeline();
    nlohmann::ordered_json j = audit_to_json(outcome.audit);
    CHECK(key_order(j) == std::vector<std::string>{"query", "config", "decomposition",
                                                   "chains", "conflicts", "final_answer",
                                                   "timings", "started_at", "finished_at"});
    REQUIRE(j["chains"].is_array());
    REQUIRE(j["chains"].size() == 2);
    CHECK(key_order(j["chains"][0]) ==
          std::vector<std::string>{"sub_question", "turns", "retrieval_count", "evidence",
                                   "answer", "status", "error", "suppressed"});
    REQUIRE(j["chains"][0]["turns"].size() == 3);
    CHECK(key_order(j["chains"][0]["turns"][0]) ==
          std::vector<std::string>{"turn_index", "generation", "action", "injected_result"});
    CHECK(j["chains"][0]["suppressed"] == false);
    CHECK(j["decomposition"]["decomposed"] == true);
    CHECK(j["conflicts"].empty());
}

TEST_CASE("audit records round-trip through JSON in canonical form") {
    PipelineOutcome outcome = run_fatigue_pipeline();
    nlohmann::ordered_json first = audit_to_json(outcome.audit);
    AuditRecord reloaded = audit_from_json(first);
    nlohmann::ordered_json second = audit_to_json(reloaded);
    CHECK(first.dump(2) == second.dump(2));
}

TEST_CASE("audit files write and read back") {
    testsupport::TempDir dir;
    PipelineOutcome outcome = run_fatigue_pipeline();
    std::string path = dir.file("audit.json");
    emit_audit(outcome.audit, path);
    AuditRecord loaded = load_audit(path);
    CHECK(loaded.query == outcome.audit.query);
    CHECK(loaded.final_answer == outcome.audit.final_answer);
    CHECK(loaded.chains.size() == 2);
    CHECK(loaded.started_at == outcome.audit.started_at);

    CHECK_THROWS_AS(emit_audit(outcome.audit, dir.str()), IoError);  // path is a directory
    CHECK_THROWS_AS(load_audit(dir.file("absent.json")), IoError);
    testsupport::write_file(dir.file("garbage.json"), "{{{");
    CHECK_THROWS_AS(load_audit(dir.file("garbage.json")), ParseError);
    testsupport::write_file(dir.file("shallow.json"), "{\"query\": \"q\"}");
    CHECK_THROWS_AS(load_audit(dir.file("shallow.json")), ParseError);
}

TEST_CASE("failed turns and missing answers serialize as nulls and round-trip") {
    AuditRecord record;
    record.query = "q";
    record.config = testsupport::fatigue_config();
    record.decomposition.raw = "NO_DECOMPOSITION";
    record.decomposition.sub_questions = {SubQuestion{0, "q", {}}};
    ReasoningChain chain;
    chain.sub_question = SubQuestion{0, "q", {}};
    TurnRecord t0;
    t0.turn_index = 0;
    t0.generation = "<|KG_QUERY_BEGIN|>broken";
    t0.action.kind = TurnAction::Kind::malformed;
    t0.injected_result = render_malformed_query_block();
    chain.turns.push_back(t0);
    chain.status = "failed";
    chain.error = "turn 1: backend unavailable";
    record.chains.push_back(chain);
    record.started_at = iso_utc_timestamp();
    record.finished_at = record.started_at;

    nlohmann::ordered_json j = audit_to_json(record);
    CHECK(j["chains"][0]["answer"].is_null());
    CHECK(j["chains"][0]["turns"][0]["action"]["kind"] == "malformed");
    CHECK(j["final_answer"] == "");

    AuditRecord back = audit_from_json(j);
    CHECK(back.chains[0].status == "failed");
    CHECK(back.chains[0].error == "turn 1: backend unavailable");
    CHECK_FALSE(back.chains[0].answer.has_value());
    CHECK(back.chains[0].turns[0].action.kind == TurnAction::Kind::malformed);
    CHECK(audit_to_json(back).dump() == j.dump());
}

TEST_CASE("evidence origins serialize with their fact index and path") {
    PipelineOutcome outcome = run_fatigue_pipeline();
    nlohmann::ordered_json j = audit_to_json(outcome.audit);
    const auto& evidence = j["chains"][0]["evidence"];
    REQUIRE(evidence["facts"].size() == 3);
    CHECK(evidence["facts"][2] == "Anemia has symptom Fatigue");
    REQUIRE(evidence["origins"].size() == 3);
    CHECK(evidence["origins"][2]["fact"] == 2);
    CHECK(evidence["origins"][2]["mode"] == "bridge");
    CHECK(evidence["origins"][2]["mentions"].get<std::vector<std::string>>() ==
          std::vector<std::string>{"anemia", "fatigue"});
    REQUIRE(evidence["origins"][2]["path"].size() == 1);
    CHECK(evidence["origins"][2]["path"][0]["relation"] == "has_symptom");
}

TEST_CASE("conflicting suppressed indices mark their chains in the JSON") {
    AuditRecord record;
    record.query = "q";
    record.config = testsupport::fatigue_config();
    record.decomposition.sub_questions = {SubQuestion{0, "a", {}}, SubQuestion{1, "b", {}}};
    for (std::size_t i = 0; i < 2; ++i) {
        ReasoningChain chain;
        chain.sub_question = record.decomposition.sub_questions[i];
        chain.answer = "answer";
        record.chains.push_back(chain);
    }
    ConflictReport report;
    report.index_i = 0;
    report.index_j = 1;
    report.rule = "treats/causes";
    report.description = "X both treats and causes Y";
    report.kept = 0;
    report.suppressed = 1;
    record.conflicts.push_back(report);
    record.final_answer = "done";
    record.started_at = record.finished_at = iso_utc_timestamp();

    nlohmann::ordered_json j = audit_to_json(record);
    CHECK(j["chains"][0]["suppressed"] == false);
    CHECK(j["chains"][1]["suppressed"] == true);
    CHECK(j["conflicts"][0]["kept"] == 0);
    CHECK(j["conflicts"][0]["suppressed"] == 1);

    AuditRecord back = audit_from_json(j);
    REQUIRE(back.conflicts.size() == 1);
    CHECK(back.conflicts[0].rule == "treats/causes");
    CHECK(back.conflicts[0].suppressed == 1);
}

TEST_CASE("script reconstruction replays every stored generation") {
    PipelineOutcome outcome = run_fatigue_pipeline();
    auto backend = script_from_audit(outcome.audit);
    auto ask = [&backend](const std::string& chain) {
        GenerationRequest req;
        req.chain_id = chain;
        req.messages.push_back(Message{Role::user, "x"});
        return backend->generate(req).content;
    };
    CHECK(ask("decompose") == outcome.audit.decomposition.raw);
    for (const ReasoningChain& chain : outcome.audit.chains) {
        std::string id = "chain:" + std::to_string(chain.sub_question.index);
        for (const TurnRecord& turn : chain.turns) CHECK(ask(id) == turn.generation);
        REQUIRE(chain.answer.has_value());
        CHECK(ask(id) == *chain.answer);
    }
    CHECK(ask("synthesize") == outcome.audit.final_answer);
}
