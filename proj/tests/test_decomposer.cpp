// Query decomposition: reply parsing, the n_q cap, fallback behavior, and
// the request it sends to the backend.

#include <doctest.h>

#include "test_support.hpp"

using namespace mirage;
using testsupport::RecordingBackend;

namespace {

std::shared_ptr<ScriptedBackend> reply_once(const std::string& content) {
    return std::make_shared<ScriptedBackend>(
        std::vector<ScriptedBackend::Entry>{{"decompose", 0, content}});
}

}  // namespace

TEST_CASE("parse_decomposition reads numbered lines with optional entities") {
    auto parsed = parse_decomposition(
        "Here is the plan:\n"
        "1. What causes fatigue? [entities: fatigue]\n"
        "2) Which conditions impair sleep? [entities: sleep quality; sleep apnea]\n"
        "3. A question with no entity bracket\n"
        "stray prose that is not numbered\n");
    REQUIRE(parsed.size() == 3);
    CHECK(parsed[0].first == "What causes fatigue?");
    CHECK(parsed[0].second == std::vector<std::string>{"fatigue"});
    CHECK(parsed[1].first == "Which conditions impair sleep?");
    CHECK(parsed[1].second == std::vector<std::string>{"sleep quality", "sleep apnea"});
    CHECK(parsed[2].first == "A question with no entity bracket");
    CHECK(parsed[2].second.empty());
}

TEST_CASE("parse_decomposition skips junk and rejects empty results") {
    CHECK_THROWS_AS(parse_decomposition("no numbers here\njust prose\n"), ParseError);
    CHECK_THROWS_AS(parse_decomposition(""), ParseError);
    CHECK_THROWS_AS(parse_decomposition("1.\n2.   \n"), ParseError);
    // a line that is only an entity bracket has no question text
    CHECK_THROWS_AS(parse_decomposition("1. [entities: x]\n"), ParseError);
    // number with no separator is prose
    CHECK_THROWS_AS(parse_decomposition("1 What causes fatigue\n"), ParseError);
}

TEST_CASE("parse_decomposition ignores empty entity segments") {
    auto parsed = parse_decomposition("1. Q [entities: a; ; b;]\n");
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].second == std::vector<std::string>{"a", "b"});
}

TEST_CASE("multi-digit numbering works") {
    auto parsed = parse_decomposition("10. tenth question\n11) eleventh\n");
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].first == "tenth question");
}

TEST_CASE("decompose returns indexed sub-questions") {
    auto backend = reply_once("1. First? [entities: a]\n2. Second?\n");
    DecompositionResult result = decompose("complex question", 4, *backend, builtin_prompt_set());
    CHECK(result.decomposed);
    CHECK(result.raw == "1. First? [entities: a]\n2. Second?\n");
    REQUIRE(result.sub_questions.size() == 2);
    CHECK(result.sub_questions[0] ==
          SubQuestion{0, "First?", std::vector<std::string>{"a"}});
    CHECK(result.sub_questions[1] == SubQuestion{1, "Second?", {}});
}

TEST_CASE("decompose caps the number of sub-questions at n_q") {
    auto backend = reply_once("1. one\n2. two\n3. three\n4. four\n5. five\n");
    DecompositionResult result = decompose("q", 3, *backend, builtin_prompt_set());
    REQUIRE(result.sub_questions.size() == 3);
    CHECK(result.sub_questions[2].text == "three");
}

TEST_CASE("the NO_DECOMPOSITION sentinel falls back to the whole query") {
    auto backend = reply_once("NO_DECOMPOSITION");
    DecompositionResult result = decompose("What causes fatigue?", 4, *backend,
                                           builtin_prompt_set());
    CHECK_FALSE(result.decomposed);
    REQUIRE(result.sub_questions.size() == 1);
    CHECK(result.sub_questions[0] == SubQuestion{0, "What causes fatigue?", {}});
    CHECK(result.raw == "NO_DECOMPOSITION");
}

TEST_CASE("an unparseable reply falls back to the whole query") {
    auto backend = reply_once("I would rather chat about the weather.");
    DecompositionResult result = decompose("the query", 4, *backend, builtin_prompt_set());
    CHECK_FALSE(result.decomposed);
    REQUIRE(result.sub_questions.size() == 1);
    CHECK(result.sub_questions[0].text == "the query");
}

TEST_CASE("decompose validates its inputs") {
    auto backend = reply_once("1. x\n");
    CHECK_THROWS_AS(decompose("", 4, *backend, builtin_prompt_set()), InvalidArgumentError);
    CHECK_THROWS_AS(decompose("  \n ", 4, *backend, builtin_prompt_set()),
                    InvalidArgumentError);
    CHECK_THROWS_AS(decompose("q", 0, *backend, builtin_prompt_set()), InvalidArgumentError);
}

TEST_CASE("backend failures surface as a decompose stage error") {
    ScriptedBackend empty_script;  // no entries: every generate fails
    try {
        decompose("q", 4, empty_script, builtin_prompt_set());
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "decompose");
        CHECK(contains(e.what(), "script exhausted"));
    }
}

TEST_CASE("decompose sends one cool-sampled user message with the query") {
    auto recorder = std::make_shared<RecordingBackend>(reply_once("1. x\n"));
    decompose("what explains my persistent fatigue", 4, *recorder, builtin_prompt_set());
    auto requests = recorder->requests();
    REQUIRE(requests.size() == 1);
    CHECK(requests[0].chain_id == "decompose");
    REQUIRE(requests[0].messages.size() == 1);
    CHECK(requests[0].messages[0].role == Role::user);
    CHECK(contains(requests[0].messages[0].content, "what explains my persistent fatigue"));
    // the placeholder was substituted away
    CHECK_FALSE(contains(requests[0].messages[0].content, "{query}"));
    CHECK(requests[0].sampling == SamplingParams::conservative_defaults());
    CHECK(requests[0].max_tokens == 4096);
}
