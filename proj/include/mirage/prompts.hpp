#pragma once
// Prompt templates for the four generation call sites. Builtins are compiled
// in; a template directory with the same four file names overrides them.
// Placeholders use single-brace {name} syntax and are substituted in one
// pass, so substituted values are never re-scanned for placeholders.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "mirage/error.hpp"

namespace mirage {

struct PromptSet {
    std::string decompose;
    std::string reason;
    std::string answer;
    std::string synthesize;

    friend bool operator==(const PromptSet&, const PromptSet&) = default;
};

namespace builtin_prompts {

inline constexpr std::string_view kDecompose =
    R"(You are the decomposition stage of a knowledge-graph reasoning pipeline.
Split the user's question into self-contained sub-questions only when it
involves several distinct entities or bundles multiple information needs.
Each sub-question must stand alone: replace pronouns and ambiguous
references with the explicit entities they refer to.

Output format, one sub-question per line:
1. <sub-question> [entities: <entity>; <entity>]
The [entities: ...] bracket is optional and lists the concrete entities the
sub-question is grounded in.

If the question is already simple and single-focus, reply with exactly:
NO_DECOMPOSITION

Question: {query}
)";

inline constexpr std::string_view kReason =
    R"(You answer one focused sub-question by consulting a knowledge graph
through a query protocol. Never invent graph facts; ask the graph.

To consult the graph, emit exactly one query block per turn:
- neighborhood of one entity: <|KG_QUERY_BEGIN|>entity<|KG_QUERY_END|>
- paths between two entities: <|KG_QUERY_BEGIN|>first entity|second entity<|KG_QUERY_END|>

The engine replies between <|KG_RESULT_BEGIN|> and <|KG_RESULT_END|> with
verbalized facts, or with one of the tokens no path found, no_entity_match,
malformed_query, or max_limit_reached when the retrieval budget is spent.

When the collected evidence suffices, stop querying and emit <|FINAL_ANSWER|>
followed by a short reasoning summary.

Sub-question: {sub_question}
Evidence so far:
{evidence_so_far}
)";

inline constexpr std::string_view kAnswer =
    R"(Write a direct, self-contained answer to the sub-question below using
only the retrieved evidence. If the evidence is insufficient, state what is
missing instead of guessing.

Sub-question: {sub_question}
Evidence:
{evidence}

Answer:
)";

inline constexpr std::string_view kSynthesize =
    R"(Combine the verified sub-answers below into one coherent reply to the
user's question. Do not contradict any verified sub-answer. Where the
evidence is silent you may fall back on general knowledge, clearly marked
as such. Ground claims in the evidence facts wherever they apply.

Question: {query}

Verified sub-answers:
{qa_pairs}

Evidence:
{evidence}

Final answer:
)";

}  // namespace builtin_prompts

inline PromptSet builtin_prompt_set() {
    return PromptSet{std::string(builtin_prompts::kDecompose),
                     std::string(builtin_prompts::kReason),
                     std::string(builtin_prompts::kAnswer),
                     std::string(builtin_prompts::kSynthesize)};
}

namespace detail {

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open template file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace detail

// Loads decompose.tmpl, reason.tmpl, answer.tmpl, synthesize.tmpl from the
// directory; every file must exist.
inline PromptSet load_prompt_dir(const std::string& dir) {
    PromptSet set;
    set.decompose = detail::read_text_file(dir + "/decompose.tmpl");
    set.reason = detail::read_text_file(dir + "/reason.tmpl");
    set.answer = detail::read_text_file(dir + "/answer.tmpl");
    set.synthesize = detail::read_text_file(dir + "/synthesize.tmpl");
    return set;
}

// Single-pass placeholder substitution; unknown {names} pass through
// verbatim.
inline std::string render_template(std::string_view tmpl,
                                   const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t open = tmpl.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        std::size_t close = tmpl.find('}', open + 1);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        std::string name(tmpl.substr(open + 1, close - open - 1));
        auto it = values.find(name);
        if (it != values.end()) {
            out.append(it->second);
        } else {
            out.append(tmpl.substr(open, close - open + 1));
        }
        pos = close + 1;
    }
    return out;
}

}  // namespace mirage
