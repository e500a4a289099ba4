#pragma once
// Query decomposition: one cool-temperature generation turns a complex
// query into at most n_q self-contained sub-questions. Any unusable model
// reply falls back to treating the whole query as the single sub-question,
// so decomposition can never stall the pipeline.

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mirage/backend.hpp"
#include "mirage/error.hpp"
#include "mirage/prompts.hpp"
#include "mirage/text.hpp"

namespace mirage {

struct SubQuestion {
    std::size_t index = 0;  // position in emission order
    std::string text;
    std::vector<std::string> seed_entities;  // advisory metadata from the model

    friend bool operator==(const SubQuestion&, const SubQuestion&) = default;
};

struct DecompositionResult {
    std::vector<SubQuestion> sub_questions;
    bool decomposed = false;  // false when the fallback path was taken
    std::string raw;          // verbatim model reply, kept for replay

    friend bool operator==(const DecompositionResult&, const DecompositionResult&) = default;
};

// Accepts lines of the form "N. question [entities: a; b]" ("N)" also
// works); the entity bracket is optional; non-matching lines are skipped.
// Zero usable lines is a ParseError, which decompose() turns into the
// fallback.
inline std::vector<std::pair<std::string, std::vector<std::string>>> parse_decomposition(
    std::string_view text) {
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    for (const std::string& raw_line : split(text, '\n')) {
        std::string line = trim(raw_line);
        std::size_t i = 0;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i == 0 || i >= line.size() || (line[i] != '.' && line[i] != ')')) continue;
        std::string body = trim(std::string_view(line).substr(i + 1));
        if (body.empty()) continue;

        std::vector<std::string> entities;
        const std::string marker = "[entities:";
        if (!body.empty() && body.back() == ']') {
            std::size_t open = body.rfind(marker);
            if (open != std::string::npos) {
                std::string inner = body.substr(open + marker.size(),
                                                body.size() - open - marker.size() - 1);
                for (std::string_view part : split(inner, ';')) {
                    std::string entity = trim(part);
                    if (!entity.empty()) entities.push_back(std::move(entity));
                }
                body = trim(std::string_view(body).substr(0, open));
            }
        }
        if (body.empty()) continue;
        out.emplace_back(std::move(body), std::move(entities));
    }
    if (out.empty()) throw ParseError("no numbered sub-question lines found");
    return out;
}

inline DecompositionResult decompose(const std::string& query, std::size_t n_q,
                                     Backend& backend, const PromptSet& prompts,
                                     const SamplingParams& sampling =
                                         SamplingParams::conservative_defaults(),
                                     std::uint32_t max_tokens = 4096) {
    if (trim(query).empty()) throw InvalidArgumentError("query must be nonempty");
    if (n_q < 1) throw InvalidArgumentError("n_q must be >= 1");

    GenerationRequest req;
    req.chain_id = "decompose";
    req.messages.push_back(
        Message{Role::user, render_template(prompts.decompose, {{"query", query}})});
    req.sampling = sampling;
    req.max_tokens = max_tokens;

    GenerationResponse resp;
    try {
        resp = backend.generate(req);
    } catch (const Error& e) {
        throw StageError("decompose", e.what());
    }

    DecompositionResult result;
    result.raw = resp.content;
    auto fallback = [&] {
        result.sub_questions = {SubQuestion{0, query, {}}};
        result.decomposed = false;
        return result;
    };
    if (contains(resp.content, "NO_DECOMPOSITION")) return fallback();

    std::vector<std::pair<std::string, std::vector<std::string>>> parsed;
    try {
        parsed = parse_decomposition(resp.content);
    } catch (const ParseError&) {
        return fallback();
    }
    if (parsed.size() > n_q) parsed.resize(n_q);
    for (std::size_t i = 0; i < parsed.size(); ++i)
        result.sub_questions.push_back(
            SubQuestion{i, std::move(parsed[i].first), std::move(parsed[i].second)});
    result.decomposed = true;
    return result;
}

}  // namespace mirage
