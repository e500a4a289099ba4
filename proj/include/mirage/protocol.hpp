#pragma once
// The in-band control-token protocol between model generations and the
// retrieval engine. Token strings are part of the wire contract and must
// never change.
//
// Model -> engine: a search block `<|KG_QUERY_BEGIN|>m1|m2<|KG_QUERY_END|>`
// carrying one or two entity mentions, or the end marker `<|FINAL_ANSWER|>`.
// Engine -> model: a result block wrapping newline-joined fact lines or a
// control token (`no_entity_match`, `max_limit_reached`, `malformed_query`).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mirage/error.hpp"
#include "mirage/text.hpp"

namespace mirage {

namespace tokens {
inline constexpr std::string_view kQueryBegin = "<|KG_QUERY_BEGIN|>";
inline constexpr std::string_view kQueryEnd = "<|KG_QUERY_END|>";
inline constexpr std::string_view kResultBegin = "<|KG_RESULT_BEGIN|>";
inline constexpr std::string_view kResultEnd = "<|KG_RESULT_END|>";
inline constexpr std::string_view kFinalAnswer = "<|FINAL_ANSWER|>";
inline constexpr std::string_view kNoEntityMatch = "no_entity_match";
inline constexpr std::string_view kMaxLimitReached = "max_limit_reached";
inline constexpr std::string_view kNoPathFound = "no path found";
inline constexpr std::string_view kMalformedQuery = "malformed_query";
}  // namespace tokens

struct SearchBlock {
    std::vector<std::string> mentions;  // 1 or 2, trimmed, nonempty
    std::string raw;                    // exact text between the query delimiters

    friend bool operator==(const SearchBlock&, const SearchBlock&) = default;
};

enum class ControlSignal { terminate, no_entity_match, max_limit_reached };

inline std::string_view control_token(ControlSignal sig) {
    switch (sig) {
        case ControlSignal::terminate: return tokens::kFinalAnswer;
        case ControlSignal::no_entity_match: return tokens::kNoEntityMatch;
        case ControlSignal::max_limit_reached: return tokens::kMaxLimitReached;
    }
    throw InvariantError("unreachable control signal");
}

inline std::string_view control_signal_name(ControlSignal sig) {
    switch (sig) {
        case ControlSignal::terminate: return "terminate";
        case ControlSignal::no_entity_match: return "no_entity_match";
        case ControlSignal::max_limit_reached: return "max_limit_reached";
    }
    throw InvariantError("unreachable control signal");
}

inline ControlSignal control_signal_from_name(std::string_view name) {
    if (name == "terminate") return ControlSignal::terminate;
    if (name == "no_entity_match") return ControlSignal::no_entity_match;
    if (name == "max_limit_reached") return ControlSignal::max_limit_reached;
    throw ParseError("unknown control signal: " + std::string(name));
}

// First search block in the generation, or nullopt when no opening delimiter
// occurs. An opening delimiter without a closing one, or a payload that does
// not split into 1-2 nonempty mentions, is a ProtocolError.
inline std::optional<SearchBlock> extract_search_block(std::string_view generation) {
    std::size_t begin = generation.find(tokens::kQueryBegin);
    if (begin == std::string_view::npos) return std::nullopt;
    std::size_t payload_start = begin + tokens::kQueryBegin.size();
    std::size_t end = generation.find(tokens::kQueryEnd, payload_start);
    if (end == std::string_view::npos)
        throw ProtocolError("unclosed search block: missing " + std::string(tokens::kQueryEnd));

    SearchBlock block;
    block.raw = std::string(generation.substr(payload_start, end - payload_start));
    for (std::string_view part : split(block.raw, '|')) {
        std::string mention = std::string(trim(part));
        if (mention.empty()) throw ProtocolError("empty mention in search block");
        block.mentions.push_back(std::move(mention));
    }
    if (block.mentions.empty() || block.mentions.size() > 2)
        throw ProtocolError("search block must carry 1 or 2 mentions, got " +
                            std::to_string(block.mentions.size()));
    return block;
}

namespace detail {

// Keep injected payloads from smuggling result delimiters back to the model;
// embedded delimiter tokens lose their pipes and become inert text.
inline std::string defuse_result_delimiters(std::string payload) {
    auto strip = [&payload](std::string_view token, std::string_view replacement) {
        std::size_t pos = 0;
        while ((pos = payload.find(token, pos)) != std::string::npos) {
            payload.replace(pos, token.size(), replacement);
            pos += replacement.size();
        }
    };
    strip(tokens::kResultBegin, "<KG_RESULT_BEGIN>");
    strip(tokens::kResultEnd, "<KG_RESULT_END>");
    return payload;
}

inline std::string wrap_result(std::string payload) {
    std::string out;
    out += tokens::kResultBegin;
    out += '\n';
    out += detail::defuse_result_delimiters(std::move(payload));
    out += '\n';
    out += tokens::kResultEnd;
    return out;
}

}  // namespace detail

// Wrap fact lines for injection; an empty list renders the sentinel line
// `no path found`.
inline std::string render_result_block(const std::vector<std::string>& facts) {
    if (facts.empty()) return detail::wrap_result(std::string(tokens::kNoPathFound));
    std::string payload;
    for (std::size_t i = 0; i < facts.size(); ++i) {
        if (i) payload += '\n';
        payload += facts[i];
    }
    return detail::wrap_result(std::move(payload));
}

// Control signals render as their literal token names.
inline std::string render_result_block(ControlSignal sig) {
    return detail::wrap_result(std::string(control_token(sig)));
}

inline std::string render_malformed_query_block() {
    return detail::wrap_result(std::string(tokens::kMalformedQuery));
}

// True iff the generation carries the explicit end marker or issues no
// search block at all; the end marker dominates even next to a block.
inline bool detect_termination(std::string_view generation) {
    if (contains(generation, tokens::kFinalAnswer)) return true;
    return generation.find(tokens::kQueryBegin) == std::string_view::npos;
}

}  // namespace mirage
