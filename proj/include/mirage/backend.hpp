#pragma once
// Pluggable text-generation backend interface plus the shared context-budget
// policy applied to every request's message list.
//
// Token counts are approximated as character count / 4 (no tokenizer
// dependency). When a message list exceeds the budget, older injected
// result blocks are truncated first, then other middle messages; the first
// and the most recent message are never touched.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mirage/error.hpp"
#include "mirage/protocol.hpp"

namespace mirage {

enum class Role { system, user, assistant };

inline std::string_view role_name(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    throw InvariantError("unreachable role");
}

inline Role role_from_name(std::string_view name) {
    if (name == "system") return Role::system;
    if (name == "user") return Role::user;
    if (name == "assistant") return Role::assistant;
    throw ParseError("unknown role: " + std::string(name));
}

struct Message {
    Role role = Role::user;
    std::string content;

    friend bool operator==(const Message&, const Message&) = default;
};

struct SamplingParams {
    double temperature = 0.7;
    double top_p = 0.8;
    std::uint32_t top_k = 20;
    double repetition_penalty = 1.05;

    friend bool operator==(const SamplingParams&, const SamplingParams&) = default;

    // Retrieval-loop generation.
    static SamplingParams retrieval_defaults() { return SamplingParams{}; }
    // Decomposition and synthesis run cooler for stability.
    static SamplingParams conservative_defaults() {
        SamplingParams p;
        p.temperature = 0.6;
        return p;
    }
};

struct SamplingSet {
    SamplingParams retrieval = SamplingParams::retrieval_defaults();
    SamplingParams decompose = SamplingParams::conservative_defaults();
    SamplingParams synthesize = SamplingParams::conservative_defaults();

    friend bool operator==(const SamplingSet&, const SamplingSet&) = default;
};

struct GenerationRequest {
    // Stable identity of the calling stage ("decompose", "chain:0", ...);
    // lets deterministic backends key replies without inspecting prompts.
    std::string chain_id = "root";
    std::vector<Message> messages;
    SamplingParams sampling;
    std::uint32_t max_tokens = 4096;
};

struct GenerationResponse {
    std::string content;
    std::string finish_reason = "stop";
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual GenerationResponse generate(const GenerationRequest& req) = 0;
    virtual std::string_view name() const = 0;
};

inline void validate_request(const GenerationRequest& req) {
    if (req.messages.empty()) throw InvalidArgumentError("generation request needs >= 1 message");
    if (req.max_tokens < 1) throw InvalidArgumentError("max_tokens must be >= 1");
}

struct ContextBudget {
    std::uint32_t max_input_tokens = 32768;
    std::uint32_t chars_per_token = 4;

    std::size_t budget_chars() const {
        return static_cast<std::size_t>(max_input_tokens) * chars_per_token;
    }

    friend bool operator==(const ContextBudget&, const ContextBudget&) = default;
};

namespace detail {

inline std::size_t message_chars(const std::vector<Message>& messages) {
    std::size_t total = 0;
    for (const Message& m : messages) total += m.content.size();
    return total;
}

}  // namespace detail

// Returns true if anything was truncated. Truncation replaces a message's
// content with a marker (result blocks keep their delimiters so the protocol
// stays parseable) and proceeds oldest-first until the list fits.
inline bool apply_context_budget(std::vector<Message>& messages, const ContextBudget& budget) {
    const std::size_t limit = budget.budget_chars();
    std::size_t total = detail::message_chars(messages);
    if (total <= limit || messages.size() < 3) return false;

    bool truncated = false;
    const std::string truncated_block = detail::wrap_result("[truncated]");
    for (std::size_t i = 1; i + 1 < messages.size() && total > limit; ++i) {
        if (!contains(messages[i].content, tokens::kResultBegin)) continue;
        if (messages[i].content == truncated_block) continue;
        total -= messages[i].content.size();
        messages[i].content = truncated_block;
        total += messages[i].content.size();
        truncated = true;
    }
    for (std::size_t i = 1; i + 1 < messages.size() && total > limit; ++i) {
        if (messages[i].content == truncated_block || messages[i].content == "[truncated]")
            continue;
        total -= messages[i].content.size();
        messages[i].content = "[truncated]";
        total += messages[i].content.size();
        truncated = true;
    }
    return truncated;
}

}  // namespace mirage
