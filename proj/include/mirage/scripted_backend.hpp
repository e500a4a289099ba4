#pragma once
// Deterministic backend replaying canned replies keyed by (chain id, step
// index). Step counters advance per chain on every generate call, so the
// same script against the same call sequence reproduces byte-identical
// output with zero network activity.
//
// Script file: JSON lines, each {"chain": string, "step": integer,
// "content": string}. Duplicate (chain, step) keys are rejected.

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mirage/backend.hpp"
#include "mirage/error.hpp"

namespace mirage {

class ScriptedBackend final : public Backend {
public:
    struct Entry {
        std::string chain;
        std::uint32_t step = 0;
        std::string content;
    };

    ScriptedBackend() = default;

    explicit ScriptedBackend(const std::vector<Entry>& entries) {
        for (const Entry& e : entries) add_entry(e);
    }

    static std::shared_ptr<ScriptedBackend> load_script(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open script file: " + path);
        auto backend = std::make_shared<ScriptedBackend>();
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
                throw ParseError(path + ":" + std::to_string(line_no) + ": invalid JSON: " +
                                 e.what());
            }
            if (!obj.is_object() || !obj.contains("chain") || !obj.contains("step") ||
                !obj.contains("content") || !obj["chain"].is_string() ||
                !obj["step"].is_number_unsigned() || !obj["content"].is_string()) {
                throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": expected {\"chain\", \"step\", \"content\"}");
            }
            try {
                backend->add_entry(Entry{obj["chain"].get<std::string>(),
                                         obj["step"].get<std::uint32_t>(),
                                         obj["content"].get<std::string>()});
            } catch (const InvalidArgumentError& e) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
        return backend;
    }

    void add_entry(const Entry& e) {
        auto [it, inserted] = replies_.emplace(std::make_pair(e.chain, e.step), e.content);
        (void)it;
        if (!inserted)
            throw InvalidArgumentError("duplicate script entry for chain \"" + e.chain +
                                       "\" step " + std::to_string(e.step));
    }

    GenerationResponse generate(const GenerationRequest& req) override {
        validate_request(req);
        std::lock_guard<std::mutex> lock(mutex_);
        std::uint32_t step = cursor_[req.chain_id]++;
        auto it = replies_.find(std::make_pair(req.chain_id, step));
        if (it == replies_.end())
            throw BackendError("script exhausted for chain \"" + req.chain_id + "\" at step " +
                               std::to_string(step));
        return GenerationResponse{it->second, "stop"};
    }

    std::string_view name() const override { return "scripted"; }

    // Consumed steps per chain, for assertions in tests.
    std::uint32_t steps_taken(const std::string& chain) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cursor_.find(chain);
        return it == cursor_.end() ? 0 : it->second;
    }

private:
    std::map<std::pair<std::string, std::uint32_t>, std::string> replies_;
    mutable std::mutex mutex_;
    std::map<std::string, std::uint32_t> cursor_;
};

}  // namespace mirage
