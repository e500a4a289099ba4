#pragma once
// Generic chat-completion HTTP client. One generate() call maps to one
// logical request: transient failures (5xx, timeouts, transport errors)
// retry with doubling backoff, client errors (4xx) fail immediately.
//
// Request body: {model, messages: [{role, content}], temperature, top_p,
// top_k, repetition_penalty, max_tokens}. Reply text is read from
// choices[0].message.content. The bearer token, if any, comes from the
// environment variable named in the config; plain http:// endpoints only.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mirage/backend.hpp"
#include "mirage/error.hpp"

namespace mirage {

struct HttpBackendConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:8080/v1/chat/completions
    std::string model = "default";
    std::string api_key_env;  // name of env var holding the bearer token
    std::uint32_t timeout_seconds = 60;
    std::uint32_t max_retries = 3;  // retries after the first attempt
    std::uint32_t backoff_initial_ms = 500;

    friend bool operator==(const HttpBackendConfig&, const HttpBackendConfig&) = default;
};

class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.endpoint.empty()) throw InvalidArgumentError("http backend needs an endpoint");
        parse_endpoint();
    }

    GenerationResponse generate(const GenerationRequest& req) override {
        validate_request(req);
        const std::string body = build_body(req);

        std::uint32_t backoff_ms = cfg_.backoff_initial_ms;
        std::string last_failure;
        bool timed_out = false;
        for (std::uint32_t attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
                backoff_ms *= 2;
            }
            httplib::Client client(base_url_);
            client.set_connection_timeout(cfg_.timeout_seconds, 0);
            client.set_read_timeout(cfg_.timeout_seconds, 0);
            client.set_write_timeout(cfg_.timeout_seconds, 0);
            if (!cfg_.api_key_env.empty()) {
                if (const char* key = std::getenv(cfg_.api_key_env.c_str()))
                    client.set_bearer_token_auth(key);
            }

            httplib::Result res = client.Post(path_, body, "application/json");
            if (!res) {
                last_failure = "transport error: " + httplib::to_string(res.error());
                timed_out = timed_out || res.error() == httplib::Error::ConnectionTimeout ||
                            res.error() == httplib::Error::Read;
                continue;  // retryable
            }
            if (res->status >= 500) {
                last_failure = "server error: HTTP " + std::to_string(res->status);
                continue;  // retryable
            }
            if (res->status < 200 || res->status >= 300) {
                throw BackendError("http backend request rejected: HTTP " +
                                   std::to_string(res->status) + " from " + cfg_.endpoint);
            }
            return parse_reply(res->body);
        }
        if (timed_out)
            throw TimeoutError("http backend timed out after " +
                               std::to_string(cfg_.max_retries + 1) + " attempts (" +
                               last_failure + ")");
        throw BackendError("http backend failed after " + std::to_string(cfg_.max_retries + 1) +
                           " attempts (" + last_failure + ")");
    }

    std::string_view name() const override { return "http"; }

private:
    void parse_endpoint() {
        const std::string https_prefix = "https://";
        const std::string http_prefix = "http://";
        if (cfg_.endpoint.rfind(https_prefix, 0) == 0)
            throw InvalidArgumentError("https endpoints are not supported; use http://");
        if (cfg_.endpoint.rfind(http_prefix, 0) != 0)
            throw InvalidArgumentError("endpoint must start with http://: " + cfg_.endpoint);
        std::size_t path_start = cfg_.endpoint.find('/', http_prefix.size());
        if (path_start == std::string::npos) {
            base_url_ = cfg_.endpoint;
            path_ = "/";
        } else {
            base_url_ = cfg_.endpoint.substr(0, path_start);
            path_ = cfg_.endpoint.substr(path_start);
        }
    }

    std::string build_body(const GenerationRequest& req) const {
        nlohmann::ordered_json body;
        body["model"] = cfg_.model;
        body["messages"] = nlohmann::ordered_json::array();
        for (const Message& m : req.messages) {
            body["messages"].push_back(
                {{"role", std::string(role_name(m.role))}, {"content", m.content}});
        }
        body["temperature"] = req.sampling.temperature;
        body["top_p"] = req.sampling.top_p;
        body["top_k"] = req.sampling.top_k;
        body["repetition_penalty"] = req.sampling.repetition_penalty;
        body["max_tokens"] = req.max_tokens;
        return body.dump();
    }

    static GenerationResponse parse_reply(const std::string& body) {
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("http backend returned invalid JSON: ") + e.what());
        }
        if (!reply.contains("choices") || !reply["choices"].is_array() ||
            reply["choices"].empty()) {
            throw BackendError("http backend reply missing choices[0]");
        }
        const auto& first = reply["choices"][0];
        if (!first.contains("message") || !first["message"].contains("content") ||
            !first["message"]["content"].is_string()) {
            throw BackendError("http backend reply missing choices[0].message.content");
        }
        GenerationResponse out;
        out.content = first["message"]["content"].get<std::string>();
        if (first.contains("finish_reason") && first["finish_reason"].is_string())
            out.finish_reason = first["finish_reason"].get<std::string>();
        return out;
    }

    HttpBackendConfig cfg_;
    std::string base_url_;
    std::string path_;
};

}  // namespace mirage
