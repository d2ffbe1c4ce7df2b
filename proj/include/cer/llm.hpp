#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cer/cache.hpp"
#include "cer/label.hpp"
#include "cer/prompt_types.hpp"

namespace cer::llm {

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedResponseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One chat round trip. response_text is recorded verbatim, untrimmed.
struct ChatExchange {
    std::string system_text;
    std::string user_text;
    std::string response_text;
    std::chrono::milliseconds latency{0};
    bool cached = false;
};

// Transport behind the backend: performs exactly one exchange.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual std::string name() const = 0;
    virtual std::string chat(const std::string& system_text, const std::string& user_text,
                             double temperature, int max_tokens) = 0;
};

// OpenAI-compatible endpoint: POST {base_url}/v1/chat/completions, reads
// choices[0].message.content. Transient failures (transport, 429, 5xx) throw
// TransportError and are retried by LlmBackend.
class HttpChatTransport final : public ChatTransport {
public:
    HttpChatTransport(std::string base_url, std::string model, std::string api_key = {});

    std::string name() const override;
    std::string chat(const std::string& system_text, const std::string& user_text,
                     double temperature, int max_tokens) override;

private:
    std::string base_url_;
    std::string model_;
    std::string api_key_;
};

// Answers the same text for every prompt.
class ConstantTransport final : public ChatTransport {
public:
    explicit ConstantTransport(std::string response) : response_(std::move(response)) {}

    std::string name() const override { return "constant:" + response_; }
    std::string chat(const std::string&, const std::string&, double, int) override {
        return response_;
    }

private:
    std::string response_;
};

// Replays a fixed rule table: first rule whose `contains` string occurs in
// the user text wins; otherwise the default response. Fully deterministic
// given its configuration.
class ScriptedTransport final : public ChatTransport {
public:
    struct Rule {
        std::string contains;
        std::string response;
    };

    ScriptedTransport(std::vector<Rule> rules, std::string default_response,
                      std::string script_id);
    static ScriptedTransport from_file(const std::filesystem::path& path);

    std::string name() const override { return "scripted:" + script_id_; }
    std::string chat(const std::string& system_text, const std::string& user_text,
                     double temperature, int max_tokens) override;

private:
    std::vector<Rule> rules_;
    std::string default_response_;
    std::string script_id_;
};

struct LlmOptions {
    double temperature = 0.0001;  // must stay > 0
    int max_tokens = 16;          // classification default; paraphrasing uses 256
    int retry_budget = 3;
};

// Chat-completion client: response cache keyed by
// (identity, system, user, temperature, max_tokens), retry with exponential
// backoff, verbatim response capture.
class LlmBackend {
public:
    LlmBackend(std::shared_ptr<ChatTransport> transport, LlmOptions options = {},
               FileCache cache = {});

    // Endpoint/transport name + model; uniquely determines the cache namespace.
    const std::string& identity() const { return identity_; }
    const LlmOptions& options() const { return options_; }

    LlmBackend with_options(LlmOptions options) const;

    ChatExchange complete(const std::string& system_text, const std::string& user_text) const;
    ChatExchange complete(const RenderedPrompt& prompt) const;

    // Test hook; replaces the real backoff sleep.
    void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper);

private:
    std::shared_ptr<ChatTransport> transport_;
    LlmOptions options_;
    FileCache cache_;
    std::string identity_;
    std::function<void(std::chrono::milliseconds)> sleeper_;
};

// Total label extraction: lowercase, strip punctuation, then scan words left
// to right for the first known emotion term; anything else is neutral.
EmotionLabel parse_prediction(std::string_view response_text);

}  // namespace cer::llm
