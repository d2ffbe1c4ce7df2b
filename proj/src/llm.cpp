#include "cer/llm.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cer/hashing.hpp"
#include "cer/strings.hpp"

namespace cer::llm {

using nlohmann::json;

HttpChatTransport::HttpChatTransport(std::string base_url, std::string model, std::string api_key)
    : base_url_(std::move(base_url)), model_(std::move(model)), api_key_(std::move(api_key)) {
    while (!base_url_.empty() && base_url_.back() == '/') {
        base_url_.pop_back();
    }
}

std::string HttpChatTransport::name() const { return base_url_ + "|" + model_; }

std::string HttpChatTransport::chat(const std::string& system_text, const std::string& user_text,
                                    double temperature, int max_tokens) {
    json body;
    body["model"] = model_;
    body["temperature"] = temperature;
    body["max_tokens"] = max_tokens;
    body["messages"] = json::array({json{{"role", "system"}, {"content", system_text}},
                                    json{{"role", "user"}, {"content", user_text}}});

    httplib::Client client(base_url_);
    client.set_read_timeout(300, 0);
    client.set_connection_timeout(10, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    }
    auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
        throw TransportError("chat transport error: " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw MalformedResponseError("chat endpoint returned HTTP " + std::to_string(res->status) +
                                     ": " + res->body);
    }
    try {
        const json doc = json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw MalformedResponseError(std::string("malformed chat response: ") + e.what());
    }
}

ScriptedTransport::ScriptedTransport(std::vector<Rule> rules, std::string default_response,
                                     std::string script_id)
    : rules_(std::move(rules)), default_response_(std::move(default_response)),
      script_id_(std::move(script_id)) {}

ScriptedTransport ScriptedTransport::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open script file: " + path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::runtime_error("script file " + path.string() + ": " + e.what());
    }
    std::vector<Rule> rules;
    if (doc.contains("rules")) {
        for (const auto& rule : doc["rules"]) {
            rules.push_back(Rule{rule.at("contains").get<std::string>(),
                                 rule.at("response").get<std::string>()});
        }
    }
    const std::string default_response = doc.value("default", std::string("neutral"));
    return ScriptedTransport(std::move(rules), default_response, path.filename().string());
}

std::string ScriptedTransport::chat(const std::string&, const std::string& user_text, double,
                                    int) {
    for (const Rule& rule : rules_) {
        if (user_text.find(rule.contains) != std::string::npos) {
            return rule.response;
        }
    }
    return default_response_;
}

LlmBackend::LlmBackend(std::shared_ptr<ChatTransport> transport, LlmOptions options,
                       FileCache cache)
    : transport_(std::move(transport)), options_(options), cache_(std::move(cache)) {
    if (!(options_.temperature > 0.0)) {
        throw std::invalid_argument("LlmBackend: temperature must be > 0");
    }
    if (options_.retry_budget < 0) {
        throw std::invalid_argument("LlmBackend: retry_budget must be nonnegative");
    }
    identity_ = transport_->name();
    sleeper_ = [](std::chrono::milliseconds delay) { std::this_thread::sleep_for(delay); };
}

LlmBackend LlmBackend::with_options(LlmOptions options) const {
    LlmBackend copy(transport_, options, cache_);
    copy.sleeper_ = sleeper_;
    return copy;
}

void LlmBackend::set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) {
    sleeper_ = std::move(sleeper);
}

ChatExchange LlmBackend::complete(const std::string& system_text,
                                  const std::string& user_text) const {
    ChatExchange exchange;
    exchange.system_text = system_text;
    exchange.user_text = user_text;

    char meta[96];
    std::snprintf(meta, sizeof(meta), "%.17g\x1e%d", options_.temperature, options_.max_tokens);
    const std::string key = sha256_hex(identity_ + "\x1e" + system_text + "\x1e" + user_text +
                                       "\x1e" + meta);

    if (cache_.enabled()) {
        if (const auto hit = cache_.get(key)) {
            try {
                const json doc = json::parse(*hit);
                exchange.response_text = doc.at("response").get<std::string>();
                exchange.cached = true;
                return exchange;
            } catch (const std::exception&) {
                // Unreadable cache entry: recompute below.
            }
        }
    }

    const auto started = std::chrono::steady_clock::now();
    std::string last_error;
    for (int attempt = 0;; ++attempt) {
        try {
            exchange.response_text =
                transport_->chat(system_text, user_text, options_.temperature, options_.max_tokens);
            break;
        } catch (const TransportError& e) {
            last_error = e.what();
            if (attempt >= options_.retry_budget) {
                throw TransportError("retry budget (" + std::to_string(options_.retry_budget) +
                                     ") exhausted: " + last_error);
            }
            const auto delay = std::chrono::milliseconds(250) * (1LL << std::min(attempt, 4));
            sleeper_(delay);
        }
    }
    exchange.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);

    if (cache_.enabled()) {
        json doc;
        doc["response"] = exchange.response_text;
        cache_.put(key, doc.dump());
    }
    return exchange;
}

ChatExchange LlmBackend::complete(const RenderedPrompt& prompt) const {
    return complete(prompt.system_text, prompt.user_text);
}

EmotionLabel parse_prediction(std::string_view response_text) {
    static const std::map<std::string, EmotionLabel, std::less<>> kSynonyms = {
        {"happy", EmotionLabel::happy},   {"happiness", EmotionLabel::happy},
        {"joy", EmotionLabel::happy},     {"joyful", EmotionLabel::happy},
        {"sad", EmotionLabel::sad},       {"sadness", EmotionLabel::sad},
        {"sorrow", EmotionLabel::sad},    {"angry", EmotionLabel::angry},
        {"anger", EmotionLabel::angry},   {"mad", EmotionLabel::angry},
        {"neutral", EmotionLabel::neutral},
    };

    std::string word;
    for (char raw : response_text) {
        const auto c = static_cast<unsigned char>(raw);
        if (std::isalpha(c)) {
            word.push_back(static_cast<char>(std::tolower(c)));
            continue;
        }
        if (!word.empty()) {
            if (const auto it = kSynonyms.find(word); it != kSynonyms.end()) {
                return it->second;
            }
            word.clear();
        }
    }
    if (!word.empty()) {
        if (const auto it = kSynonyms.find(word); it != kSynonyms.end()) {
            return it->second;
        }
    }
    return EmotionLabel::neutral;
}

}  // namespace cer::llm
