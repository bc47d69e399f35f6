#include "priceaudit/llm_gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace priceaudit {

using nlohmann::json;

namespace {

void default_sleep(double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

// Splits "http://host:1234/v1/chat" into base ("http://host:1234") and
// path ("/v1/chat").
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    const std::size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos)
        throw ConfigError("endpoint must include a scheme: '" + endpoint + "'");
    const std::size_t slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos)
        return {endpoint, "/"};
    return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

class HttpTransport : public Transport {
public:
    explicit HttpTransport(BackendConfig config) : config_(std::move(config)) {}

    Reply send(const ChatRequest& request) override {
        const char* credential = std::getenv(config_.credential_env_var.c_str());
        if (!credential || !*credential)
            throw ConfigError("credential env var '" + config_.credential_env_var + "' is not set");

        auto [base, path] = split_endpoint(config_.endpoint);
        httplib::Client client(base);
        const auto timeout = std::chrono::duration<double>(request.timeout_seconds);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
        client.set_write_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));

        json body = {
            {"model", config_.model_name},
            {"messages",
             json::array({json{{"role", "system"}, {"content", request.system_prompt}},
                          json{{"role", "user"}, {"content", request.user_message}}})},
            {"temperature", request.temperature},
        };
        httplib::Headers headers = {
            {"Authorization", std::string("Bearer ") + credential},
            {"x-api-key", credential},
        };

        auto result = client.Post(path, headers, body.dump(), "application/json");
        if (!result)
            throw TransientError("transport failure: " + httplib::to_string(result.error()));
        if (result->status == 429 || result->status == 408 || result->status >= 500)
            throw TransientError("backend returned status " + std::to_string(result->status));
        if (result->status < 200 || result->status >= 300)
            throw GatewayError("backend returned status " + std::to_string(result->status) +
                               ": " + result->body);
        return parse_reply(result->body);
    }

private:
    static Reply parse_reply(const std::string& body) {
        json parsed;
        try {
            parsed = json::parse(body);
        } catch (const json::parse_error& e) {
            throw GatewayError(std::string("unparsable backend response: ") + e.what());
        }

        Reply reply;
        // OpenAI-style choices[0].message.content, then Anthropic-style
        // content[0].text, then a top-level text field.
        if (parsed.contains("choices") && parsed["choices"].is_array() && !parsed["choices"].empty()) {
            const json& choice = parsed["choices"][0];
            if (choice.contains("message") && choice["message"].contains("content"))
                reply.text = choice["message"]["content"].get<std::string>();
            else if (choice.contains("text"))
                reply.text = choice["text"].get<std::string>();
        } else if (parsed.contains("content") && parsed["content"].is_array() &&
                   !parsed["content"].empty() && parsed["content"][0].contains("text")) {
            reply.text = parsed["content"][0]["text"].get<std::string>();
        } else if (parsed.contains("text") && parsed["text"].is_string()) {
            reply.text = parsed["text"].get<std::string>();
        } else {
            throw GatewayError("backend response carries no content field");
        }

        reply.tokens_reported = false;
        if (parsed.contains("usage") && parsed["usage"].is_object()) {
            const json& usage = parsed["usage"];
            if (usage.contains("prompt_tokens")) {
                reply.prompt_tokens = usage["prompt_tokens"].get<long long>();
                reply.completion_tokens = usage.value("completion_tokens", 0ll);
                reply.tokens_reported = true;
            } else if (usage.contains("input_tokens")) {
                reply.prompt_tokens = usage["input_tokens"].get<long long>();
                reply.completion_tokens = usage.value("output_tokens", 0ll);
                reply.tokens_reported = true;
            }
        }
        return reply;
    }

    BackendConfig config_;
};

} // namespace

namespace detail {
// Defined in mock_oracle.cpp: routes a request to the right mock role.
Transport::Reply mock_complete(const ChatRequest& request);
} // namespace detail

namespace {

class MockTransport : public Transport {
public:
    Reply send(const ChatRequest& request) override { return detail::mock_complete(request); }
};

} // namespace

std::unique_ptr<Transport> make_transport(const BackendConfig& config) {
    if (config.kind == BackendKind::Http)
        return std::make_unique<HttpTransport>(config);
    return std::make_unique<MockTransport>();
}

Gateway::Gateway(BackendConfig config)
    : Gateway(std::move(config), nullptr) {}

Gateway::Gateway(BackendConfig config, std::unique_ptr<Transport> transport, SleepFn sleep)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport) : make_transport(config_)),
      sleep_(sleep ? std::move(sleep) : default_sleep) {}

ChatResponse Gateway::complete(const ChatRequest& request) {
    if (request.system_prompt.empty() || request.user_message.empty())
        throw GatewayError("chat request prompts must be nonempty");
    if (request.temperature < 0.0)
        throw GatewayError("temperature must be >= 0");
    if (request.max_retries < 0)
        throw GatewayError("max_retries must be >= 0");
    if (!(request.timeout_seconds > 0.0))
        throw GatewayError("timeout_seconds must be positive");
    if (config_.kind == BackendKind::Http) {
        if (config_.endpoint.empty())
            throw ConfigError("http backend requires an endpoint");
        const char* credential = std::getenv(config_.credential_env_var.c_str());
        if (!credential || !*credential)
            throw ConfigError("credential env var '" + config_.credential_env_var + "' is not set");
    }

    const int current = in_flight_.fetch_add(1) + 1;
    int seen = max_in_flight_.load();
    while (current > seen && !max_in_flight_.compare_exchange_weak(seen, current)) {
    }
    total_calls_.fetch_add(1);

    struct InFlightGuard {
        std::atomic<int>& counter;
        ~InFlightGuard() { counter.fetch_sub(1); }
    } guard{in_flight_};

    const int max_attempts = request.max_retries + 1;
    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        try {
            Transport::Reply reply = transport_->send(request);
            ChatResponse response;
            response.text = std::move(reply.text);
            response.prompt_tokens = reply.prompt_tokens;
            response.completion_tokens = reply.completion_tokens;
            response.tokens_reported = reply.tokens_reported;
            response.attempts = attempt;
            return response;
        } catch (const TransientError& e) {
            last_error = e.what();
            if (attempt < max_attempts)
                sleep_(std::ldexp(1.0, attempt - 1)); // 1s, 2s, 4s, ...
        }
    }
    throw RetriesExhaustedError("gave up after " + std::to_string(max_attempts) +
                                    " attempt(s): " + last_error,
                                max_attempts);
}

json extract_json(const std::string& text) {
    for (std::size_t start = text.find('{'); start != std::string::npos;
         start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    const std::string candidate = text.substr(start, i - start + 1);
                    json parsed = json::parse(candidate, nullptr, false);
                    if (!parsed.is_discarded() && parsed.is_object())
                        return parsed;
                    break; // malformed candidate: resume scan at next '{'
                }
            }
        }
    }
    throw GatewayError("no JSON object found in backend reply");
}

} // namespace priceaudit
