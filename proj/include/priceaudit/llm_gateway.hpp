#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace priceaudit {

/// Base class for all gateway failures.
class GatewayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Misconfiguration detected before any network traffic (e.g. missing
/// credential environment variable).
class ConfigError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

/// A failure worth retrying: connection refused, timeout, 5xx, 429.
class TransientError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

/// All retry attempts consumed.
class RetriesExhaustedError : public GatewayError {
public:
    RetriesExhaustedError(const std::string& what, int attempts)
        : GatewayError(what), attempts(attempts) {}
    int attempts;
};

enum class BackendKind { Http, Mock };

struct BackendConfig {
    BackendKind kind = BackendKind::Mock;
    std::string endpoint;                                  // http kind only
    std::string model_name = "mock-oracle";
    std::string credential_env_var = "PRICE_AUDIT_API_KEY";
};

struct ChatRequest {
    std::string system_prompt;
    std::string user_message;
    double temperature = 0.0;
    int max_retries = 3;
    double timeout_seconds = 30.0;
};

struct ChatResponse {
    std::string text;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    int attempts = 1;
    bool tokens_reported = true; // false when the backend omitted usage counts
};

/// Per-call accounting handed back by agent operations so the pipeline
/// can build the per-assessment token trace.
struct ChatUsage {
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    int attempts = 0;
    bool tokens_reported = true;
    bool call_failed = false;

    void record(const ChatResponse& response) {
        prompt_tokens = response.prompt_tokens;
        completion_tokens = response.completion_tokens;
        attempts = response.attempts;
        tokens_reported = response.tokens_reported;
    }
};

/// One backend round trip. Implementations throw TransientError for
/// retryable failures and GatewayError otherwise.
class Transport {
public:
    virtual ~Transport() = default;
    struct Reply {
        std::string text;
        long long prompt_tokens = 0;
        long long completion_tokens = 0;
        bool tokens_reported = true;
    };
    virtual Reply send(const ChatRequest& request) = 0;
};

/// Chat-completion client with retries, exponential backoff and in-flight
/// instrumentation. Reentrant: concurrent complete() calls are safe; the
/// caller enforces any concurrency bound.
class Gateway {
public:
    using SleepFn = std::function<void(double seconds)>;

    explicit Gateway(BackendConfig config);
    Gateway(BackendConfig config, std::unique_ptr<Transport> transport, SleepFn sleep = {});

    /// Sends the request, retrying transient failures up to
    /// request.max_retries times with exponential backoff (base 1s).
    /// For the http backend the credential env var is checked before any
    /// network call.
    ChatResponse complete(const ChatRequest& request);

    const BackendConfig& config() const { return config_; }

    // Instrumentation (used by pipeline tests to observe the bound).
    long long total_calls() const { return total_calls_.load(); }
    int max_in_flight() const { return max_in_flight_.load(); }

private:
    BackendConfig config_;
    std::unique_ptr<Transport> transport_;
    SleepFn sleep_;
    std::atomic<long long> total_calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
};

/// Parses the first JSON object found in `text`. Raw objects, objects
/// wrapped in fenced code blocks and objects surrounded by prose all
/// work. Throws GatewayError when no object parses.
nlohmann::json extract_json(const std::string& text);

/// Roles the deterministic mock backend can play.
enum class MockRole { Relevance, Utility, Padding, Decision };

/// Deterministic rule-based stand-in for a live model. Payload schemas:
///   Relevance: {"target": {title, category, ...}, "neighbor": {...}}
///   Utility:   {"target": {attributes: {...}}, "neighbor": {attributes: {...}}}
///   Padding:   any object
///   Decision:  {"strategy": "veto"|"voting",
///               "points": [{neighbor_id, zone, rel_gap, net_utility}, ...]}
/// Rules: relevance is "Relevant" iff same category and title-token
/// Jaccard >= 0.2; utility compares shared attributes (numeric: higher is
/// better; equal: same; non-numeric unequal: mixed), weight 3 for
/// brand/quantity else 2; padding is the constant 0.40; decision applies
/// the quadrant strategy rules. Throws GatewayError on schema mismatch.
nlohmann::json mock_oracle(MockRole role, const nlohmann::json& payload);

/// Builds the transport for a backend kind (mock transport routes
/// requests to mock_oracle by recognizing the agent system prompts).
std::unique_ptr<Transport> make_transport(const BackendConfig& config);

// System-prompt markers the mock uses to recognize the calling agent.
inline constexpr const char* kRelevanceMarker = "pricing relevance expert";
inline constexpr const char* kUtilityMarker = "product comparison expert";
inline constexpr const char* kPaddingMarker = "pricing sensitivity expert";
inline constexpr const char* kDecisionMarker = "pricing analysis expert";

} // namespace priceaudit
