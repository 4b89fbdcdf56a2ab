#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "midthink/error.hpp"
#include "midthink/tokenizer.hpp"

namespace midthink {

enum class ApiKind {
    completions,  // POST {base}/v1/completions with a raw prompt
    chat,         // POST {base}/v1/chat/completions with assistant prefill
};

ApiKind api_kind_from_string(std::string_view text);
std::string_view to_string(ApiKind kind);

struct Endpoint {
    /// scheme://host[:port][/path-prefix]
    std::string base_url;
    /// Bearer token; empty means read MIDTHINK_API_KEY from the environment.
    std::string api_key;
    ApiKind api = ApiKind::completions;
    std::chrono::milliseconds timeout{std::chrono::minutes(10)};
};

/// Bounded exponential backoff. The n-th wait is base * 2^n clamped to
/// max_delay, and the sum of all waits never exceeds total_ceiling.
struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{500};
    std::chrono::milliseconds max_delay{8000};
    std::chrono::milliseconds total_ceiling{30000};

    /// Wait before attempt `attempt` (1-based retries), given what was
    /// already spent.
    std::chrono::milliseconds delay_for(int retry, std::chrono::milliseconds spent) const;
};

/// Split form of a prompt, needed only by the chat adapter.
struct ChatPrefill {
    std::string user;
    std::string assistant_prefix;
};

struct GenerationRequest {
    std::string prompt;
    std::size_t max_tokens = 8192;
    double temperature = 0.6;
    double top_p = 0.95;
    std::vector<std::string> stop;
    std::optional<std::int64_t> seed;
    std::string model;
    std::optional<ChatPrefill> chat;

    /// Throws InputError: max_tokens >= 1, temperature >= 0,
    /// 0 < top_p <= 1, at most 4 stop strings.
    void validate() const;
};

enum class FinishReason { stop, length, error };

std::string_view to_string(FinishReason reason);
FinishReason finish_reason_from_string(std::string_view text);

struct GenerationResult {
    std::string text;
    std::size_t completion_tokens = 0;
    FinishReason finish_reason = FinishReason::stop;
    std::chrono::milliseconds latency{0};
    /// False when the server omitted usage; completion_tokens is then 0 and
    /// callers count tokens themselves.
    bool has_usage = false;
    int attempts = 0;
    std::chrono::milliseconds retry_delay{0};
    std::string error;
    /// Set with `error` when complete_batch turned an exception into a result.
    std::optional<ErrorKind> error_kind;
};

/// Client for OpenAI-compatible serving endpoints. Thread-safe: every call
/// opens its own connection.
class InferenceClient {
public:
    explicit InferenceClient(Endpoint endpoint, RetryPolicy retry = {});

    const Endpoint& endpoint() const noexcept { return endpoint_; }
    const RetryPolicy& retry_policy() const noexcept { return retry_; }

    /// Retries transport failures and HTTP 429/5xx. Throws TransportError
    /// once attempts or the delay ceiling are exhausted, ProtocolError on a
    /// reply that does not follow the wire format.
    GenerationResult complete(const GenerationRequest& request,
                              std::optional<std::size_t> batch_index = std::nullopt) const;

    /// Index-aligned results; at most `concurrency` requests in flight.
    /// A failed request becomes an error result in place.
    std::vector<GenerationResult> complete_batch(std::span<const GenerationRequest> requests,
                                                 std::size_t concurrency) const;

    /// POST {base}/tokenize. Throws CapabilityError when the route is absent.
    TokenSeq remote_tokenize(std::string_view text, std::string_view model = {}) const;

    /// POST {base}/detokenize for id-only tokens.
    std::string remote_detokenize(std::span<const Token> tokens, std::string_view model = {}) const;

private:
    struct HttpReply {
        int status = 0;
        std::string body;
    };
    HttpReply post(const std::string& path, const std::string& body,
                   std::optional<std::size_t> batch_index) const;

    Endpoint endpoint_;
    RetryPolicy retry_;
    std::string scheme_host_port_;
    std::string path_prefix_;
};

/// Tokenizer backed by the serving endpoint's tokenize route.
class RemoteTokenizer final : public Tokenizer {
public:
    RemoteTokenizer(const InferenceClient& client, std::string model)
        : client_(client), model_(std::move(model)) {}

    std::string name() const override { return "remote:" + client_.endpoint().base_url; }
    TokenizerKind kind() const override { return TokenizerKind::remote_endpoint; }
    TokenSeq encode(std::string_view text) const override;
    std::string decode(std::span<const Token> tokens) const override;

private:
    const InferenceClient& client_;
    std::string model_;
};

}  // namespace midthink
