#include "midthink/inference_client.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "midthink/error.hpp"

namespace midthink {

using json = nlohmann::json;
using std::chrono::milliseconds;

ApiKind api_kind_from_string(std::string_view text) {
    if (text == "completions") return ApiKind::completions;
    if (text == "chat") return ApiKind::chat;
    throw ConfigError("unknown api '" + std::string(text) + "'; expected 'completions' or 'chat'");
}

std::string_view to_string(ApiKind kind) {
    return kind == ApiKind::chat ? "chat" : "completions";
}

std::string_view to_string(FinishReason reason) {
    switch (reason) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "error";
}

FinishReason finish_reason_from_string(std::string_view text) {
    if (text == "length") return FinishReason::length;
    if (text == "error") return FinishReason::error;
    return FinishReason::stop;
}

milliseconds RetryPolicy::delay_for(int retry, milliseconds spent) const {
    milliseconds d = base_delay;
    for (int i = 0; i < retry && d < max_delay; ++i) d *= 2;
    d = std::min(d, max_delay);
    const milliseconds left = total_ceiling - spent;
    if (left <= milliseconds(0)) return milliseconds(0);
    return std::min(d, left);
}

void GenerationRequest::validate() const {
    if (max_tokens < 1) throw InputError("max_tokens must be >= 1");
    if (!(temperature >= 0.0)) throw InputError("temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw InputError("top_p must lie in (0, 1]");
    if (stop.size() > 4) throw InputError("at most 4 stop sequences are supported");
}

InferenceClient::InferenceClient(Endpoint endpoint, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(retry) {
    if (endpoint_.base_url.empty()) throw ConfigError("endpoint URL is empty");
    if (endpoint_.api_key.empty())
        if (const char* key = std::getenv("MIDTHINK_API_KEY")) endpoint_.api_key = key;

    std::string url = endpoint_.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint URL needs a scheme (http:// or https://): " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    if (retry_.max_attempts < 1) retry_.max_attempts = 1;
}

InferenceClient::HttpReply InferenceClient::post(const std::string& path, const std::string& body,
                                                 std::optional<std::size_t> batch_index) const {
    httplib::Client cli(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint_.timeout).count();
    cli.set_connection_timeout(10, 0);
    cli.set_read_timeout(secs, 0);
    cli.set_write_timeout(secs, 0);

    httplib::Headers headers;
    if (!endpoint_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
    if (batch_index) headers.emplace("X-Request-Index", std::to_string(*batch_index));

    auto res = cli.Post(path_prefix_ + path, headers, body, "application/json");
    if (!res) throw TransportError(scheme_host_port_ + path_prefix_ + path + ": " + httplib::to_string(res.error()));
    return HttpReply{res->status, res->body};
}

namespace {

bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

json request_body(const GenerationRequest& r, ApiKind api) {
    json body = {
        {"model", r.model},
        {"max_tokens", r.max_tokens},
        {"temperature", r.temperature},
        {"top_p", r.top_p},
    };
    if (!r.stop.empty()) body["stop"] = r.stop;
    if (r.seed) body["seed"] = *r.seed;
    if (api == ApiKind::completions) {
        body["prompt"] = r.prompt;
    } else {
        if (!r.chat) throw ConfigError("chat api needs the user query and assistant prefix");
        body["messages"] = json::array({
            {{"role", "user"}, {"content", r.chat->user}},
            {{"role", "assistant"}, {"content", r.chat->assistant_prefix}},
        });
        // vLLM-style assistant prefill continuation.
        body["continue_final_message"] = true;
        body["add_generation_prompt"] = false;
    }
    return body;
}

GenerationResult parse_completion(const std::string& raw, ApiKind api) {
    GenerationResult out;
    try {
        const auto j = json::parse(raw);
        const auto& choice = j.at("choices").at(0);
        if (api == ApiKind::completions)
            out.text = choice.at("text").get<std::string>();
        else
            out.text = choice.at("message").at("content").get<std::string>();
        if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
            out.finish_reason = finish_reason_from_string(choice["finish_reason"].get<std::string>());
        if (j.contains("usage") && j["usage"].is_object() && j["usage"].contains("completion_tokens")) {
            out.completion_tokens = j["usage"]["completion_tokens"].get<std::size_t>();
            out.has_usage = true;
        }
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed completion reply: ") + e.what(), raw);
    }
    return out;
}

}  // namespace

GenerationResult InferenceClient::complete(const GenerationRequest& request,
                                           std::optional<std::size_t> batch_index) const {
    request.validate();
    const std::string body = request_body(request, endpoint_.api).dump(-1, ' ', false,
                                                                        json::error_handler_t::replace);
    const std::string path = endpoint_.api == ApiKind::completions ? "/v1/completions"
                                                                   : "/v1/chat/completions";
    const auto started = std::chrono::steady_clock::now();
    milliseconds spent{0};
    std::string last_error;
    for (int attempt = 0; attempt < retry_.max_attempts; ++attempt) {
        if (attempt > 0) {
            const auto wait = retry_.delay_for(attempt - 1, spent);
            std::this_thread::sleep_for(wait);
            spent += wait;
        }
        HttpReply reply;
        try {
            reply = post(path, body, batch_index);
        } catch (const TransportError& e) {
            last_error = e.what();
            continue;
        }
        if (retryable_status(reply.status)) {
            last_error = "HTTP " + std::to_string(reply.status) + ": " + reply.body.substr(0, 200);
            continue;
        }
        if (reply.status != 200)
            throw ProtocolError("HTTP " + std::to_string(reply.status) + " from " + path, reply.body);
        auto result = parse_completion(reply.body, endpoint_.api);
        result.attempts = attempt + 1;
        result.retry_delay = spent;
        result.latency = std::chrono::duration_cast<milliseconds>(std::chrono::steady_clock::now() - started);
        return result;
    }
    throw TransportError("giving up after " + std::to_string(retry_.max_attempts) +
                         " attempts (" + std::to_string(spent.count()) + " ms backoff): " + last_error);
}

std::vector<GenerationResult> InferenceClient::complete_batch(std::span<const GenerationRequest> requests,
                                                              std::size_t concurrency) const {
    if (concurrency < 1) throw InputError("concurrency must be >= 1");
    std::vector<GenerationResult> results(requests.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) return;
            GenerationResult failed;
            failed.finish_reason = FinishReason::error;
            try {
                results[i] = complete(requests[i], i);
                continue;
            } catch (const Error& e) {
                failed.error = e.what();
                failed.error_kind = e.kind();
            } catch (const std::exception& e) {
                failed.error = e.what();
            }
            results[i] = std::move(failed);
        }
    };

    const std::size_t n_workers = std::min(concurrency, requests.size());
    if (n_workers <= 1) {
        worker();
        return results;
    }
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    pool.clear();  // joins
    return results;
}

TokenSeq InferenceClient::remote_tokenize(std::string_view text, std::string_view model) const {
    if (text.empty()) return {};
    json body = {{"prompt", std::string(text)}, {"return_token_strs", true}};
    if (!model.empty()) body["model"] = std::string(model);
    const auto reply = post("/tokenize", body.dump(), std::nullopt);
    if (reply.status == 404 || reply.status == 405 || reply.status == 501)
        throw CapabilityError("endpoint has no /tokenize route (HTTP " + std::to_string(reply.status) +
                              "); set tokenizer = reference to fall back to whitespace counting");
    if (reply.status != 200)
        throw ProtocolError("HTTP " + std::to_string(reply.status) + " from /tokenize", reply.body);

    TokenSeq out;
    try {
        const auto j = json::parse(reply.body);
        const auto& tokens = j.at("tokens");
        const json* strs = j.contains("token_strs") && j["token_strs"].is_array() ? &j["token_strs"] : nullptr;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            Token t;
            if (tokens[i].is_string())
                t.piece = tokens[i].get<std::string>();
            else
                t.id = tokens[i].get<std::int64_t>();
            if (!t.piece && strs && i < strs->size() && (*strs)[i].is_string())
                t.piece = (*strs)[i].get<std::string>();
            out.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed tokenize reply: ") + e.what(), reply.body);
    }
    return out;
}

std::string InferenceClient::remote_detokenize(std::span<const Token> tokens,
                                               std::string_view model) const {
    json ids = json::array();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!tokens[i].id)
            throw TokenizerError("token " + std::to_string(i) + " has neither text nor id",
                                 static_cast<long>(i));
        ids.push_back(*tokens[i].id);
    }
    json body = {{"tokens", ids}};
    if (!model.empty()) body["model"] = std::string(model);
    HttpReply reply;
    try {
        reply = post("/detokenize", body.dump(), std::nullopt);
    } catch (const TransportError& e) {
        throw TokenizerError(std::string("detokenize failed: ") + e.what(), 0);
    }
    if (reply.status != 200)
        throw TokenizerError("detokenize failed with HTTP " + std::to_string(reply.status), 0);
    try {
        return json::parse(reply.body).at("prompt").get<std::string>();
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed detokenize reply: ") + e.what(), reply.body);
    }
}

TokenSeq RemoteTokenizer::encode(std::string_view text) const {
    return client_.remote_tokenize(text, model_);
}

std::string RemoteTokenizer::decode(std::span<const Token> tokens) const {
    // Byte-level BPE pieces (e.g. "ĠOkay") do not concatenate back to text,
    // so ids go through the server whenever we have them.
    const bool all_ids = std::all_of(tokens.begin(), tokens.end(),
                                     [](const Token& t) { return t.id.has_value(); });
    if (!tokens.empty() && all_ids) return client_.remote_detokenize(tokens, model_);
    const bool all_pieces = std::all_of(tokens.begin(), tokens.end(),
                                        [](const Token& t) { return t.piece.has_value(); });
    if (all_pieces) {
        std::string out;
        for (const auto& t : tokens) out += *t.piece;
        return out;
    }
    return client_.remote_detokenize(tokens, model_);
}

}  // namespace midthink
