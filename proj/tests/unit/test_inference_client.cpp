#include <chrono>

#include "doctest.h"
#include "midthink/error.hpp"
#include "midthink/inference_client.hpp"
#include "midthink/mock_model.hpp"
#include "midthink/prompt_format.hpp"
#include "test_support.hpp"

using namespace midthink;
using namespace std::chrono_literals;

namespace {

RetryPolicy quick_retry(int attempts = 4) {
    RetryPolicy r;
    r.max_attempts = attempts;
    r.base_delay = 5ms;
    r.max_delay = 20ms;
    r.total_ceiling = 40ms;
    return r;
}

GenerationRequest request(const Problem& p, std::string_view mode, std::string model = "mock") {
    GenerationRequest r;
    r.prompt = render_chat_prompt(p.question, find_mode(mode));
    r.max_tokens = 1000;
    r.model = std::move(model);
    r.seed = 1;
    return r;
}

}  // namespace

TEST_SUITE("inference_client") {

TEST_CASE("batch results stay aligned with their requests") {
    testing_support::RunningMock mock;
    const InferenceClient client({mock.server.base_url()}, quick_retry());
    const auto problems = make_synthetic_problems(12);
    std::vector<GenerationRequest> reqs;
    for (std::size_t i = 0; i < problems.size(); ++i)
        reqs.push_back(request(problems[i], i % 2 ? modes::think : modes::no_think));

    const auto results = client.complete_batch(reqs, 4);
    REQUIRE(results.size() == reqs.size());
    const MockModel model;
    for (std::size_t i = 0; i < reqs.size(); ++i) {
        CHECK(results[i].error.empty());
        CHECK(results[i].has_usage);
        CHECK(results[i].text == model.complete(reqs[i].prompt, reqs[i].max_tokens, reqs[i].seed).text);
        CHECK(results[i].completion_tokens == (i % 2 ? 400u : 40u));
    }
    // Every request carried its batch index.
    std::vector<long> indices;
    for (const auto& e : mock.server.log()) indices.push_back(e.index);
    std::sort(indices.begin(), indices.end());
    for (std::size_t i = 0; i < indices.size(); ++i) CHECK(indices[i] == static_cast<long>(i));
}

TEST_CASE("transient failures are retried") {
    testing_support::RunningMock mock;
    const InferenceClient client({mock.server.base_url()}, quick_retry());
    const auto p = make_synthetic_problems(1).front();
    const auto r = client.complete(request(p, modes::no_think, "mock-flaky"));
    CHECK(r.attempts == 3);
    CHECK(r.retry_delay == 15ms);
    CHECK(r.completion_tokens == 40);
}

TEST_CASE("persistent failure becomes a TransportError within the backoff ceiling") {
    testing_support::RunningMock mock;
    const auto policy = quick_retry(10);
    const InferenceClient client({mock.server.base_url()}, policy);
    const auto p = make_synthetic_problems(1).front();
    const auto start = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(client.complete(request(p, modes::think, "mock-fail")), TransportError);
    const auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(elapsed >= policy.total_ceiling);
    CHECK(elapsed < policy.total_ceiling + 2s);
    CHECK(mock.server.log().size() == 10);
}

TEST_CASE("an unreachable endpoint is a TransportError") {
    int port = 0;
    {
        testing_support::RunningMock mock;
        port = mock.server.port();
    }
    const InferenceClient client({"http://127.0.0.1:" + std::to_string(port)}, quick_retry(2));
    const auto p = make_synthetic_problems(1).front();
    CHECK_THROWS_AS(client.complete(request(p, modes::think)), TransportError);
}

TEST_CASE("a reply outside the wire format is a ProtocolError") {
    testing_support::RunningMock mock;
    const InferenceClient client({mock.server.base_url()}, quick_retry());
    const auto p = make_synthetic_problems(1).front();
    try {
        client.complete(request(p, modes::think, "mock-bad-json"));
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        CHECK(e.body() == "this is not json");
    }
    CHECK(mock.server.log().size() == 1);
}

TEST_CASE("a failed batch entry is an error result in place") {
    testing_support::RunningMock mock;
    const InferenceClient client({mock.server.base_url()}, quick_retry(1));
    const auto problems = make_synthetic_problems(3);
    std::vector<GenerationRequest> reqs = {request(problems[0], modes::no_think),
                                           request(problems[1], modes::no_think, "mock-bad-json"),
                                           request(problems[2], modes::no_think)};
    const auto results = client.complete_batch(reqs, 2);
    CHECK(results[0].error.empty());
    CHECK(results[1].finish_reason == FinishReason::error);
    CHECK_FALSE(results[1].error.empty());
    CHECK(results[2].error.empty());
}

TEST_CASE("backoff doubles, clamps and respects the ceiling") {
    RetryPolicy r;
    r.base_delay = 100ms;
    r.max_delay = 1000ms;
    r.total_ceiling = 1500ms;
    CHECK(r.delay_for(0, 0ms) == 100ms);
    CHECK(r.delay_for(1, 100ms) == 200ms);
    CHECK(r.delay_for(3, 0ms) == 800ms);
    CHECK(r.delay_for(4, 0ms) == 1000ms);
    CHECK(r.delay_for(30, 0ms) == 1000ms);
    CHECK(r.delay_for(4, 1200ms) == 300ms);
    CHECK(r.delay_for(4, 1500ms) == 0ms);
    std::chrono::milliseconds spent{0};
    for (int i = 0; i < 50; ++i) spent += r.delay_for(i, spent);
    CHECK(spent == r.total_ceiling);
}

TEST_CASE("request validation") {
    GenerationRequest r;
    r.prompt = "x";
    CHECK_NOTHROW(r.validate());
    r.max_tokens = 0;
    CHECK_THROWS_AS(r.validate(), InputError);
    r.max_tokens = 1;
    r.top_p = 0.0;
    CHECK_THROWS_AS(r.validate(), InputError);
    r.top_p = 1.0;
    r.stop = {"a", "b", "c", "d", "e"};
    CHECK_THROWS_AS(r.validate(), InputError);
}

TEST_CASE("endpoint URLs need a scheme") {
    CHECK_THROWS_AS(InferenceClient({"localhost:8000"}), ConfigError);
    CHECK_THROWS_AS(InferenceClient({""}), ConfigError);
    CHECK_NOTHROW(InferenceClient({"http://localhost:8000/"}));
}

TEST_CASE("remote tokenizer uses the tokenize route") {
    testing_support::RunningMock mock;
    const InferenceClient client({mock.server.base_url()}, quick_retry());
    const auto tokens = client.remote_tokenize("<think>\nOkay, so");
    REQUIRE(tokens.size() == 3);
    CHECK(*tokens[1].piece == "\nOkay,");
    const RemoteTokenizer tok(client, "mock");
    CHECK(tok.decode(tok.encode("a b  c")) == "a b  c");
    CHECK(tok.kind() == TokenizerKind::remote_endpoint);
}

TEST_CASE("a missing tokenize route is a CapabilityError") {
    MockServerOptions opts;
    opts.enable_tokenize = false;
    testing_support::RunningMock mock({}, opts);
    const InferenceClient client({mock.server.base_url()}, quick_retry());
    CHECK_THROWS_AS(client.remote_tokenize("hello"), CapabilityError);
}

TEST_CASE("chat api sends the assistant prefix as a prefill") {
    testing_support::RunningMock mock;
    Endpoint ep{mock.server.base_url()};
    ep.api = ApiKind::chat;
    const InferenceClient client(ep, quick_retry());
    const auto p = make_synthetic_problems(1).front();
    auto req = request(p, modes::think);
    req.chat = ChatPrefill{p.question, render_assistant_prefix(find_mode(modes::think))};
    const auto r = client.complete(req);
    CHECK(r.completion_tokens == 400);
    CHECK(count_wait(r.text) == 6);
    // The mock rebuilds the same prompt the completions route would see.
    REQUIRE(mock.server.log().size() == 1);
    CHECK(mock.server.log()[0].prompt_hash == prompt_hash(req.prompt));

    req.chat.reset();
    CHECK_THROWS_AS(client.complete(req), ConfigError);
}

TEST_CASE("api and finish reason names") {
    CHECK(api_kind_from_string("chat") == ApiKind::chat);
    CHECK(to_string(ApiKind::completions) == "completions");
    CHECK_THROWS_AS(api_kind_from_string("grpc"), ConfigError);
    CHECK(finish_reason_from_string("length") == FinishReason::length);
    CHECK(to_string(FinishReason::error) == "error");
}

}
