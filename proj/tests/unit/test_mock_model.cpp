#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "midthink/budget_control.hpp"
#include "midthink/error.hpp"
#include "midthink/mock_model.hpp"
#include "midthink/prompt_format.hpp"
#include "test_support.hpp"

using namespace midthink;

namespace {

std::string prompt_for(const Problem& p, std::string_view mode) {
    return render_chat_prompt(p.question, find_mode(mode));
}

}  // namespace

TEST_SUITE("mock_model") {

TEST_CASE("each cue selects its regime and wait count") {
    const MockModel model;
    const auto p = make_synthetic_problems(1).front();

    const auto think = model.respond(prompt_for(p, modes::think));
    CHECK(think.regime == MockRegime::think);
    CHECK(count_wait(think.text) == 6);
    CHECK(think.completion_tokens == 400);
    CHECK(think.text.find("</think>") != std::string::npos);

    const auto mid = model.respond(prompt_for(p, "mid_think_reason"));
    CHECK(mid.regime == MockRegime::mid);
    CHECK(count_wait(mid.text) == 3);
    CHECK(mid.completion_tokens == 200);
    CHECK(mid.text.find("</reason>") != std::string::npos);

    const auto none = model.respond(prompt_for(p, modes::no_think));
    CHECK(none.regime == MockRegime::no_think);
    CHECK(count_wait(none.text) == 0);
    CHECK(none.completion_tokens == 40);

    for (const auto& c : {think, mid, none}) CHECK(c.completion_tokens == whitespace_token_count(c.text));
}

TEST_CASE("cues are read from the assistant turn only") {
    const MockModel model;
    auto p = make_synthetic_problems(1).front();
    p.question += " Okay";
    CHECK(model.respond(prompt_for(p, modes::no_think)).regime == MockRegime::no_think);
}

TEST_CASE("the answer the mock boxes is the gold answer exactly when reasoning suffices") {
    const MockModel model;
    for (const auto& p : make_synthetic_problems(30, 7)) {
        const auto c = model.respond(prompt_for(p, modes::think));
        const auto answer = extract_answer(c.text, AnswerType::math);
        REQUIRE(answer.has_value());
        CHECK(grade(answer, p.gold_answer, AnswerType::math) == c.correct);
    }
}

TEST_CASE("max_tokens caps the completion and reports truncation") {
    const MockModel model;
    const auto p = make_synthetic_problems(1).front();
    const auto c = model.complete(prompt_for(p, modes::think), 10);
    CHECK(c.truncated);
    CHECK(c.completion_tokens == 10);
    CHECK(whitespace_token_count(c.text) == 10);
    const auto full = model.complete(prompt_for(p, modes::no_think), 1000);
    CHECK_FALSE(full.truncated);
}

TEST_CASE("responses are deterministic in prompt and seed") {
    const MockModel a;
    const MockModel b;
    const auto p = make_synthetic_problems(1).front();
    const auto prompt = prompt_for(p, modes::think);
    CHECK(a.respond(prompt, 5).text == b.respond(prompt, 5).text);
    CHECK(a.respond(prompt, 5).text != a.respond(prompt, 6).text);
}

TEST_CASE("second pass is correct iff the embedded reasoning reaches the threshold") {
    const MockModel model;
    const WhitespaceTokenizer tok;
    const auto think = find_mode(modes::think);
    std::size_t seen_right = 0, seen_wrong = 0;
    for (const auto& p : make_synthetic_problems(12, 3)) {
        const auto threshold = model.behavior().correctness_threshold(p.id);
        std::string reasoning = "Okay";
        for (int i = 0; i < 399; ++i) reasoning += " step";
        const auto tokens = tok.encode(reasoning);
        std::size_t last_len = 0;
        for (std::size_t k = 0; k <= tokens.size(); k += 25) {
            const auto prompt = build_second_pass_prompt(
                p.question, std::span<const Token>(tokens).first(k), think, {}, tok);
            const auto c = model.respond(prompt);
            INFO("id " << p.id << " k " << k << " threshold " << threshold);
            CHECK(c.embedded_think_tokens == k);
            CHECK(c.regime == (k == 0 ? MockRegime::no_think : MockRegime::second_pass));
            CHECK(c.correct == (k >= threshold));
            CHECK(c.completion_tokens >= last_len);
            last_len = c.completion_tokens;
            (c.correct ? seen_right : seen_wrong)++;
        }
    }
    CHECK(seen_right > 0);
    CHECK(seen_wrong > 0);
}

TEST_CASE("behavior validation") {
    MockBehavior b;
    CHECK_NOTHROW(b.validate());
    b.mid_len = b.long_len;
    CHECK_THROWS_AS(b.validate(), ConfigError);
    b = {};
    b.waits_per_long = 0;
    CHECK_THROWS_AS(MockModel{b}, ConfigError);
}

TEST_CASE("server logs one entry per request with prompt hashes") {
    testing_support::RunningMock mock;
    httplib::Client cli("127.0.0.1", mock.server.port());
    const auto p = make_synthetic_problems(1).front();
    const auto prompt = prompt_for(p, modes::no_think);
    for (int i = 0; i < 3; ++i) {
        const nlohmann::json body{{"model", "mock"}, {"prompt", prompt}, {"max_tokens", 64}};
        httplib::Headers h{{"X-Request-Index", std::to_string(10 + i)}};
        const auto res = cli.Post("/v1/completions", h, body.dump(), "application/json");
        REQUIRE(res);
        CHECK(res->status == 200);
        const auto reply = nlohmann::json::parse(res->body);
        CHECK(reply["usage"]["completion_tokens"] == 40);
    }
    const auto log = mock.server.log();
    REQUIRE(log.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(log[i].index == static_cast<long>(10 + i));
        CHECK(log[i].prompt_hash == prompt_hash(prompt));
    }
    const auto res = cli.Get("/log");
    REQUIRE(res);
    CHECK(nlohmann::json::parse(res->body).size() == 3);
    mock.server.clear_log();
    CHECK(mock.server.log().empty());
}

TEST_CASE("tokenize route follows the whitespace rule") {
    testing_support::RunningMock mock;
    httplib::Client cli("127.0.0.1", mock.server.port());
    const auto res = cli.Post("/tokenize", R"({"prompt":"a  b\nc"})", "application/json");
    REQUIRE(res);
    const auto body = nlohmann::json::parse(res->body);
    CHECK(body["count"] == 3);
    CHECK(body["tokens"][1] == "  b");
}

TEST_CASE("starting on a taken port is an IoError") {
    testing_support::RunningMock first;
    MockServer second;
    CHECK_THROWS_AS(second.start(first.server.port()), IoError);
}

}
