#include "doctest.h"
#include "midthink/config.hpp"
#include "midthink/error.hpp"
#include "test_support.hpp"

using namespace midthink;

namespace {

const char* kFull = R"(# sweep on the mock
endpoint = http://127.0.0.1:8000
model = mock
api = chat
dataset = data/problems.jsonl
dataset_name = synth
answer_type = mcq
modes = think, no_think , mid_think_reason
budgets = 0, 0.25, 0.5
temperature = 0.7
top_p = 0.9
max_tokens_think = 4096
max_tokens_no_think = 512
seed = 42
second_pass_seed = reuse
repeats = 3
concurrency = 2
tokenizer = reference
output_dir = runs/x
fixed_token_caps = 64, 128
brevity_instruction = "Be brief. "
classify_epsilon = 1.5
retry_attempts = 2
retry_base_ms = 10
retry_max_ms = 20
retry_ceiling_ms = 100
timeout_s = 30
template.user_open = "<u>"
template.user_close = "</u>\n"
template.assistant_open = "<a>\n"
reference_model = Qwen3-14B
mode.spaced = "<think>\n\n</think> "
mode.scratch = "<think>\n\n</think>\n\n<scratch>\nOkay"
mode.scratch.tag = scratch
)";

}  // namespace

TEST_SUITE("config") {

TEST_CASE("every key parses") {
    const auto c = parse_config(kFull, "/base");
    CHECK(c.endpoint == "http://127.0.0.1:8000");
    CHECK(c.api == ApiKind::chat);
    CHECK(c.dataset == std::filesystem::path("/base/data/problems.jsonl"));
    CHECK(c.effective_dataset_name() == "synth");
    CHECK(c.answer_type == AnswerType::multiple_choice);
    CHECK(c.modes == std::vector<std::string>{"think", "no_think", "mid_think_reason"});
    CHECK(c.budgets == std::vector<double>{0, 0.25, 0.5});
    CHECK(c.sampling.temperature == 0.7);
    CHECK(c.sampling.top_p == 0.9);
    CHECK(c.sampling.max_tokens_think == 4096);
    CHECK(c.sampling.max_tokens_no_think == 512);
    CHECK(c.seed == 42);
    CHECK(c.reuse_first_pass_seed);
    CHECK(c.repeats == 3);
    CHECK(c.concurrency == 2);
    CHECK(c.tokenizer == TokenizerKind::reference_whitespace);
    CHECK(c.output_dir == std::filesystem::path("/base/runs/x"));
    CHECK(c.fixed_token_caps == std::vector<std::size_t>{64, 128});
    CHECK(c.brevity_instruction == "Be brief. ");
    CHECK(c.classify_epsilon == 1.5);
    CHECK(c.retry.max_attempts == 2);
    CHECK(c.retry.total_ceiling.count() == 100);
    CHECK(c.timeout.count() == 30);
    CHECK(c.chat_template.user_close == "</u>\n");
    CHECK(c.reference_model == "Qwen3-14B");
    REQUIRE(c.custom_modes.size() == 2);
    CHECK(c.mode("spaced").assistant_prefix == "<think>\n\n</think> ");
    CHECK(c.mode("scratch").reasoning_tag == std::optional<std::string>("scratch"));
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("defaults") {
    const auto c = parse_config("modes = think\n");
    CHECK(c.sampling.temperature == 0.6);
    CHECK(c.sampling.top_p == 0.95);
    CHECK(c.sampling.max_tokens_think == 32768);
    CHECK(c.sampling.max_tokens_no_think == 8192);
    CHECK_FALSE(c.reuse_first_pass_seed);
    CHECK(c.repeats == 1);
    CHECK(c.classify_epsilon == 0.5);
    CHECK(c.brevity_instruction == kDefaultBrevityInstruction);
    CHECK(c.chat_template == ChatTemplate{});
}

TEST_CASE("render and parse round trip") {
    const auto a = parse_config(kFull, "/base");
    const auto b = parse_config(render_config(a));
    CHECK(render_config(b) == render_config(a));
    CHECK(b.custom_modes == a.custom_modes);
    CHECK(b.brevity_instruction == a.brevity_instruction);
    CHECK(b.chat_template == a.chat_template);
    CHECK(b.dataset == a.dataset);
}

TEST_CASE("errors name the line") {
    auto message_of = [](const std::string& text) {
        try {
            (void)parse_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message_of("modes = think\nbogus = 1\n").find("line 2") != std::string::npos);
    CHECK(message_of("seed = 1\nseed = 2\n").find("duplicate") != std::string::npos);
    CHECK(message_of("temperature = hot\n").find("not a number") != std::string::npos);
    CHECK(message_of("repeats = 1.5\n").find("not an integer") != std::string::npos);
    CHECK(message_of("just words\n").find("key = value") != std::string::npos);
    CHECK(message_of("second_pass_seed = sometimes\n").find("fresh") != std::string::npos);
    CHECK(message_of("mode.x.tag = x\n").find("without") != std::string::npos);
    CHECK_THROWS_AS(parse_config("api = grpc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("tokenizer = sentencepiece\n"), ConfigError);
}

TEST_CASE("validation") {
    auto base = [] { return parse_config("modes = think\n"); };
    CHECK_NOTHROW(base().validate());
    auto c = base();
    c.budgets = {1.2};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = base();
    c.repeats = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = base();
    c.modes = {"nonexistent"};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = base();
    c.modes.clear();
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.fixed_token_caps = {0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.fixed_token_caps = {64};
    CHECK_NOTHROW(c.validate());
    c.sampling.top_p = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("load_config resolves paths against the file's directory") {
    testing_support::TempDir dir;
    testing_support::write_text(dir / "exp.cfg", "modes = think\ndataset = p.jsonl\n");
    const auto c = load_config(dir / "exp.cfg");
    CHECK(c.dataset == dir.path() / "p.jsonl");
    CHECK_THROWS_AS(load_config(dir / "missing.cfg"), ConfigError);
}

}
