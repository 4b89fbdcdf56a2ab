#include <regex>
#include <set>
#include <sstream>

#include "doctest.h"
#include "midthink/budget_control.hpp"
#include "midthink/error.hpp"
#include "midthink/experiment_runner.hpp"
#include "midthink/mock_model.hpp"
#include "test_support.hpp"

using namespace midthink;
using testing_support::read_text;
using testing_support::TempDir;
using testing_support::write_text;

namespace {

ExperimentConfig mock_config(const testing_support::RunningMock& mock, const TempDir& dir, std::size_t problems = 8) {
    testing_support::write_problems(dir / "problems.jsonl", make_synthetic_problems(problems));
    ExperimentConfig c;
    c.endpoint = mock.server.base_url();
    c.model = "mock";
    c.dataset = dir / "problems.jsonl";
    c.dataset_name = "synth";
    c.output_dir = dir / "run";
    c.concurrency = 4;
    c.seed = 11;
    c.retry.max_attempts = 2;
    c.retry.base_delay = std::chrono::milliseconds(5);
    c.retry.total_ceiling = std::chrono::milliseconds(20);
    return c;
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("load_dataset reads ids, answers and types") {
    TempDir dir;
    write_text(dir / "d.jsonl",
               "{\"id\": 1, \"question\": \"q1\", \"answer\": 42}\n"
               "\n"
               "{\"id\": \"b\", \"question\": \"q2\", \"answer\": \"C\", \"type\": \"mcq\"}\n"
               "{\"id\": \"c\", \"question\": \"q3\", \"answer\": \"1/2\", \"type\": null}\n");
    const auto ps = load_dataset(dir / "d.jsonl", AnswerType::math);
    REQUIRE(ps.size() == 3);
    CHECK(ps[0].id == "1");
    CHECK(ps[0].gold_answer == "42");
    CHECK(ps[1].answer_type == AnswerType::multiple_choice);
    CHECK(ps[2].answer_type == AnswerType::math);
}

TEST_CASE("load_dataset rejects malformed input") {
    TempDir dir;
    write_text(dir / "dup.jsonl", "{\"id\":\"a\",\"question\":\"q\",\"answer\":\"1\"}\n"
                                  "{\"id\":\"a\",\"question\":\"q\",\"answer\":\"2\"}\n");
    CHECK_THROWS_AS(load_dataset(dir / "dup.jsonl", AnswerType::math), InputError);

    write_text(dir / "bad.jsonl", "{\"id\":\"a\",\"question\":\"q\",\"answer\":\"1\"}\n{not json\n");
    try {
        (void)load_dataset(dir / "bad.jsonl", AnswerType::math);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    write_text(dir / "missing.jsonl", "{\"id\":\"a\",\"answer\":\"1\"}\n");
    CHECK_THROWS_AS(load_dataset(dir / "missing.jsonl", AnswerType::math), ParseError);
    write_text(dir / "type.jsonl", "{\"id\":\"a\",\"question\":\"q\",\"answer\":\"1\",\"type\":\"essay\"}\n");
    CHECK_THROWS_AS(load_dataset(dir / "type.jsonl", AnswerType::math), ParseError);
    CHECK_THROWS_AS(load_dataset(dir / "nope.jsonl", AnswerType::math), IoError);
}

TEST_CASE("judgment records round trip and the latest record wins") {
    Judgment a;
    a.id = "p1";
    a.label = "budget=0.5";
    a.kind = RunKind::budget;
    a.mode = "think";
    a.budget = 0.5;
    a.correct = true;
    a.completion_tokens = 120;
    a.wait_count = 2;
    const auto back = judgment_from_jsonl(judgment_to_jsonl(a));
    CHECK(back.label == a.label);
    CHECK(back.budget == a.budget);
    CHECK_FALSE(back.cap.has_value());
    CHECK(back.completion_tokens == 120);
    CHECK(judgment_to_jsonl(a).find("error") == std::string::npos);
    CHECK_THROWS_AS(judgment_from_jsonl("{\"id\": 3}"), DataError);

    auto b = a;
    b.correct = false;
    const std::vector<Judgment> all = {a, b};
    const auto latest = latest_judgments(all);
    REQUIRE(latest.size() == 1);
    CHECK_FALSE(latest[0].correct);
}

TEST_CASE("derive_seed is stable and separates stages") {
    CHECK(derive_seed(1, "first-pass", "p1", 0) == derive_seed(1, "first-pass", "p1", 0));
    CHECK(derive_seed(1, "first-pass", "p1", 0) != derive_seed(1, "first-pass", "p1", 1));
    CHECK(derive_seed(1, "first-pass", "p1", 0) != derive_seed(1, "eval:think", "p1", 0));
    CHECK(derive_seed(1, "first-pass", "p1", 0) != derive_seed(2, "first-pass", "p1", 0));
    CHECK(derive_seed(9, "x", "y", 3) >= 0);
}

TEST_CASE("mode eval orders think above Mid-Think above no_think in waits") {
    testing_support::RunningMock mock;
    TempDir dir;
    auto cfg = mock_config(mock, dir);
    cfg.modes = {"think", "mid_think_reason", "no_think"};
    ExperimentRunner runner(cfg);
    const auto think = runner.run_mode_eval(cfg.mode("think"));
    const auto mid = runner.run_mode_eval(cfg.mode("mid_think_reason"));
    const auto none = runner.run_mode_eval(cfg.mode("no_think"));
    CHECK(think.wait_total == 6 * 8);
    CHECK(mid.wait_total == 3 * 8);
    CHECK(none.wait_total == 0);
    CHECK(think.avg_len > mid.avg_len);
    CHECK(mid.avg_len > none.avg_len);
    CHECK(think.sample_count == 8);
    CHECK(count_lines(read_text(cfg.output_dir / kJudgmentsFile)) == 24);
}

TEST_CASE("budget sweep grows length with budget and shares the first pass") {
    testing_support::RunningMock mock;
    TempDir dir;
    auto cfg = mock_config(mock, dir, 10);
    cfg.budgets = {1.0, 0.0, 0.5};
    ExperimentRunner runner(cfg);
    const auto curve = runner.run_budget_sweep();
    REQUIRE(curve.size() == 3);
    CHECK(curve.points()[0].budget == 0.0);
    CHECK(curve.points()[0].summary.avg_len < curve.points()[1].summary.avg_len);
    CHECK(curve.points()[1].summary.avg_len < curve.points()[2].summary.avg_len);
    CHECK(curve.points()[0].summary.accuracy <= curve.points()[1].summary.accuracy);
    CHECK(curve.points()[1].summary.accuracy <= curve.points()[2].summary.accuracy);
    CHECK(curve.points()[2].summary.avg_len == doctest::Approx(400));
    CHECK(runner.first_pass_requests() == 10);
    // Budget 1 reuses the first pass, so 10 first passes plus two second-pass sets.
    CHECK(mock.server.log().size() == 30);

    // A second sweep over the same directory reuses persisted trajectories.
    ExperimentRunner again(cfg);
    mock.server.clear_log();
    (void)again.run_budget_sweep();
    CHECK(again.first_pass_requests() == 0);
    CHECK(mock.server.log().size() == 20);
}

TEST_CASE("budget 0 alone needs no first pass and matches no_think") {
    testing_support::RunningMock mock;
    TempDir dir;
    auto cfg = mock_config(mock, dir);
    cfg.budgets = {0.0};
    cfg.modes = {"no_think"};
    ExperimentRunner runner(cfg);
    const auto curve = runner.run_budget_sweep();
    CHECK(runner.first_pass_requests() == 0);
    const auto none = runner.run_mode_eval(cfg.mode("no_think"));
    CHECK(curve.points()[0].summary.avg_len == none.avg_len);
    // Same prompt bytes for both.
    const auto log = mock.server.log();
    REQUIRE(log.size() == 16);
    std::multiset<std::string> a, b;
    for (std::size_t i = 0; i < 8; ++i) a.insert(log[i].prompt_hash);
    for (std::size_t i = 8; i < 16; ++i) b.insert(log[i].prompt_hash);
    CHECK(a == b);
}

TEST_CASE("an interior budget with seed reuse costs one first and one second pass per problem") {
    testing_support::RunningMock mock;
    TempDir dir;
    auto cfg = mock_config(mock, dir, 4);
    cfg.budgets = {0.3};
    cfg.reuse_first_pass_seed = true;
    ExperimentRunner runner(cfg);
    (void)runner.run_budget_sweep();
    CHECK(runner.first_pass_requests() == 4);
    CHECK(mock.server.log().size() == 8);
}

TEST_CASE("fixed caps bound every generation") {
    testing_support::RunningMock mock;
    TempDir dir;
    auto cfg = mock_config(mock, dir);
    cfg.fixed_token_caps = {64};
    ExperimentRunner runner(cfg);
    const auto out = runner.run_baselines();
    REQUIRE(out.size() == 2);
    CHECK(out[0].mode == "fixed_cap=64");
    CHECK(out[0].avg_len == 64);
    CHECK(out[1].mode == "prompt");
    CHECK(out[1].avg_len < 400);
    for (const auto& j : load_judgments(cfg.output_dir / kJudgmentsFile)) {
        if (j.kind != RunKind::fixed_cap) continue;
        CHECK(j.completion_tokens <= 64);
        CHECK(j.finish_reason == FinishReason::length);
        CHECK(j.cap == std::optional<std::size_t>(64));
    }
}

TEST_CASE("transport failures become error judgments") {
    testing_support::RunningMock mock;
    TempDir dir;
    auto cfg = mock_config(mock, dir, 3);
    cfg.model = "mock-fail";
    cfg.modes = {"think"};
    ExperimentRunner runner(cfg);
    const auto s = runner.run_mode_eval(cfg.mode("think"));
    CHECK(s.errors == 3);
    CHECK(s.correct == 0);
    for (const auto& j : load_judgments(cfg.output_dir / kJudgmentsFile)) {
        CHECK_FALSE(j.error.empty());
        CHECK(j.finish_reason == FinishReason::error);
    }
}

TEST_CASE("export writes one prompt per problem") {
    TempDir dir;
    const auto problems = make_synthetic_problems(5);
    export_rl_dataset(problems, find_mode("mid_think_reason"), dir / "rl.jsonl");
    const auto text = read_text(dir / "rl.jsonl");
    CHECK(count_lines(text) == 5);
    CHECK(text.back() == '\n');
    CHECK(text.find('\r') == std::string::npos);
    std::istringstream in(text);
    std::string first;
    std::getline(in, first);
    const auto row = nlohmann::json::parse(first);
    CHECK(row["id"] == "p001");
    CHECK(row["prompt"] == render_chat_prompt(problems[0].question, find_mode("mid_think_reason")));

    export_rl_dataset({}, find_mode("think"), dir / "empty.jsonl");
    CHECK(std::filesystem::exists(dir / "empty.jsonl"));
    CHECK(read_text(dir / "empty.jsonl").empty());

    auto changed = find_mode("think");
    changed.assistant_prefix += " ";
    CHECK_THROWS_AS(export_rl_dataset(problems, changed, dir / "x.jsonl"), ConfigError);
}

TEST_CASE("report is deterministic and carries provenance and classifications") {
    testing_support::RunningMock mock;
    TempDir dir;
    auto cfg = mock_config(mock, dir);
    cfg.modes = {"think", "no_think", "mid_think_reason", "mid_think_begin", "mid_think_less_think"};
    cfg.budgets = {0.0, 0.5, 1.0};
    cfg.fixed_token_caps = {64};
    ExperimentRunner runner(cfg);
    for (const auto& m : cfg.modes) (void)runner.run_mode_eval(cfg.mode(m));
    (void)runner.run_budget_sweep();
    (void)runner.run_baselines();

    const auto files = emit_report(cfg.output_dir);
    const auto first = read_text(files.report);
    const auto again = emit_report(cfg.output_dir);
    CHECK(read_text(again.report) == first);

    CHECK(first.find("- model: mock") != std::string::npos);
    CHECK(first.find("- dataset: synth (8 problems") != std::string::npos);
    CHECK(first.find("temperature 0.6, top_p 0.95") != std::string::npos);
    CHECK(first.find("second-pass seed policy: fresh") != std::string::npos);
    CHECK(first.find("kept reasoning tokens") != std::string::npos);
    CHECK(first.find(mock.server.base_url()) == std::string::npos);

    for (const auto* tag : {"reason", "begin", "less_think"}) {
        const std::regex line("\\n- mid_think_" + std::string(tag) + ": (beyond|on|below) \\(");
        std::ptrdiff_t n = std::distance(std::sregex_iterator(first.begin(), first.end(), line), std::sregex_iterator());
        CHECK_MESSAGE(n == 1, tag);
    }
    // Budget rows come first, in budget order.
    const auto b0 = first.find("| budget=0 |");
    const auto b5 = first.find("| budget=0.5 |");
    const auto b1 = first.find("| budget=1 |");
    const auto think_row = first.find("| think |");
    CHECK(b0 < b5);
    CHECK(b5 < b1);
    CHECK(b1 < think_row);
    CHECK(first.find("| fixed_cap=64 |") > think_row);

    const auto budget_csv = read_text(files.budget_csv);
    CHECK(budget_csv.starts_with("budget,accuracy,avg_len,wait_total,samples\n"));
    CHECK(count_lines(budget_csv) == 4);
    CHECK(count_lines(read_text(files.points_csv)) == 1 + 3 + 5 + 2);
}

TEST_CASE("report on a run without judgments is an InputError") {
    TempDir dir;
    CHECK_THROWS_AS(emit_report(dir.path()), InputError);
}

TEST_CASE("a missing tokenize route falls back with a recorded warning") {
    MockServerOptions opts;
    opts.enable_tokenize = false;
    testing_support::RunningMock mock({}, opts);
    TempDir dir;
    auto cfg = mock_config(mock, dir);
    cfg.modes = {"no_think"};
    cfg.tokenizer = TokenizerKind::remote_endpoint;
    ExperimentRunner runner(cfg);
    CHECK(runner.tokenizer().kind() == TokenizerKind::reference_whitespace);
    const auto meta = nlohmann::json::parse(read_text(cfg.output_dir / kRunMetaFile));
    REQUIRE(meta.contains("tokenizer_warning"));
    CHECK(meta["tokenizer_requested"] == "remote");
    (void)runner.run_mode_eval(cfg.mode("no_think"));
    CHECK(read_text(emit_report(cfg.output_dir).report).find("tokenizer warning") != std::string::npos);
}

TEST_CASE("the remote tokenizer is used when the route exists") {
    testing_support::RunningMock mock;
    TempDir dir;
    auto cfg = mock_config(mock, dir);
    cfg.modes = {"no_think"};
    cfg.tokenizer = TokenizerKind::remote_endpoint;
    ExperimentRunner runner(cfg);
    CHECK(runner.tokenizer().kind() == TokenizerKind::remote_endpoint);
}

TEST_CASE("runner configuration errors") {
    testing_support::RunningMock mock;
    TempDir dir;
    auto cfg = mock_config(mock, dir);
    cfg.modes = {"think"};
    auto no_endpoint = cfg;
    no_endpoint.endpoint.clear();
    CHECK_THROWS_AS(ExperimentRunner{no_endpoint}, ConfigError);
    write_text(dir / "empty.jsonl", "");
    auto empty = cfg;
    empty.dataset = dir / "empty.jsonl";
    CHECK_THROWS_AS(ExperimentRunner{empty}, DataError);
    ExperimentRunner runner(cfg);
    CHECK_THROWS_AS(runner.run_budget_sweep(), ConfigError);
}

}
