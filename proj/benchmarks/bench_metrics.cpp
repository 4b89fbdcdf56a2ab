#include <benchmark/benchmark.h>

#include <random>

#include "midthink/budget_control.hpp"
#include "midthink/grading_metrics.hpp"
#include "midthink/pareto.hpp"
#include "midthink/tokenizer.hpp"

using namespace midthink;

namespace {

// Reasoning-like text: short words, punctuation, a "Wait," every ~50 words.
std::string reasoning_text(std::size_t words, std::uint32_t seed) {
    static const char* vocab[] = {"so", "the", "sum", "is", "then", "we", "check", "x", "=", "2,", "step", "Okay."};
    std::mt19937 rng(seed);
    std::string out = "Okay";
    for (std::size_t i = 0; i < words; ++i) {
        out += (rng() % 17 == 0) ? "\n" : " ";
        out += (rng() % 50 == 0) ? "Wait," : vocab[rng() % std::size(vocab)];
    }
    return out + "\n</think>\n\nThe answer is \\boxed{\\frac{7}{12}}.";
}

void BM_CountWait(benchmark::State& state) {
    const auto text = reasoning_text(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(count_wait(text));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_CountWait)->Arg(1000)->Arg(30000);

void BM_ParetoFrontier(benchmark::State& state) {
    std::mt19937 rng(2);
    std::vector<ParetoPoint> pts;
    for (std::int64_t i = 0; i < state.range(0); ++i)
        pts.push_back({"p" + std::to_string(i), static_cast<double>(rng() % 20000), static_cast<double>(rng() % 1000) / 10});
    for (auto _ : state) benchmark::DoNotOptimize(pareto_frontier(pts));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ParetoFrontier)->RangeMultiplier(8)->Range(8, 32768)->Complexity(benchmark::oNLogN);

void BM_WhitespaceEncode(benchmark::State& state) {
    const WhitespaceTokenizer tok;
    const auto text = reasoning_text(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(tok.encode(text));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_WhitespaceEncode)->Arg(1000)->Arg(30000);

void BM_TruncateAndDecode(benchmark::State& state) {
    const WhitespaceTokenizer tok;
    const auto tokens = tok.encode(reasoning_text(30000, 4));
    const BudgetSpec budget(0.5);
    for (auto _ : state) {
        const auto kept = truncate_think(tokens, budget);
        benchmark::DoNotOptimize(tok.decode(kept));
    }
}
BENCHMARK(BM_TruncateAndDecode);

void BM_ExtractAndGrade(benchmark::State& state) {
    const auto text = reasoning_text(static_cast<std::size_t>(state.range(0)), 5);
    for (auto _ : state) {
        const auto answer = extract_answer(text, AnswerType::math);
        benchmark::DoNotOptimize(grade(answer, "7/12", AnswerType::math));
    }
}
BENCHMARK(BM_ExtractAndGrade)->Arg(1000)->Arg(30000);

}  // namespace

BENCHMARK_MAIN();
