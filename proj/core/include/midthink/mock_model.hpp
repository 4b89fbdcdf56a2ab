#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "midthink/grading_metrics.hpp"

namespace midthink {

/// Knobs of the deterministic test double. Output lengths are in
/// whitespace tokens.
struct MockBehavior {
    std::uint64_t seed = 0;
    std::size_t long_len = 400;   // Think-style completions
    std::size_t short_len = 40;   // No-think completions
    std::size_t mid_len = 200;    // both cues present
    std::size_t waits_per_long = 6;
    /// Second-pass response length is short_len + slope * embedded tokens.
    double second_pass_slope = 0.125;
    /// Think-style length multiplier when the query asks for brevity.
    double brevity_scale = 0.75;
    /// Share of problems that need no reasoning at all (threshold 0).
    double easy_fraction = 0.2;
    /// Remaining thresholds are uniform in [1, threshold_ceiling * long_len].
    double threshold_ceiling = 0.8;

    /// Throws ConfigError unless short_len < mid_len < long_len and
    /// waits_per_long >= 1.
    void validate() const;

    /// Reasoning tokens a problem needs before the mock boxes the right answer.
    std::size_t correctness_threshold(std::string_view problem_id) const;
};

/// 64-bit FNV-1a, hex encoded; used for request-log prompt hashes.
std::string prompt_hash(std::string_view prompt);

/// The gold answer the mock boxes for a problem id.
std::string synthetic_answer(std::string_view problem_id);

/// "p001"... with questions tagged "[problem:<id>]" so the mock can find
/// the id, and gold answers from synthetic_answer.
std::vector<Problem> make_synthetic_problems(std::size_t count, std::uint64_t seed = 0);

/// Which rule of the mock fired.
enum class MockRegime { think, mid, no_think, second_pass };

std::string_view to_string(MockRegime regime);

struct MockCompletion {
    std::string text;
    std::size_t completion_tokens = 0;
    bool truncated = false;
    MockRegime regime = MockRegime::no_think;
    std::size_t embedded_think_tokens = 0;
    bool correct = false;
};

class MockModel {
public:
    explicit MockModel(MockBehavior behavior = {});

    const MockBehavior& behavior() const noexcept { return behavior_; }

    /// Cue detection on the prompt tail:
    ///  - ends in "Okay" with no earlier "</think>\n\n": long reasoning,
    ///    waits_per_long waits, closed, then a boxed answer;
    ///  - ends in "Okay" after "</think>\n\n": mid-length, half the waits;
    ///  - ends in a closing tag + "\n\n" around an empty span: short answer;
    ///  - ends in a closing tag + "\n\n" around k tokens of reasoning: a
    ///    second-pass answer of affine length in k, correct iff k reaches the
    ///    problem's threshold.
    /// Deterministic in (prompt, seed).
    MockCompletion respond(std::string_view prompt, std::optional<std::int64_t> seed = std::nullopt) const;

    /// respond() capped to max_tokens tokens.
    MockCompletion complete(std::string_view prompt, std::size_t max_tokens,
                            std::optional<std::int64_t> seed = std::nullopt) const;

private:
    MockBehavior behavior_;
};

struct MockLogEntry {
    long index = 0;
    std::size_t arrival_order = 0;
    std::string prompt_hash;
};

struct MockServerOptions {
    bool enable_tokenize = true;
    std::size_t threads = 16;
};

/// OpenAI-compatible HTTP front end for MockModel:
///   POST /v1/completions, POST /v1/chat/completions (assistant prefill),
///   POST /tokenize (whitespace rule), GET /log, DELETE /log, GET /health.
/// Model names "mock-fail" (HTTP 503), "mock-bad-json" (unparseable 200)
/// and "mock-flaky" (503 twice per prompt, then success) inject faults.
class MockServer {
public:
    explicit MockServer(MockBehavior behavior = {}, MockServerOptions options = {});
    ~MockServer();
    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    /// Binds and serves on a background thread; port 0 picks a free port.
    /// Throws IoError if the port is taken.
    void start(int port = 0, const std::string& host = "127.0.0.1");
    /// Serves on the calling thread until stop().
    void serve_forever(int port, const std::string& host = "127.0.0.1");
    void stop();

    int port() const noexcept;
    std::string base_url() const;
    std::vector<MockLogEntry> log() const;
    void clear_log();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace midthink
