#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "midthink/budget_control.hpp"
#include "midthink/config.hpp"
#include "midthink/grading_metrics.hpp"
#include "midthink/inference_client.hpp"
#include "midthink/pareto.hpp"

namespace midthink {

/// JSONL rows of {id, question, answer, type}; `type` is optional and falls
/// back to `default_type`. Throws InputError on a duplicate id, DataError
/// on a malformed row, IoError if the file cannot be read.
std::vector<Problem> load_dataset(const std::filesystem::path& path, AnswerType default_type);

enum class RunKind { mode, budget, fixed_cap, prompt };

std::string_view to_string(RunKind kind);
RunKind run_kind_from_string(std::string_view text);

/// One graded generation, one JSON object per line of judgments.jsonl.
struct Judgment {
    std::string id;
    std::string label;  // mode name, "budget=<b>", "fixed_cap=<k>" or "prompt"
    RunKind kind = RunKind::mode;
    std::string mode;
    std::optional<double> budget;
    std::optional<std::size_t> cap;
    int sample = 0;
    bool correct = false;
    std::size_t completion_tokens = 0;
    std::size_t wait_count = 0;
    FinishReason finish_reason = FinishReason::stop;
    std::string error;
};

std::string judgment_to_jsonl(const Judgment& j);
Judgment judgment_from_jsonl(std::string_view line);

/// Every judgment in file order. A missing file is empty.
std::vector<Judgment> load_judgments(const std::filesystem::path& path);

/// Last record per (label, id, sample) wins, so re-running a setting
/// replaces its earlier judgments.
std::vector<Judgment> latest_judgments(std::span<const Judgment> all);

EvalSummary summarize_judgments(std::span<const Judgment> records, std::string label,
                                std::string dataset);

inline constexpr const char* kJudgmentsFile = "judgments.jsonl";
inline constexpr const char* kTrajectoriesFile = "trajectories.jsonl";
inline constexpr const char* kRunMetaFile = "run_meta.json";
inline constexpr const char* kReportFile = "report.md";
inline constexpr const char* kBudgetCsvFile = "budget_accuracy.csv";
inline constexpr const char* kPointsCsvFile = "length_accuracy.csv";

/// Seeds for every request derive from the config seed and the request's
/// identity, so a run is reproducible against the mock.
std::int64_t derive_seed(std::int64_t base, std::string_view stage, std::string_view id, int sample);

class ExperimentRunner {
public:
    /// Validates the config, creates the output directory and writes
    /// run_meta.json. With a remote tokenizer the endpoint's tokenize route
    /// is probed; if absent the run falls back to the reference tokenizer
    /// and records a warning. `log` receives progress lines when non-null.
    explicit ExperimentRunner(ExperimentConfig config, std::ostream* log = nullptr);
    ~ExperimentRunner();

    const ExperimentConfig& config() const noexcept { return config_; }
    const std::vector<Problem>& problems() const noexcept { return problems_; }
    const Tokenizer& tokenizer() const noexcept { return *tokenizer_; }
    std::filesystem::path run_dir() const { return config_.output_dir; }

    /// Renders, completes, grades and persists one judgment per problem and
    /// sample. Transport failures become incorrect-with-error judgments.
    EvalSummary run_mode_eval(const ModeSpec& mode);

    /// Think first pass (reusing persisted trajectories), then one second
    /// pass per budget. Budget 1 is the first pass itself; budget 0 keeps
    /// no reasoning, which is the No-think prompt.
    BudgetCurve run_budget_sweep();

    /// Fixed-cap runs (Think with max_tokens = cap), then the prompt-based
    /// run (Think with the brevity instruction in front of the query).
    std::vector<EvalSummary> run_baselines();

    /// First-pass requests issued by this runner so far.
    std::size_t first_pass_requests() const noexcept { return first_pass_requests_; }

    /// Requests that failed because the endpoint stayed unreachable after
    /// every retry. Such failures are recorded as error judgments; the CLI
    /// turns a nonzero count into exit code 3.
    std::size_t transport_failures() const noexcept { return transport_failures_; }

private:
    struct Graded {
        GenerationResult result;
        Judgment judgment;
    };

    std::vector<GenerationResult> dispatch(std::span<const GenerationRequest> requests);
    GenerationRequest request_for(const Problem& p, const ModeSpec& mode, std::string_view query,
                                  std::size_t max_tokens, std::int64_t seed) const;
    std::size_t count_tokens(const GenerationResult& r) const;
    EvalSummary run_think_variant(RunKind kind, std::string label, std::optional<std::size_t> cap,
                                  const std::string& query_prefix);
    void persist(std::span<const Judgment> judgments);
    void write_run_meta() const;
    void note(const std::string& line) const;

    ExperimentConfig config_;
    std::ostream* log_;
    InferenceClient client_;
    std::unique_ptr<Tokenizer> tokenizer_;
    std::string tokenizer_warning_;
    std::vector<Problem> problems_;
    std::size_t first_pass_requests_ = 0;
    std::size_t transport_failures_ = 0;
};

/// One prompt per problem in the mode's layout, as JSONL rows of
/// {id, answer, prompt}. Throws ConfigError unless `mode` is built-in,
/// IoError if `path` cannot be written.
void export_rl_dataset(std::span<const Problem> problems, const ModeSpec& mode,
                       const std::filesystem::path& path, const ChatTemplate& tmpl = {});

struct ReportFiles {
    std::filesystem::path report;
    std::filesystem::path budget_csv;
    std::filesystem::path points_csv;
};

/// Reads judgments.jsonl and run_meta.json from `run_dir`, writes the
/// markdown report and two CSV files next to them. Output depends only on
/// those inputs. Throws InputError when there are no judgments.
ReportFiles emit_report(const std::filesystem::path& run_dir);

}  // namespace midthink
