#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "midthink/grading_metrics.hpp"
#include "midthink/inference_client.hpp"
#include "midthink/prompt_format.hpp"
#include "midthink/tokenizer.hpp"

namespace midthink {

inline constexpr std::string_view kDefaultBrevityInstruction =
    "Think briefly and keep your reasoning as short as possible while preserving accuracy.";

struct SamplingParams {
    double temperature = 0.6;
    double top_p = 0.95;
    std::size_t max_tokens_think = 32768;
    std::size_t max_tokens_no_think = 8192;
};

/// Everything one experiment needs. Loaded from a flat `key = value` file;
/// see README for the key list. Prefix strings take `\n` escapes.
struct ExperimentConfig {
    std::string endpoint;
    std::string model;
    ApiKind api = ApiKind::completions;
    std::filesystem::path dataset;
    std::string dataset_name;  // defaults to the dataset file stem
    AnswerType answer_type = AnswerType::math;
    std::vector<std::string> modes;
    std::vector<double> budgets;
    SamplingParams sampling;
    std::int64_t seed = 0;
    /// false: every second pass draws a fresh seed derived from `seed`.
    bool reuse_first_pass_seed = false;
    std::size_t repeats = 1;
    std::size_t concurrency = 8;
    TokenizerKind tokenizer = TokenizerKind::reference_whitespace;
    std::filesystem::path output_dir = "runs/default";
    std::vector<std::size_t> fixed_token_caps;
    std::string brevity_instruction = std::string(kDefaultBrevityInstruction);
    double classify_epsilon = 0.5;
    RetryPolicy retry;
    std::chrono::seconds timeout{600};
    ChatTemplate chat_template;
    std::vector<ModeSpec> custom_modes;
    /// Model name used to look up published numbers for comparison.
    std::string reference_model;

    /// Throws ConfigError: budgets in [0, 1], repeats/concurrency >= 1,
    /// at least one mode, budget or baseline requested, known modes.
    void validate() const;

    ModeSpec mode(std::string_view name) const { return find_mode(name, custom_modes); }
    std::string effective_dataset_name() const;
};

/// Relative paths resolve against `base_dir`. Throws ConfigError naming
/// the offending line.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config (paths are written as stored).
std::string render_config(const ExperimentConfig& config);

}  // namespace midthink
