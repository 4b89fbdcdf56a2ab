#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "midthink/prompt_format.hpp"
#include "midthink/tokenizer.hpp"

namespace midthink {

/// Fraction of the full reasoning span kept in the second pass.
/// 0 is No-think, 1 is full Think.
class BudgetSpec {
public:
    /// Throws InputError unless 0 <= ratio <= 1.
    explicit BudgetSpec(double ratio);

    double ratio() const noexcept { return ratio_; }

    /// floor(ratio * n), robust to the binary representation of decimal
    /// ratios (0.29 * 100 keeps 29 tokens, not 28).
    std::size_t kept_tokens(std::size_t n) const noexcept;

private:
    double ratio_;
};

struct SplitOutput {
    std::string think_text;
    std::string response_text;
    bool unterminated = false;
};

/// One problem's first-pass output, split into its reasoning span and the
/// final response.
struct Trajectory {
    std::string problem_id;
    std::string mode;
    int sample = 0;
    std::string prompt;
    std::string think_text;
    TokenSeq think_tokens;
    std::string response_text;
    bool unterminated = false;
    std::size_t completion_tokens = 0;
    std::string finish_reason;

    std::size_t n() const noexcept { return think_tokens.size(); }
};

/// Splits `raw_output`, which starts at the reasoning span (opener cue
/// included), at the first closing marker of `mode` (`</think>` or
/// `</tag>`). Leading whitespace of the response is dropped. Without a
/// closing marker the whole output is reasoning and `unterminated` is set.
/// Modes that do not open a reasoning span yield an empty think_text.
SplitOutput split_trajectory(std::string_view raw_output, const ModeSpec& mode);

/// The server returns only what follows the assistant prefix; the
/// reasoning span starts at the prefix's opener cue, so prepend it.
std::string reasoning_output(const ModeSpec& mode, std::string_view completion);

/// Builds a Trajectory from a first-pass completion.
Trajectory make_trajectory(std::string problem_id, const ModeSpec& mode, std::string prompt,
                           std::string_view completion, const Tokenizer& tokenizer);

/// The first floor(ratio * n) think tokens.
TokenSeq truncate_think(std::span<const Token> think_tokens, const BudgetSpec& budget);
TokenSeq truncate_think(const Trajectory& trajectory, const BudgetSpec& budget);

/// Prefix part of `mode` in front of the opener cue, e.g. "<think>\n".
/// Throws ConfigError if the mode does not open a reasoning span.
std::string reasoning_open_marker(const ModeSpec& mode);

/// Forced close appended after truncated reasoning: "\n</think>\n\n", or
/// "\n</tag>\n\n" for tagged modes.
std::string reasoning_close_marker(const ModeSpec& mode);

/// Second-pass prompt: chat prompt with an empty assistant prefix, then the
/// open marker, the decoded kept reasoning, and the forced close. With an
/// empty prefix under Think this equals the No-think prompt byte for byte.
std::string build_second_pass_prompt(std::string_view query, std::span<const Token> truncated_think,
                                     const ModeSpec& mode, const ChatTemplate& tmpl,
                                     const Tokenizer& tokenizer);

/// One JSON record per line: problem_id, mode, sample, think_text,
/// response_text, n, unterminated, completion_tokens, finish_reason, prompt.
std::string trajectory_to_jsonl(const Trajectory& t);

/// Parses one record and re-tokenizes think_text. Throws DataError if the
/// record is malformed or `n` disagrees with the active tokenizer.
Trajectory trajectory_from_jsonl(std::string_view line, const Tokenizer& tokenizer);

/// Reads every record of a trajectory file; a missing file is empty.
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path,
                                          const Tokenizer& tokenizer);

void append_trajectories(const std::filesystem::path& path, std::span<const Trajectory> items);

}  // namespace midthink
