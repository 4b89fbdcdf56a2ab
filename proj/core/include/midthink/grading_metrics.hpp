#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "midthink/inference_client.hpp"

namespace midthink {

enum class AnswerType { math, multiple_choice };

std::string_view to_string(AnswerType type);
/// Accepts "math", "multiple_choice", "mcq", "mc". Throws ConfigError.
AnswerType answer_type_from_string(std::string_view text);

struct Problem {
    std::string id;
    std::string question;
    std::string gold_answer;
    AnswerType answer_type = AnswerType::math;
};

/// Accuracy in percent, mean completion tokens, dataset-level wait total.
struct EvalSummary {
    std::string mode;
    std::string dataset;
    double accuracy = 0.0;
    double avg_len = 0.0;
    std::size_t wait_total = 0;
    std::size_t sample_count = 0;
    std::size_t correct = 0;
    std::size_t errors = 0;
};

/// math: contents of the last balanced \boxed{...}; otherwise the last
/// number on the final non-empty line.
/// multiple_choice: the last of "Answer: X", "(X)", "X)" or \boxed{X}
/// (X in A-J) within the final 400 characters.
std::optional<std::string> extract_answer(std::string_view text, AnswerType type);

/// Strips math markup that does not change the value: whitespace, $,
/// \left/\right, spacing commands, \dfrac/\tfrac, \text{} wrappers,
/// degree marks, a trailing period and redundant outer braces.
std::string normalize_math(std::string_view answer);

/// Exact rational value of an integer, decimal, a/b or \frac{a}{b} form,
/// rendered canonically as "p/q" (q > 0, lowest terms) or "p".
std::optional<std::string> canonical_rational(std::string_view answer);

/// math: normalized string equality, else exact rational equality.
/// multiple_choice: case-insensitive letter equality. No candidate is wrong.
bool grade(const std::optional<std::string>& candidate, std::string_view gold, AnswerType type);

/// Case-insensitive whole-word occurrences of `word`; word characters are
/// ASCII letters, digits and '_'.
std::size_t count_word(std::string_view text, std::string_view word);

/// Whole-word "wait" count.
std::size_t count_wait(std::string_view text);

/// Other self-reflection cues, reported separately from the wait count.
const std::vector<std::string>& extended_cue_words();
std::vector<std::pair<std::string, std::size_t>> count_extended_cues(std::string_view text);

struct GradedRecord {
    Problem problem;
    GenerationResult result;
    bool correct = false;
};

/// Throws InputError on an empty record list. The wait total is taken over
/// each result's full text.
EvalSummary summarize(std::span<const GradedRecord> records, std::string mode = {},
                      std::string dataset = {});

}  // namespace midthink
