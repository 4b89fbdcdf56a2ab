#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace midthink {

/// Mean attention each prompt position receives from generated tokens,
/// averaged over layers, heads and generated positions, for one mode.
/// Values are raw attention mass, not renormalized over the prompt.
struct AttentionProfile {
    std::string model_id;
    std::string mode;
    std::vector<std::string> prompt_tokens;
    std::vector<double> avg_attention;
    std::size_t generated_len = 1;
    std::size_t layers_averaged = 0;
    std::size_t heads_averaged = 0;
};

/// Throws DataError if sizes differ, a value is outside [0, 1] or
/// generated_len is 0.
void validate_profile(const AttentionProfile& profile);

/// One JSON record per line. Blank lines are skipped; the first invalid
/// row raises ParseError carrying its line number.
std::vector<AttentionProfile> parse_profiles(std::istream& in, const std::string& source = "<stream>");
std::vector<AttentionProfile> load_profiles(const std::filesystem::path& path);

void save_profiles(std::span<const AttentionProfile> profiles, const std::filesystem::path& path);

struct RankedToken {
    std::size_t index = 0;
    std::string token;
    double value = 0.0;
};

/// The k highest-attention prompt tokens, descending; ties keep the lower
/// index first. Throws InputError unless 1 <= k <= prompt length.
std::vector<RankedToken> top_k(const AttentionProfile& profile, std::size_t k);

enum class ExpectedTrigger {
    okay,             // modes that open with "Okay"
    newline_after_think_close,  // the "\n\n" right after </think>
    unknown,
};

std::string_view to_string(ExpectedTrigger trigger);

/// Which token we expect to dominate for a mode name.
ExpectedTrigger expected_trigger(const std::string& mode_name);

struct ModeComparison {
    std::string mode;
    RankedToken top;
    ExpectedTrigger expected = ExpectedTrigger::unknown;
    bool matches_expectation = false;
};

/// True if `index` holds the token `trigger` names within `profile`.
bool is_trigger_token(const AttentionProfile& profile, std::size_t index, ExpectedTrigger trigger);

std::vector<ModeComparison> compare_modes(std::span<const AttentionProfile> profiles);

/// Modes x opening-token matrix for external plotting.
struct Heatmap {
    std::vector<std::string> columns;
    std::vector<std::string> modes;
    std::vector<std::vector<std::optional<double>>> cells;
};

/// Columns are the union of prompt tokens in first-appearance order; the
/// j-th repeat of a token inside a prompt gets its own column ("\n\n#2").
Heatmap build_heatmap(std::span<const AttentionProfile> profiles);

/// Writes a CSV (with '#' metadata lines). Token names use visible escapes.
/// Throws InputError on empty input, IoError on an unwritable path.
void emit_heatmap(std::span<const AttentionProfile> profiles, const std::filesystem::path& path);

Heatmap load_heatmap(const std::filesystem::path& path);

}  // namespace midthink
