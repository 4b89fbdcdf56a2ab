#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace midthink {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kOkayCue = "Okay";

/// A named assistant-prefix recipe built out of trigger tokens.
///
/// `assistant_prefix` is appended verbatim after the assistant turn marker.
/// `reasoning_tag`, when set, names the tag that delimits the reasoning span
/// (`<reason>` ... `</reason>`); otherwise a reasoning span, if any, is
/// closed by `</think>`.
struct ModeSpec {
    std::string name;
    std::string assistant_prefix;
    std::optional<std::string> reasoning_tag;
    std::optional<std::string> opener_cue;
    std::optional<std::string> closing_tag;

    bool operator==(const ModeSpec&) const = default;

    /// True when generation under this mode starts inside a reasoning span
    /// that the model is expected to close (Think, Mid-Think, tag + Okay).
    bool opens_reasoning_span() const { return opener_cue.has_value() && closing_tag.has_value(); }

    /// True when the prefix carries the `</think>\n\n` response cue.
    bool has_no_think_cue() const;
};

/// Turn markers wrapped around the user query and in front of the assistant
/// prefix. Defaults are the ChatML markers written without separators.
struct ChatTemplate {
    std::string user_open = "<|im_start|>user";
    std::string user_close = "<|im_end|>";
    std::string assistant_open = "<|im_start|>assistant";

    bool operator==(const ChatTemplate&) const = default;
};

// Built-in mode names.
namespace modes {
inline constexpr std::string_view raw = "raw";
inline constexpr std::string_view no_think = "no_think";
inline constexpr std::string_view think = "think";
inline constexpr std::string_view no_think_plus_okay = "no_think_plus_okay";
inline constexpr std::string_view no_tag_plus_okay = "no_tag_plus_okay";
inline constexpr std::string_view reason_plus_okay = "reason_plus_okay";
inline constexpr std::string_view no_think_t3 = "no_think_t3";
}  // namespace modes

/// The five single-cue modes plus the three Mid-Think tag variants.
std::vector<ModeSpec> builtin_modes();

/// Empty-prefix passthrough: the model continues straight after the
/// assistant marker.
ModeSpec raw_mode();

/// `<think>\n\n</think>` followed by a single space, the typography used in
/// the three-mode prompt table. Kept for A/B runs against `no_think`.
ModeSpec no_think_t3_mode();

/// Mid-Think: the No-think closing cue followed by a fresh `<tag>` opened
/// with "Okay". The built-in variants use "reason", "begin" and "less think".
ModeSpec mid_think_mode(std::string_view tag);

/// Name used for a Mid-Think variant, e.g. "less think" -> "mid_think_less_think".
std::string mid_think_name(std::string_view tag);

/// Resolves a mode by name among the built-ins, `raw`, `no_think_t3` and the
/// alias `mid_think` (= `<reason>` variant). Throws ConfigError listing the
/// valid names.
ModeSpec find_mode(std::string_view name);

/// Like find_mode but also searches `extra` first (custom modes from config).
ModeSpec find_mode(std::string_view name, const std::vector<ModeSpec>& extra);

/// All names find_mode accepts, in a stable order.
std::vector<std::string> known_mode_names();

/// Builds a custom mode. Only a non-empty name and prefix are required; a
/// reasoning tag must appear as `<tag>` in the prefix. Throws ConfigError.
ModeSpec make_custom_mode(std::string name, std::string assistant_prefix,
                          std::optional<std::string> reasoning_tag = std::nullopt);

/// Throws ConfigError if `mode` breaks a ModeSpec invariant.
void validate_mode(const ModeSpec& mode);

std::string render_assistant_prefix(const ModeSpec& mode);

/// user_open + query + user_close + assistant_open + prefix.
/// Throws InputError on an empty query.
std::string render_chat_prompt(std::string_view query, const ModeSpec& mode,
                               const ChatTemplate& tmpl = {});

/// Decodes the config-file escapes `\n`, `\t`, `\r`, `\\`. Throws
/// ConfigError on a dangling backslash or an unknown escape.
std::string unescape(std::string_view text);

/// Inverse of unescape.
std::string escape(std::string_view text);

/// Reasoning markers observed in model outputs and training corpora.
struct ReasoningMarker {
    std::string token;
    std::vector<std::string> seen_in;
};
const std::vector<ReasoningMarker>& reasoning_markers();

}  // namespace midthink
