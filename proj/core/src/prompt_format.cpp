#include "midthink/prompt_format.hpp"

#include <algorithm>

#include "midthink/error.hpp"

namespace midthink {

namespace {

const std::string kNoThinkPrefix = "<think>\n\n</think>\n\n";
const std::string kResponseCue = "</think>\n\n";

constexpr std::string_view kMidThinkTags[] = {"reason", "begin", "less think"};

ModeSpec make(std::string_view name, std::string prefix, std::optional<std::string> tag,
              std::optional<std::string> opener, std::optional<std::string> closing) {
    return ModeSpec{std::string(name), std::move(prefix), std::move(tag), std::move(opener),
                    std::move(closing)};
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ", ";
        out += s;
    }
    return out;
}

}  // namespace

bool ModeSpec::has_no_think_cue() const {
    return assistant_prefix.find(kResponseCue) != std::string::npos;
}

std::string mid_think_name(std::string_view tag) {
    std::string name = "mid_think_";
    for (char c : tag) name += (c == ' ' || c == '-') ? '_' : c;
    return name;
}

ModeSpec mid_think_mode(std::string_view tag) {
    if (tag.empty()) throw ConfigError("mid_think: reasoning tag must be non-empty");
    std::string t(tag);
    return make(mid_think_name(tag), kNoThinkPrefix + "<" + t + ">\n" + std::string(kOkayCue), t,
                std::string(kOkayCue), "</" + t + ">");
}

ModeSpec raw_mode() { return make(modes::raw, "", std::nullopt, std::nullopt, std::nullopt); }

ModeSpec no_think_t3_mode() {
    return make(modes::no_think_t3, "<think>\n\n</think> ", std::nullopt, std::nullopt,
                std::nullopt);
}

std::vector<ModeSpec> builtin_modes() {
    const std::string okay(kOkayCue);
    std::vector<ModeSpec> out;
    out.push_back(make(modes::no_think, kNoThinkPrefix, std::nullopt, std::nullopt, std::nullopt));
    out.push_back(make(modes::think, "<think>\n" + okay, std::nullopt, okay, "</think>"));
    out.push_back(make(modes::no_think_plus_okay, kNoThinkPrefix + okay, std::nullopt, okay,
                       std::nullopt));
    out.push_back(make(modes::no_tag_plus_okay, "\n\n" + okay, std::nullopt, okay, "</think>"));
    out.push_back(make(modes::reason_plus_okay, "<reason>\n" + okay, "reason", okay, "</reason>"));
    for (auto tag : kMidThinkTags) out.push_back(mid_think_mode(tag));
    return out;
}

std::vector<std::string> known_mode_names() {
    std::vector<std::string> names;
    for (const auto& m : builtin_modes()) names.push_back(m.name);
    names.emplace_back(modes::raw);
    names.emplace_back(modes::no_think_t3);
    names.emplace_back("mid_think");
    return names;
}

ModeSpec find_mode(std::string_view name) { return find_mode(name, {}); }

ModeSpec find_mode(std::string_view name, const std::vector<ModeSpec>& extra) {
    for (const auto& m : extra)
        if (m.name == name) return m;
    if (name == "mid_think") return mid_think_mode("reason");
    if (name == modes::raw) return raw_mode();
    if (name == modes::no_think_t3) return no_think_t3_mode();
    for (auto& m : builtin_modes())
        if (m.name == name) return m;

    auto names = known_mode_names();
    for (const auto& m : extra) names.push_back(m.name);
    throw ConfigError("unknown mode '" + std::string(name) + "'; valid modes: " + join(names));
}

void validate_mode(const ModeSpec& mode) {
    if (mode.name.empty()) throw ConfigError("mode name must be non-empty");
    if (mode.assistant_prefix.empty() && mode.name != modes::raw)
        throw ConfigError("mode '" + mode.name + "': assistant prefix must be non-empty");
    if (mode.reasoning_tag) {
        if (mode.reasoning_tag->empty())
            throw ConfigError("mode '" + mode.name + "': reasoning tag must be non-empty");
        if (mode.assistant_prefix.find("<" + *mode.reasoning_tag + ">") == std::string::npos)
            throw ConfigError("mode '" + mode.name + "': prefix does not contain <" +
                              *mode.reasoning_tag + ">");
    }
}

ModeSpec make_custom_mode(std::string name, std::string assistant_prefix,
                          std::optional<std::string> reasoning_tag) {
    ModeSpec m;
    m.name = std::move(name);
    m.assistant_prefix = std::move(assistant_prefix);
    m.reasoning_tag = std::move(reasoning_tag);
    const std::string okay(kOkayCue);
    if (m.assistant_prefix.size() >= okay.size() &&
        m.assistant_prefix.compare(m.assistant_prefix.size() - okay.size(), okay.size(), okay) == 0)
        m.opener_cue = okay;
    if (m.reasoning_tag)
        m.closing_tag = "</" + *m.reasoning_tag + ">";
    else if (m.opener_cue && !m.has_no_think_cue())
        m.closing_tag = std::string(kThinkClose);
    validate_mode(m);
    return m;
}

std::string render_assistant_prefix(const ModeSpec& mode) {
    validate_mode(mode);
    return mode.assistant_prefix;
}

std::string render_chat_prompt(std::string_view query, const ModeSpec& mode,
                               const ChatTemplate& tmpl) {
    if (query.empty()) throw InputError("render_chat_prompt: query must be non-empty");
    std::string out;
    out.reserve(tmpl.user_open.size() + query.size() + tmpl.user_close.size() +
                tmpl.assistant_open.size() + mode.assistant_prefix.size());
    out += tmpl.user_open;
    out += query;
    out += tmpl.user_close;
    out += tmpl.assistant_open;
    out += render_assistant_prefix(mode);
    return out;
}

std::string unescape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '\\') {
            out += text[i];
            continue;
        }
        if (i + 1 == text.size()) throw ConfigError("dangling backslash in '" + std::string(text) + "'");
        switch (text[++i]) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            case '\\': out += '\\'; break;
            default:
                throw ConfigError(std::string("unknown escape \\") + text[i] + " in '" +
                                  std::string(text) + "'");
        }
    }
    return out;
}

std::string escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            case '\\': out += "\\\\"; break;
            default: out += c;
        }
    }
    return out;
}

const std::vector<ReasoningMarker>& reasoning_markers() {
    static const std::vector<ReasoningMarker> markers = {
        {"<think>", {"DeepSeek", "Qwen3", "OpenR1-Math"}},
        {"</think>", {"DeepSeek", "Qwen3", "OpenR1-Math"}},
        {"Okay", {"DeepSeek", "Qwen3", "OpenR1-Math"}},
    };
    return markers;
}

}  // namespace midthink
