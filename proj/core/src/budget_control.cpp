#include "midthink/budget_control.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "midthink/error.hpp"

namespace midthink {

using json = nlohmann::json;

BudgetSpec::BudgetSpec(double ratio) : ratio_(ratio) {
    if (!(ratio >= 0.0 && ratio <= 1.0))
        throw InputError("budget ratio must lie in [0, 1], got " + std::to_string(ratio));
}

std::size_t BudgetSpec::kept_tokens(std::size_t n) const noexcept {
    const long double x = static_cast<long double>(ratio_) * static_cast<long double>(n);
    // 1e-9 relative slack absorbs rounding of ratios like 0.29 or 0.05 * k.
    const long double slack = 1e-9L * (x > 1.0L ? x : 1.0L);
    auto kept = static_cast<std::size_t>(std::floor(x + slack));
    return kept > n ? n : kept;
}

SplitOutput split_trajectory(std::string_view raw_output, const ModeSpec& mode) {
    SplitOutput out;
    if (!mode.opens_reasoning_span()) {
        out.response_text = std::string(raw_output);
        return out;
    }
    const std::string& marker = *mode.closing_tag;
    const auto pos = raw_output.find(marker);
    if (pos == std::string_view::npos) {
        out.think_text = std::string(raw_output);
        out.unterminated = true;
        return out;
    }
    out.think_text = std::string(raw_output.substr(0, pos));
    auto rest = raw_output.substr(pos + marker.size());
    const auto first = rest.find_first_not_of(" \t\r\n");
    out.response_text = first == std::string_view::npos ? std::string() : std::string(rest.substr(first));
    return out;
}

std::string reasoning_output(const ModeSpec& mode, std::string_view completion) {
    std::string out = mode.opener_cue.value_or("");
    out += completion;
    return out;
}

Trajectory make_trajectory(std::string problem_id, const ModeSpec& mode, std::string prompt,
                           std::string_view completion, const Tokenizer& tokenizer) {
    auto split = split_trajectory(reasoning_output(mode, completion), mode);
    Trajectory t;
    t.problem_id = std::move(problem_id);
    t.mode = mode.name;
    t.prompt = std::move(prompt);
    t.think_tokens = tokenizer.encode(split.think_text);
    t.think_text = std::move(split.think_text);
    t.response_text = std::move(split.response_text);
    t.unterminated = split.unterminated;
    return t;
}

TokenSeq truncate_think(std::span<const Token> think_tokens, const BudgetSpec& budget) {
    const auto kept = budget.kept_tokens(think_tokens.size());
    return TokenSeq(think_tokens.begin(), think_tokens.begin() + static_cast<std::ptrdiff_t>(kept));
}

TokenSeq truncate_think(const Trajectory& trajectory, const BudgetSpec& budget) {
    return truncate_think(std::span<const Token>(trajectory.think_tokens), budget);
}

std::string reasoning_open_marker(const ModeSpec& mode) {
    if (!mode.opens_reasoning_span())
        throw ConfigError("mode '" + mode.name + "' does not open a reasoning span");
    const auto& prefix = mode.assistant_prefix;
    const auto& cue = *mode.opener_cue;
    if (prefix.size() < cue.size() || prefix.compare(prefix.size() - cue.size(), cue.size(), cue) != 0)
        throw ConfigError("mode '" + mode.name + "': prefix does not end with its opener cue");
    return prefix.substr(0, prefix.size() - cue.size());
}

std::string reasoning_close_marker(const ModeSpec& mode) {
    if (mode.reasoning_tag) return "\n</" + *mode.reasoning_tag + ">\n\n";
    return "\n" + std::string(kThinkClose) + "\n\n";
}

std::string build_second_pass_prompt(std::string_view query, std::span<const Token> truncated_think,
                                     const ModeSpec& mode, const ChatTemplate& tmpl,
                                     const Tokenizer& tokenizer) {
    std::string out = render_chat_prompt(query, raw_mode(), tmpl);
    out += reasoning_open_marker(mode);
    out += tokenizer.decode(truncated_think);
    out += reasoning_close_marker(mode);
    return out;
}

std::string trajectory_to_jsonl(const Trajectory& t) {
    json j = {
        {"problem_id", t.problem_id},
        {"mode", t.mode},
        {"sample", t.sample},
        {"think_text", t.think_text},
        {"response_text", t.response_text},
        {"n", t.n()},
        {"unterminated", t.unterminated},
        {"completion_tokens", t.completion_tokens},
        {"finish_reason", t.finish_reason},
        {"prompt", t.prompt},
    };
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

Trajectory trajectory_from_jsonl(std::string_view line, const Tokenizer& tokenizer) {
    Trajectory t;
    std::size_t n = 0;
    try {
        const auto j = json::parse(line);
        t.problem_id = j.at("problem_id").get<std::string>();
        t.mode = j.at("mode").get<std::string>();
        t.sample = j.value("sample", 0);
        t.think_text = j.at("think_text").get<std::string>();
        t.response_text = j.at("response_text").get<std::string>();
        t.unterminated = j.at("unterminated").get<bool>();
        t.completion_tokens = j.value("completion_tokens", std::size_t{0});
        t.finish_reason = j.value("finish_reason", std::string());
        t.prompt = j.value("prompt", std::string());
        n = j.at("n").get<std::size_t>();
    } catch (const json::exception& e) {
        throw DataError(std::string("bad trajectory record: ") + e.what());
    }
    t.think_tokens = tokenizer.encode(t.think_text);
    if (t.think_tokens.size() != n)
        throw DataError("trajectory " + t.problem_id + ": stored n=" + std::to_string(n) +
                        " but " + tokenizer.name() + " gives " +
                        std::to_string(t.think_tokens.size()) + " tokens");
    return t;
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path,
                                          const Tokenizer& tokenizer) {
    std::vector<Trajectory> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(trajectory_from_jsonl(line, tokenizer));
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void append_trajectories(const std::filesystem::path& path, std::span<const Trajectory> items) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for append");
    for (const auto& t : items) out << trajectory_to_jsonl(t) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace midthink
