#include "midthink/grading_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include <boost/multiprecision/cpp_int.hpp>

#include "midthink/error.hpp"

namespace midthink {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

namespace {

bool is_word_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return (u < 0x80 && std::isalnum(u)) || c == '_';
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    if (from.empty()) return;
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Index of the brace matching the '{' at `open`, or npos.
std::size_t matching_brace(std::string_view s, std::size_t open) {
    int depth = 0;
    for (std::size_t i = open; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size() && (s[i + 1] == '{' || s[i + 1] == '}')) {
            ++i;
            continue;
        }
        if (s[i] == '{') ++depth;
        if (s[i] == '}' && --depth == 0) return i;
    }
    return std::string_view::npos;
}

std::optional<std::string> last_boxed(std::string_view text) {
    constexpr std::string_view kBoxed = "\\boxed";
    std::size_t pos = text.rfind(kBoxed);
    while (pos != std::string_view::npos) {
        std::size_t open = pos + kBoxed.size();
        while (open < text.size() && text[open] == ' ') ++open;
        if (open < text.size() && text[open] == '{') {
            const auto close = matching_brace(text, open);
            if (close != std::string_view::npos) return std::string(text.substr(open + 1, close - open - 1));
        }
        if (pos == 0) break;
        pos = text.rfind(kBoxed, pos - 1);
    }
    return std::nullopt;
}

std::optional<std::string> last_number_on_final_line(std::string_view text) {
    std::string t = trim(text);
    const auto nl = t.find_last_of('\n');
    std::string line = nl == std::string::npos ? t : t.substr(nl + 1);
    static const std::regex number(R"(-?\d{1,3}(?:,\d{3})+(?:\.\d+)?|-?\d+(?:\.\d+)?(?:/\d+)?)");
    std::optional<std::string> last;
    for (auto it = std::sregex_iterator(line.begin(), line.end(), number); it != std::sregex_iterator(); ++it)
        last = it->str();
    if (last) replace_all(*last, ",", "");
    return last;
}

std::optional<std::string> last_choice_letter(std::string_view text) {
    const std::size_t tail = 400;
    std::string s(text.size() > tail ? text.substr(text.size() - tail) : text);
    static const std::regex patterns[] = {
        std::regex(R"([Aa]nswer\s*(?:is)?\s*[:：]?\s*\(?([A-J])\)?(?![A-Za-z0-9]))"),
        std::regex(R"(\(([A-J])\))"),
        std::regex(R"((?:^|[^A-Za-z0-9])([A-J])\))"),
        std::regex(R"(\\boxed\{\s*([A-J])\s*\})"),
    };
    std::optional<std::string> best;
    std::ptrdiff_t best_pos = -1;
    for (const auto& re : patterns) {
        for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
            const auto pos = it->position(1);
            if (pos > best_pos) {
                best_pos = pos;
                best = it->str(1);
            }
        }
    }
    return best;
}

// Integer or decimal literal, optionally signed.
std::optional<Rational> parse_decimal(std::string_view s) {
    if (s.empty()) return std::nullopt;
    bool negative = false;
    std::size_t i = 0;
    if (s[0] == '-' || s[0] == '+') {
        negative = s[0] == '-';
        i = 1;
    }
    BigInt numer = 0;
    BigInt denom = 1;
    bool digits = false;
    bool dot = false;
    for (; i < s.size(); ++i) {
        const char c = s[i];
        if (c >= '0' && c <= '9') {
            numer = numer * 10 + (c - '0');
            if (dot) denom *= 10;
            digits = true;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            return std::nullopt;
        }
    }
    if (!digits) return std::nullopt;
    Rational r(numer, denom);
    return negative ? Rational(-r) : r;
}

std::optional<Rational> parse_rational(std::string_view raw) {
    std::string s = normalize_math(raw);
    if (s.empty()) return std::nullopt;
    bool negative = false;
    if (s[0] == '-' && s.size() > 1 && s[1] == '\\') {
        negative = true;
        s.erase(0, 1);
    }
    std::optional<Rational> value;
    if (s.rfind("\\frac", 0) == 0) {
        std::string_view rest = std::string_view(s).substr(5);
        std::string numer;
        std::string denom;
        if (!rest.empty() && rest[0] == '{') {
            const auto c1 = matching_brace(rest, 0);
            if (c1 == std::string_view::npos) return std::nullopt;
            numer = std::string(rest.substr(1, c1 - 1));
            rest = rest.substr(c1 + 1);
        } else if (!rest.empty()) {
            numer = std::string(1, rest[0]);  // \frac12
            rest = rest.substr(1);
        }
        if (!rest.empty() && rest[0] == '{') {
            const auto c2 = matching_brace(rest, 0);
            if (c2 == std::string_view::npos || c2 + 1 != rest.size()) return std::nullopt;
            denom = std::string(rest.substr(1, c2 - 1));
        } else if (rest.size() == 1) {
            denom = std::string(rest);
        } else {
            return std::nullopt;
        }
        const auto n = parse_decimal(numer);
        const auto d = parse_decimal(denom);
        if (!n || !d || *d == 0) return std::nullopt;
        value = *n / *d;
    } else if (const auto slash = s.find('/'); slash != std::string::npos) {
        const auto n = parse_decimal(std::string_view(s).substr(0, slash));
        const auto d = parse_decimal(std::string_view(s).substr(slash + 1));
        if (!n || !d || *d == 0) return std::nullopt;
        value = *n / *d;
    } else {
        value = parse_decimal(s);
    }
    if (value && negative) *value = -*value;
    return value;
}

// Replaces \cmd{X} by X for the given command.
void unwrap_command(std::string& s, std::string_view cmd) {
    std::size_t pos = 0;
    while ((pos = s.find(cmd, pos)) != std::string::npos) {
        const std::size_t open = pos + cmd.size();
        if (open >= s.size() || s[open] != '{') {
            pos = open;
            continue;
        }
        const auto close = matching_brace(s, open);
        if (close == std::string::npos) return;
        s.erase(close, 1);
        s.erase(pos, open + 1 - pos);
    }
}

}  // namespace

std::string_view to_string(AnswerType type) {
    return type == AnswerType::math ? "math" : "multiple_choice";
}

AnswerType answer_type_from_string(std::string_view text) {
    if (text == "math") return AnswerType::math;
    if (text == "multiple_choice" || text == "mcq" || text == "mc") return AnswerType::multiple_choice;
    throw ConfigError("unknown answer type '" + std::string(text) +
                      "'; expected 'math' or 'multiple_choice'");
}

std::optional<std::string> extract_answer(std::string_view text, AnswerType type) {
    if (type == AnswerType::multiple_choice) return last_choice_letter(text);
    if (auto boxed = last_boxed(text)) return boxed;
    return last_number_on_final_line(text);
}

std::string normalize_math(std::string_view answer) {
    std::string s = trim(answer);
    unwrap_command(s, "\\text");
    unwrap_command(s, "\\mathrm");
    unwrap_command(s, "\\mbox");
    for (std::string_view drop : {"\\left", "\\right", "\\!", "\\,", "\\;", "\\:", "\\qquad", "\\quad",
                                  "\\ ", "^{\\circ}", "^\\circ", "\\circ", "\\%", "%", "\\$", "$", "\\displaystyle"})
        replace_all(s, drop, "");
    replace_all(s, "\\dfrac", "\\frac");
    replace_all(s, "\\tfrac", "\\frac");
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    while (!s.empty() && s.back() == '.') s.pop_back();
    static const std::regex thousands(R"(-?\d{1,3}(?:,\d{3})+(?:\.\d+)?)");
    if (std::regex_match(s, thousands)) replace_all(s, ",", "");
    while (s.size() >= 2 && s.front() == '{' && matching_brace(s, 0) == s.size() - 1)
        s = s.substr(1, s.size() - 2);
    return s;
}

std::optional<std::string> canonical_rational(std::string_view answer) {
    const auto r = parse_rational(answer);
    if (!r) return std::nullopt;
    const BigInt n = boost::multiprecision::numerator(*r);
    const BigInt d = boost::multiprecision::denominator(*r);
    return d == 1 ? n.str() : n.str() + "/" + d.str();
}

bool grade(const std::optional<std::string>& candidate, std::string_view gold, AnswerType type) {
    if (!candidate) return false;
    if (type == AnswerType::multiple_choice) {
        const auto c = trim(*candidate);
        const auto g = trim(gold);
        return c.size() == 1 && g.size() == 1 && lower(c[0]) == lower(g[0]);
    }
    const auto a = normalize_math(*candidate);
    const auto b = normalize_math(gold);
    if (a.empty() || b.empty()) return false;
    if (a == b) return true;
    const auto ra = parse_rational(a);
    const auto rb = parse_rational(b);
    return ra && rb && *ra == *rb;
}

std::size_t count_word(std::string_view text, std::string_view word) {
    if (word.empty() || text.size() < word.size()) return 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i + word.size() <= text.size(); ++i) {
        if (i > 0 && is_word_char(text[i - 1])) continue;
        bool match = true;
        for (std::size_t k = 0; k < word.size(); ++k) {
            if (lower(text[i + k]) != lower(word[k])) {
                match = false;
                break;
            }
        }
        if (!match) continue;
        const std::size_t end = i + word.size();
        if (end < text.size() && is_word_char(text[end])) continue;
        ++count;
        i = end - 1;
    }
    return count;
}

std::size_t count_wait(std::string_view text) { return count_word(text, "wait"); }

const std::vector<std::string>& extended_cue_words() {
    static const std::vector<std::string> words = {"alternatively", "hmm"};
    return words;
}

std::vector<std::pair<std::string, std::size_t>> count_extended_cues(std::string_view text) {
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& w : extended_cue_words()) out.emplace_back(w, count_word(text, w));
    return out;
}

EvalSummary summarize(std::span<const GradedRecord> records, std::string mode, std::string dataset) {
    if (records.empty()) throw InputError("summarize: no records");
    EvalSummary s;
    s.mode = std::move(mode);
    s.dataset = std::move(dataset);
    s.sample_count = records.size();
    std::size_t total_len = 0;
    for (const auto& r : records) {
        s.correct += r.correct ? 1 : 0;
        s.errors += r.result.finish_reason == FinishReason::error ? 1 : 0;
        total_len += r.result.completion_tokens;
        s.wait_total += count_wait(r.result.text);
    }
    s.accuracy = 100.0 * static_cast<double>(s.correct) / static_cast<double>(s.sample_count);
    s.avg_len = static_cast<double>(total_len) / static_cast<double>(s.sample_count);
    return s;
}

}  // namespace midthink
