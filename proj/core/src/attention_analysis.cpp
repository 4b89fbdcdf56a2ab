#include "midthink/attention_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "midthink/error.hpp"
#include "midthink/prompt_format.hpp"

namespace midthink {

using json = nlohmann::json;

namespace {

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

// Strips whitespace and byte-level BPE space markers.
std::string bare_token(const std::string& token) {
    std::string t = token;
    for (std::string_view marker : {"\xC4\xA0", "\xE2\x96\x81"})  // "Ġ", "▁"
        if (t.rfind(marker, 0) == 0) t.erase(0, marker.size());
    const auto b = t.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = t.find_last_not_of(" \t\r\n");
    return t.substr(b, e - b + 1);
}

bool is_newline_token(const std::string& token) {
    if (token.empty()) return false;
    std::string_view t = token;
    std::size_t newlines = 0;
    while (!t.empty()) {
        if (t[0] == '\n') {
            ++newlines;
            t.remove_prefix(1);
        } else if (t.rfind("\xC4\x8A", 0) == 0) {  // "Ċ"
            ++newlines;
            t.remove_prefix(2);
        } else {
            return false;
        }
    }
    return newlines >= 1;
}

AttentionProfile profile_from_json(const json& j) {
    AttentionProfile p;
    p.model_id = j.at("model_id").get<std::string>();
    p.mode = j.at("mode").get<std::string>();
    p.prompt_tokens = j.at("prompt_tokens").get<std::vector<std::string>>();
    p.avg_attention = j.at("avg_attention").get<std::vector<double>>();
    p.generated_len = j.at("generated_len").get<std::size_t>();
    p.layers_averaged = j.value("layers_averaged", std::size_t{0});
    p.heads_averaged = j.value("heads_averaged", std::size_t{0});
    return p;
}

}  // namespace

void validate_profile(const AttentionProfile& p) {
    if (p.avg_attention.size() != p.prompt_tokens.size())
        throw DataError("profile '" + p.mode + "': " + std::to_string(p.avg_attention.size()) +
                        " attention values for " + std::to_string(p.prompt_tokens.size()) + " tokens");
    if (p.generated_len < 1) throw DataError("profile '" + p.mode + "': generated_len must be >= 1");
    for (std::size_t i = 0; i < p.avg_attention.size(); ++i) {
        const double v = p.avg_attention[i];
        if (!(v >= 0.0 && v <= 1.0))
            throw DataError("profile '" + p.mode + "': attention value " + format_value(v) +
                            " at position " + std::to_string(i) + " outside [0, 1]");
    }
}

std::vector<AttentionProfile> parse_profiles(std::istream& in, const std::string& source) {
    std::vector<AttentionProfile> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto p = profile_from_json(json::parse(line));
            validate_profile(p);
            out.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw ParseError(source + ":" + std::to_string(lineno) + ": " + e.what(), lineno);
        } catch (const DataError& e) {
            throw ParseError(source + ":" + std::to_string(lineno) + ": " + e.what(), lineno);
        }
    }
    return out;
}

std::vector<AttentionProfile> load_profiles(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open attention dump " + path.string());
    return parse_profiles(in, path.string());
}

void save_profiles(std::span<const AttentionProfile> profiles, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& p : profiles) {
        json j = {
            {"model_id", p.model_id},
            {"mode", p.mode},
            {"prompt_tokens", p.prompt_tokens},
            {"avg_attention", p.avg_attention},
            {"generated_len", p.generated_len},
            {"layers_averaged", p.layers_averaged},
            {"heads_averaged", p.heads_averaged},
        };
        out << j.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<RankedToken> top_k(const AttentionProfile& profile, std::size_t k) {
    const std::size_t n = profile.prompt_tokens.size();
    if (k < 1 || k > n)
        throw InputError("top_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return profile.avg_attention[a] > profile.avg_attention[b];
    });
    std::vector<RankedToken> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
        out.push_back({order[i], profile.prompt_tokens[order[i]], profile.avg_attention[order[i]]});
    return out;
}

std::string_view to_string(ExpectedTrigger trigger) {
    switch (trigger) {
        case ExpectedTrigger::okay: return "Okay";
        case ExpectedTrigger::newline_after_think_close: return "\\n\\n after </think>";
        case ExpectedTrigger::unknown: return "unknown";
    }
    return "unknown";
}

ExpectedTrigger expected_trigger(const std::string& mode_name) {
    ModeSpec mode;
    try {
        mode = find_mode(mode_name);
    } catch (const ConfigError&) {
        return ExpectedTrigger::unknown;
    }
    if (mode.opener_cue) return ExpectedTrigger::okay;
    if (mode.has_no_think_cue()) return ExpectedTrigger::newline_after_think_close;
    return ExpectedTrigger::unknown;
}

bool is_trigger_token(const AttentionProfile& profile, std::size_t index, ExpectedTrigger trigger) {
    if (index >= profile.prompt_tokens.size()) return false;
    const auto& token = profile.prompt_tokens[index];
    switch (trigger) {
        case ExpectedTrigger::okay:
            return bare_token(token) == kOkayCue;
        case ExpectedTrigger::newline_after_think_close: {
            if (index == 0 || !is_newline_token(token)) return false;
            const auto prev = bare_token(profile.prompt_tokens[index - 1]);
            return prev.size() >= kThinkClose.size() &&
                   prev.compare(prev.size() - kThinkClose.size(), kThinkClose.size(), kThinkClose) == 0;
        }
        case ExpectedTrigger::unknown:
            break;
    }
    return false;
}

std::vector<ModeComparison> compare_modes(std::span<const AttentionProfile> profiles) {
    std::vector<ModeComparison> rows;
    for (const auto& p : profiles) {
        ModeComparison row;
        row.mode = p.mode;
        if (!p.prompt_tokens.empty()) row.top = top_k(p, 1).front();
        row.expected = expected_trigger(p.mode);
        row.matches_expectation = !p.prompt_tokens.empty() && is_trigger_token(p, row.top.index, row.expected);
        rows.push_back(std::move(row));
    }
    return rows;
}

Heatmap build_heatmap(std::span<const AttentionProfile> profiles) {
    Heatmap h;
    std::map<std::string, std::size_t> column_of;
    std::vector<std::vector<std::pair<std::size_t, double>>> row_entries;
    for (const auto& p : profiles) {
        std::map<std::string, std::size_t> seen;
        std::vector<std::pair<std::size_t, double>> entries;
        for (std::size_t i = 0; i < p.prompt_tokens.size(); ++i) {
            const auto occurrence = ++seen[p.prompt_tokens[i]];
            std::string key = escape(p.prompt_tokens[i]);
            if (occurrence > 1) key += "#" + std::to_string(occurrence);
            auto [it, inserted] = column_of.emplace(key, h.columns.size());
            if (inserted) h.columns.push_back(key);
            entries.emplace_back(it->second, p.avg_attention[i]);
        }
        h.modes.push_back(p.mode);
        row_entries.push_back(std::move(entries));
    }
    for (const auto& entries : row_entries) {
        std::vector<std::optional<double>> row(h.columns.size());
        for (auto [col, v] : entries) row[col] = v;
        h.cells.push_back(std::move(row));
    }
    return h;
}

void emit_heatmap(std::span<const AttentionProfile> profiles, const std::filesystem::path& path) {
    if (profiles.empty()) throw InputError("emit_heatmap: no profiles");
    const Heatmap h = build_heatmap(profiles);
    std::ostringstream os;
    os << "# midthink attention heatmap\n";
    os << "# values: raw mean attention mass per prompt position, not renormalized over the prompt\n";
    os << "# averaging: uniform over layers, heads and generated positions\n";
    os << "mode";
    for (const auto& c : h.columns) os << ',' << csv_field(c);
    os << '\n';
    for (std::size_t r = 0; r < h.modes.size(); ++r) {
        os << csv_field(h.modes[r]);
        for (const auto& cell : h.cells[r]) {
            os << ',';
            if (cell) os << format_value(*cell);
        }
        os << '\n';
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write heatmap " + path.string());
    out << os.str();
    if (!out) throw IoError("write failed: " + path.string());
}

Heatmap load_heatmap(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open heatmap " + path.string());
    Heatmap h;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_csv(line);
        if (!header) {
            h.columns.assign(fields.begin() + 1, fields.end());
            header = true;
            continue;
        }
        if (fields.size() != h.columns.size() + 1)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": wrong field count", lineno);
        h.modes.push_back(fields[0]);
        std::vector<std::optional<double>> row;
        for (std::size_t i = 1; i < fields.size(); ++i) {
            if (fields[i].empty()) {
                row.emplace_back();
                continue;
            }
            try {
                row.emplace_back(std::stod(fields[i]));
            } catch (const std::exception&) {
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad value '" +
                                     fields[i] + "'",
                                 lineno);
            }
        }
        h.cells.push_back(std::move(row));
    }
    return h;
}

}  // namespace midthink
