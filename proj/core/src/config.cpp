#include "midthink/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "midthink/error.hpp"

namespace midthink {

namespace {

std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

// Prefix-like values may be wrapped in double quotes to keep edge spaces.
std::string text_value(std::string_view v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
    return unescape(v);
}

std::string quote_escaped(std::string_view v) { return "\"" + escape(v) + "\""; }

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    while (!s.empty()) {
        const auto comma = s.find(',');
        const auto item = trim(s.substr(0, comma));
        if (!item.empty()) out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

class LineContext {
public:
    LineContext(std::size_t line, std::string key) : line_(line), key_(std::move(key)) {}

    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError("config line " + std::to_string(line_) + " (" + key_ + "): " + why);
    }

    double number(std::string_view v) const {
        double out = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size()) fail("not a number: '" + std::string(v) + "'");
        return out;
    }

    template <typename Int>
    Int integer(std::string_view v) const {
        Int out = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size()) fail("not an integer: '" + std::string(v) + "'");
        return out;
    }

private:
    std::size_t line_;
    std::string key_;
};

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view value) {
    std::filesystem::path p{std::string(value)};
    if (p.is_relative() && !base.empty()) return base / p;
    return p;
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::string ExperimentConfig::effective_dataset_name() const {
    if (!dataset_name.empty()) return dataset_name;
    return dataset.stem().string();
}

void ExperimentConfig::validate() const {
    for (double b : budgets)
        if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("budget " + fmt_double(b) + " is outside [0, 1]");
    if (repeats < 1) throw ConfigError("repeats must be at least 1");
    if (concurrency < 1) throw ConfigError("concurrency must be at least 1");
    if (modes.empty() && budgets.empty() && fixed_token_caps.empty())
        throw ConfigError("nothing to run: set at least one of modes, budgets or fixed_token_caps");
    for (const auto& m : modes) (void)mode(m);
    for (auto cap : fixed_token_caps)
        if (cap == 0) throw ConfigError("fixed_token_caps entries must be positive");
    if (!(sampling.temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (!(sampling.top_p > 0.0 && sampling.top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
    if (sampling.max_tokens_think == 0 || sampling.max_tokens_no_think == 0)
        throw ConfigError("max_tokens values must be positive");
    if (!(classify_epsilon >= 0.0)) throw ConfigError("classify_epsilon must be >= 0");
    if (retry.max_attempts < 1) throw ConfigError("retry_attempts must be at least 1");
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    // mode.<name> prefixes and mode.<name>.tag values, collected then built.
    std::map<std::string, std::pair<std::string, std::optional<std::string>>> custom;
    std::vector<std::string> custom_order;

    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key{trim(line.substr(0, eq))};
        const auto value = trim(line.substr(eq + 1));
        const LineContext ctx(line_no, key);
        if (key.empty()) ctx.fail("empty key");
        if (!seen.insert(key).second) ctx.fail("duplicate key");

        if (key.starts_with("mode.")) {
            auto rest = key.substr(5);
            const bool is_tag = rest.ends_with(".tag");
            if (is_tag) rest.resize(rest.size() - 4);
            if (rest.empty()) ctx.fail("missing mode name");
            if (!custom.contains(rest)) custom_order.push_back(rest);
            auto& slot = custom[rest];
            if (is_tag)
                slot.second = std::string(value);
            else
                slot.first = text_value(value);
            continue;
        }

        if (key == "endpoint") cfg.endpoint = value;
        else if (key == "model") cfg.model = value;
        else if (key == "api") cfg.api = api_kind_from_string(value);
        else if (key == "dataset") cfg.dataset = resolve(base_dir, value);
        else if (key == "dataset_name") cfg.dataset_name = value;
        else if (key == "answer_type") cfg.answer_type = answer_type_from_string(value);
        else if (key == "modes") cfg.modes = split_list(value);
        else if (key == "budgets") {
            for (const auto& item : split_list(value)) cfg.budgets.push_back(ctx.number(item));
        } else if (key == "temperature") cfg.sampling.temperature = ctx.number(value);
        else if (key == "top_p") cfg.sampling.top_p = ctx.number(value);
        else if (key == "max_tokens_think") cfg.sampling.max_tokens_think = ctx.integer<std::size_t>(value);
        else if (key == "max_tokens_no_think") cfg.sampling.max_tokens_no_think = ctx.integer<std::size_t>(value);
        else if (key == "seed") cfg.seed = ctx.integer<std::int64_t>(value);
        else if (key == "second_pass_seed") {
            if (value == "fresh") cfg.reuse_first_pass_seed = false;
            else if (value == "reuse") cfg.reuse_first_pass_seed = true;
            else ctx.fail("expected 'fresh' or 'reuse'");
        } else if (key == "repeats") cfg.repeats = ctx.integer<std::size_t>(value);
        else if (key == "concurrency") cfg.concurrency = ctx.integer<std::size_t>(value);
        else if (key == "tokenizer") cfg.tokenizer = tokenizer_kind_from_string(value);
        else if (key == "output_dir") cfg.output_dir = resolve(base_dir, value);
        else if (key == "fixed_token_caps") {
            for (const auto& item : split_list(value)) cfg.fixed_token_caps.push_back(ctx.integer<std::size_t>(item));
        } else if (key == "brevity_instruction") cfg.brevity_instruction = text_value(value);
        else if (key == "classify_epsilon") cfg.classify_epsilon = ctx.number(value);
        else if (key == "retry_attempts") cfg.retry.max_attempts = ctx.integer<int>(value);
        else if (key == "retry_base_ms") cfg.retry.base_delay = std::chrono::milliseconds(ctx.integer<long>(value));
        else if (key == "retry_max_ms") cfg.retry.max_delay = std::chrono::milliseconds(ctx.integer<long>(value));
        else if (key == "retry_ceiling_ms") cfg.retry.total_ceiling = std::chrono::milliseconds(ctx.integer<long>(value));
        else if (key == "timeout_s") cfg.timeout = std::chrono::seconds(ctx.integer<long>(value));
        else if (key == "template.user_open") cfg.chat_template.user_open = text_value(value);
        else if (key == "template.user_close") cfg.chat_template.user_close = text_value(value);
        else if (key == "template.assistant_open") cfg.chat_template.assistant_open = text_value(value);
        else if (key == "reference_model") cfg.reference_model = value;
        else ctx.fail("unknown key");
    }

    for (const auto& name : custom_order) {
        const auto& [prefix, tag] = custom.at(name);
        if (prefix.empty() && name != modes::raw)
            throw ConfigError("mode." + name + ".tag given without mode." + name + " prefix");
        cfg.custom_modes.push_back(make_custom_mode(name, prefix, tag));
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

std::string render_config(const ExperimentConfig& c) {
    std::ostringstream os;
    const auto join = [](const auto& items, auto to_text) {
        std::string s;
        for (const auto& it : items) {
            if (!s.empty()) s += ", ";
            s += to_text(it);
        }
        return s;
    };
    os << "endpoint = " << c.endpoint << '\n';
    os << "model = " << c.model << '\n';
    os << "api = " << to_string(c.api) << '\n';
    os << "dataset = " << c.dataset.generic_string() << '\n';
    if (!c.dataset_name.empty()) os << "dataset_name = " << c.dataset_name << '\n';
    os << "answer_type = " << to_string(c.answer_type) << '\n';
    if (!c.modes.empty()) os << "modes = " << join(c.modes, [](const std::string& s) { return s; }) << '\n';
    if (!c.budgets.empty()) os << "budgets = " << join(c.budgets, fmt_double) << '\n';
    os << "temperature = " << fmt_double(c.sampling.temperature) << '\n';
    os << "top_p = " << fmt_double(c.sampling.top_p) << '\n';
    os << "max_tokens_think = " << c.sampling.max_tokens_think << '\n';
    os << "max_tokens_no_think = " << c.sampling.max_tokens_no_think << '\n';
    os << "seed = " << c.seed << '\n';
    os << "second_pass_seed = " << (c.reuse_first_pass_seed ? "reuse" : "fresh") << '\n';
    os << "repeats = " << c.repeats << '\n';
    os << "concurrency = " << c.concurrency << '\n';
    os << "tokenizer = " << to_string(c.tokenizer) << '\n';
    os << "output_dir = " << c.output_dir.generic_string() << '\n';
    if (!c.fixed_token_caps.empty())
        os << "fixed_token_caps = " << join(c.fixed_token_caps, [](std::size_t v) { return std::to_string(v); })
           << '\n';
    os << "brevity_instruction = " << quote_escaped(c.brevity_instruction) << '\n';
    os << "classify_epsilon = " << fmt_double(c.classify_epsilon) << '\n';
    os << "retry_attempts = " << c.retry.max_attempts << '\n';
    os << "retry_base_ms = " << c.retry.base_delay.count() << '\n';
    os << "retry_max_ms = " << c.retry.max_delay.count() << '\n';
    os << "retry_ceiling_ms = " << c.retry.total_ceiling.count() << '\n';
    os << "timeout_s = " << c.timeout.count() << '\n';
    os << "template.user_open = " << quote_escaped(c.chat_template.user_open) << '\n';
    os << "template.user_close = " << quote_escaped(c.chat_template.user_close) << '\n';
    os << "template.assistant_open = " << quote_escaped(c.chat_template.assistant_open) << '\n';
    if (!c.reference_model.empty()) os << "reference_model = " << c.reference_model << '\n';
    for (const auto& m : c.custom_modes) {
        os << "mode." << m.name << " = " << quote_escaped(m.assistant_prefix) << '\n';
        if (m.reasoning_tag) os << "mode." << m.name << ".tag = " << *m.reasoning_tag << '\n';
    }
    return os.str();
}

}  // namespace midthink
