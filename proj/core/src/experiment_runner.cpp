#include "midthink/experiment_runner.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "midthink/error.hpp"
#include "midthink/reference_data.hpp"

namespace midthink {

using nlohmann::json;

namespace {

std::string budget_label(double b) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "budget=%g", b);
    return buf;
}

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string shortest(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number_float()) return shortest(v.get<double>());
    throw DataError("expected a string or number, got " + v.dump());
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

bool think_family(const ModeSpec& mode) {
    return mode.opener_cue.has_value() || mode.name == modes::raw;
}

int kind_rank(RunKind k) {
    switch (k) {
        case RunKind::budget: return 0;
        case RunKind::mode: return 1;
        case RunKind::fixed_cap: return 2;
        case RunKind::prompt: return 3;
    }
    return 4;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::vector<Problem> load_dataset(const std::filesystem::path& path, AnswerType default_type) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset " + path.string());
    std::vector<Problem> out;
    std::set<std::string> ids;
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = path.string() + ":" + std::to_string(lineno) + ": ";
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(where + "invalid JSON: " + e.what(), lineno);
        }
        if (!row.is_object()) throw ParseError(where + "expected an object", lineno);
        for (const char* field : {"id", "question", "answer"})
            if (!row.contains(field)) throw ParseError(where + "missing field '" + field + "'", lineno);
        Problem p;
        try {
            p.id = scalar_text(row["id"]);
            p.gold_answer = scalar_text(row["answer"]);
        } catch (const DataError& e) {
            throw ParseError(where + e.what(), lineno);
        }
        if (!row["question"].is_string() || row["question"].get<std::string>().empty())
            throw ParseError(where + "question must be a non-empty string", lineno);
        p.question = row["question"].get<std::string>();
        p.answer_type = default_type;
        if (row.contains("type") && !row["type"].is_null()) {
            if (!row["type"].is_string()) throw ParseError(where + "type must be a string", lineno);
            try {
                p.answer_type = answer_type_from_string(row["type"].get<std::string>());
            } catch (const ConfigError& e) {
                throw ParseError(where + e.what(), lineno);
            }
        }
        if (p.id.empty()) throw ParseError(where + "empty id", lineno);
        if (!ids.insert(p.id).second) throw InputError("duplicate problem id '" + p.id + "' in " + path.string());
        out.push_back(std::move(p));
    }
    return out;
}

std::string_view to_string(RunKind kind) {
    switch (kind) {
        case RunKind::mode: return "mode";
        case RunKind::budget: return "budget";
        case RunKind::fixed_cap: return "fixed_cap";
        case RunKind::prompt: return "prompt";
    }
    return "mode";
}

RunKind run_kind_from_string(std::string_view text) {
    if (text == "mode") return RunKind::mode;
    if (text == "budget") return RunKind::budget;
    if (text == "fixed_cap") return RunKind::fixed_cap;
    if (text == "prompt") return RunKind::prompt;
    throw DataError("unknown run kind '" + std::string(text) + "'");
}

std::string judgment_to_jsonl(const Judgment& j) {
    json o;
    o["id"] = j.id;
    o["label"] = j.label;
    o["kind"] = std::string(to_string(j.kind));
    o["mode"] = j.mode;
    o["budget"] = j.budget ? json(*j.budget) : json(nullptr);
    o["cap"] = j.cap ? json(*j.cap) : json(nullptr);
    o["sample"] = j.sample;
    o["correct"] = j.correct;
    o["completion_tokens"] = j.completion_tokens;
    o["wait_count"] = j.wait_count;
    o["finish_reason"] = std::string(to_string(j.finish_reason));
    if (!j.error.empty()) o["error"] = j.error;
    return o.dump();
}

Judgment judgment_from_jsonl(std::string_view line) {
    try {
        const auto o = json::parse(line);
        Judgment j;
        j.id = o.at("id").get<std::string>();
        j.label = o.at("label").get<std::string>();
        j.kind = run_kind_from_string(o.at("kind").get<std::string>());
        j.mode = o.at("mode").get<std::string>();
        if (!o.at("budget").is_null()) j.budget = o.at("budget").get<double>();
        if (!o.at("cap").is_null()) j.cap = o.at("cap").get<std::size_t>();
        j.sample = o.at("sample").get<int>();
        j.correct = o.at("correct").get<bool>();
        j.completion_tokens = o.at("completion_tokens").get<std::size_t>();
        j.wait_count = o.at("wait_count").get<std::size_t>();
        j.finish_reason = finish_reason_from_string(o.at("finish_reason").get<std::string>());
        if (o.contains("error")) j.error = o["error"].get<std::string>();
        return j;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed judgment record: ") + e.what());
    }
}

std::vector<Judgment> load_judgments(const std::filesystem::path& path) {
    std::vector<Judgment> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(judgment_from_jsonl(line));
        } catch (const Error& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what(), lineno);
        }
    }
    return out;
}

std::vector<Judgment> latest_judgments(std::span<const Judgment> all) {
    std::map<std::tuple<std::string, std::string, int>, std::size_t> last;
    for (std::size_t i = 0; i < all.size(); ++i) last[{all[i].label, all[i].id, all[i].sample}] = i;
    std::vector<std::size_t> keep;
    keep.reserve(last.size());
    for (const auto& [key, idx] : last) keep.push_back(idx);
    std::sort(keep.begin(), keep.end());
    std::vector<Judgment> out;
    out.reserve(keep.size());
    for (auto idx : keep) out.push_back(all[idx]);
    return out;
}

EvalSummary summarize_judgments(std::span<const Judgment> records, std::string label, std::string dataset) {
    if (records.empty()) throw InputError("summarize: no judgments for '" + label + "'");
    EvalSummary s;
    s.mode = std::move(label);
    s.dataset = std::move(dataset);
    s.sample_count = records.size();
    std::size_t total_len = 0;
    for (const auto& j : records) {
        s.correct += j.correct ? 1 : 0;
        s.errors += j.finish_reason == FinishReason::error ? 1 : 0;
        total_len += j.completion_tokens;
        s.wait_total += j.wait_count;
    }
    s.accuracy = 100.0 * static_cast<double>(s.correct) / static_cast<double>(s.sample_count);
    s.avg_len = static_cast<double>(total_len) / static_cast<double>(s.sample_count);
    return s;
}

std::int64_t derive_seed(std::int64_t base, std::string_view stage, std::string_view id, int sample) {
    std::uint64_t h = fnv1a(std::to_string(base), 1469598103934665603ULL);
    h = fnv1a("|", h);
    h = fnv1a(stage, h);
    h = fnv1a("|", h);
    h = fnv1a(id, h);
    h = fnv1a("|" + std::to_string(sample), h);
    return static_cast<std::int64_t>(h & 0x7fffffffULL);
}

// ---------------------------------------------------------------------------

ExperimentRunner::ExperimentRunner(ExperimentConfig config, std::ostream* log)
    : config_(std::move(config)),
      log_(log),
      client_(
          [this] {
              if (config_.endpoint.empty()) throw ConfigError("endpoint is required");
              Endpoint e;
              e.base_url = config_.endpoint;
              e.api = config_.api;
              e.timeout = config_.timeout;
              return e;
          }(),
          config_.retry) {
    config_.validate();
    if (config_.dataset.empty()) throw ConfigError("dataset is required");

    std::error_code ec;
    std::filesystem::create_directories(config_.output_dir, ec);
    if (ec) throw IoError("cannot create output directory " + config_.output_dir.string() + ": " + ec.message());

    if (config_.tokenizer == TokenizerKind::remote_endpoint) {
        auto remote = std::make_unique<RemoteTokenizer>(client_, config_.model);
        try {
            (void)remote->encode("probe");
            tokenizer_ = std::move(remote);
        } catch (const CapabilityError& e) {
            tokenizer_warning_ = std::string(e.what()) +
                                 "; token counts fall back to the reference whitespace tokenizer";
            note("warning: " + tokenizer_warning_);
        }
    }
    if (!tokenizer_) tokenizer_ = std::make_unique<WhitespaceTokenizer>();

    problems_ = load_dataset(config_.dataset, config_.answer_type);
    if (problems_.empty()) throw DataError("dataset " + config_.dataset.string() + " has no problems");
    write_run_meta();
}

ExperimentRunner::~ExperimentRunner() = default;

void ExperimentRunner::note(const std::string& line) const {
    if (log_) *log_ << line << '\n' << std::flush;
}

void ExperimentRunner::write_run_meta() const {
    json m;
    m["model"] = config_.model;
    m["dataset"] = config_.effective_dataset_name();
    m["problems"] = problems_.size();
    m["api"] = std::string(to_string(config_.api));
    m["tokenizer"] = std::string(to_string(tokenizer_->kind()));
    m["tokenizer_name"] = tokenizer_->kind() == TokenizerKind::reference_whitespace
                              ? tokenizer_->name()
                              : std::string("remote:") + config_.model;
    m["tokenizer_requested"] = std::string(to_string(config_.tokenizer));
    if (!tokenizer_warning_.empty()) m["tokenizer_warning"] = tokenizer_warning_;
    m["temperature"] = config_.sampling.temperature;
    m["top_p"] = config_.sampling.top_p;
    m["max_tokens_think"] = config_.sampling.max_tokens_think;
    m["max_tokens_no_think"] = config_.sampling.max_tokens_no_think;
    m["seed"] = config_.seed;
    m["second_pass_seed"] = config_.reuse_first_pass_seed ? "reuse" : "fresh";
    m["repeats"] = config_.repeats;
    m["classify_epsilon"] = config_.classify_epsilon;
    m["brevity_instruction"] = config_.brevity_instruction;
    m["reference_model"] = config_.reference_model;
    write_file(config_.output_dir / kRunMetaFile, m.dump(2) + "\n");
}

GenerationRequest ExperimentRunner::request_for(const Problem& p, const ModeSpec& mode, std::string_view query,
                                                std::size_t max_tokens, std::int64_t seed) const {
    (void)p;
    GenerationRequest r;
    r.prompt = render_chat_prompt(query, mode, config_.chat_template);
    r.chat = ChatPrefill{std::string(query), render_assistant_prefix(mode)};
    r.max_tokens = max_tokens;
    r.temperature = config_.sampling.temperature;
    r.top_p = config_.sampling.top_p;
    r.model = config_.model;
    r.seed = seed;
    return r;
}

std::vector<GenerationResult> ExperimentRunner::dispatch(std::span<const GenerationRequest> requests) {
    if (requests.empty()) return {};
    auto results = client_.complete_batch(requests, config_.concurrency);
    for (const auto& r : results)
        if (r.error_kind == ErrorKind::transport) ++transport_failures_;
    return results;
}

std::size_t ExperimentRunner::count_tokens(const GenerationResult& r) const {
    return r.has_usage ? r.completion_tokens : tokenizer_->count(r.text);
}

void ExperimentRunner::persist(std::span<const Judgment> judgments) {
    const auto path = config_.output_dir / kJudgmentsFile;
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for append");
    for (const auto& j : judgments) out << judgment_to_jsonl(j) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

EvalSummary ExperimentRunner::run_mode_eval(const ModeSpec& mode) {
    validate_mode(mode);
    const std::size_t max_tokens =
        think_family(mode) ? config_.sampling.max_tokens_think : config_.sampling.max_tokens_no_think;
    // Think shares its seeds with the sweep's first pass so both produce the
    // same trajectories.
    const std::string stage = mode.name == modes::think ? "first-pass" : "eval:" + mode.name;

    std::vector<GenerationRequest> requests;
    std::vector<std::pair<const Problem*, int>> owners;
    for (const auto& p : problems_)
        for (std::size_t s = 0; s < config_.repeats; ++s) {
            const int sample = static_cast<int>(s);
            requests.push_back(request_for(p, mode, p.question, max_tokens,
                                           derive_seed(config_.seed, stage, p.id, sample)));
            owners.emplace_back(&p, sample);
        }
    note("eval " + mode.name + ": " + std::to_string(requests.size()) + " requests");
    const auto results = dispatch(requests);

    std::vector<Judgment> judgments;
    std::vector<Trajectory> trajectories;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& [p, sample] = owners[i];
        const auto& r = results[i];
        Judgment j;
        j.id = p->id;
        j.label = mode.name;
        j.kind = RunKind::mode;
        j.mode = mode.name;
        j.sample = sample;
        if (!r.error.empty()) {
            j.finish_reason = FinishReason::error;
            j.error = r.error;
        } else {
            j.correct = grade(extract_answer(r.text, p->answer_type), p->gold_answer, p->answer_type);
            j.completion_tokens = count_tokens(r);
            j.wait_count = count_wait(r.text);
            j.finish_reason = r.finish_reason;
            if (mode.opens_reasoning_span()) {
                auto t = make_trajectory(p->id, mode, requests[i].prompt, r.text, *tokenizer_);
                t.sample = sample;
                t.completion_tokens = j.completion_tokens;
                t.finish_reason = std::string(to_string(r.finish_reason));
                trajectories.push_back(std::move(t));
            }
        }
        judgments.push_back(std::move(j));
    }
    if (!trajectories.empty()) append_trajectories(config_.output_dir / kTrajectoriesFile, trajectories);
    persist(judgments);
    return summarize_judgments(judgments, mode.name, config_.effective_dataset_name());
}

BudgetCurve ExperimentRunner::run_budget_sweep() {
    if (config_.budgets.empty()) throw ConfigError("run_budget_sweep: budgets is empty");
    std::vector<double> budgets = config_.budgets;
    std::sort(budgets.begin(), budgets.end());
    budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());

    const auto think = find_mode(modes::think);
    const auto traj_path = config_.output_dir / kTrajectoriesFile;
    using Key = std::pair<std::string, int>;
    std::map<Key, Trajectory> first;
    for (auto& t : load_trajectories(traj_path, *tokenizer_))
        if (t.mode == think.name) first[{t.problem_id, t.sample}] = std::move(t);

    // Stage 1: every missing first pass, then a barrier.
    std::map<Key, std::string> failed;
    const bool needs_reasoning = budgets.back() > 0.0;
    if (needs_reasoning) {
        std::vector<GenerationRequest> requests;
        std::vector<Key> owners;
        std::vector<const Problem*> owner_problems;
        for (const auto& p : problems_)
            for (std::size_t s = 0; s < config_.repeats; ++s) {
                const Key key{p.id, static_cast<int>(s)};
                if (first.contains(key)) continue;
                requests.push_back(request_for(p, think, p.question, config_.sampling.max_tokens_think,
                                               derive_seed(config_.seed, "first-pass", p.id, key.second)));
                owners.push_back(key);
                owner_problems.push_back(&p);
            }
        note("sweep: " + std::to_string(requests.size()) + " first-pass requests, " +
             std::to_string(first.size()) + " reused");
        first_pass_requests_ += requests.size();
        const auto results = dispatch(requests);
        std::vector<Trajectory> fresh;
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            if (!r.error.empty()) {
                failed[owners[i]] = r.error;
                continue;
            }
            auto t = make_trajectory(owners[i].first, think, requests[i].prompt, r.text, *tokenizer_);
            t.sample = owners[i].second;
            t.completion_tokens = count_tokens(r);
            t.finish_reason = std::string(to_string(r.finish_reason));
            fresh.push_back(t);
            first[owners[i]] = std::move(t);
        }
        if (!fresh.empty()) append_trajectories(traj_path, fresh);
    }

    // Stage 2: one second pass per budget, sequentially.
    std::vector<BudgetCurvePoint> points;
    for (double b : budgets) {
        const BudgetSpec spec(b);
        const auto label = budget_label(b);
        std::vector<Judgment> judgments;
        std::vector<GenerationRequest> requests;
        struct Pending {
            std::size_t judgment;
            const Problem* problem;
            TokenSeq kept;
        };
        std::vector<Pending> pending;

        for (const auto& p : problems_)
            for (std::size_t s = 0; s < config_.repeats; ++s) {
                const Key key{p.id, static_cast<int>(s)};
                Judgment j;
                j.id = p.id;
                j.label = label;
                j.kind = RunKind::budget;
                j.mode = think.name;
                j.budget = b;
                j.sample = key.second;

                const auto it = first.find(key);
                if (b > 0.0 && it == first.end()) {
                    j.finish_reason = FinishReason::error;
                    j.error = "first pass failed: " + (failed.contains(key) ? failed[key] : "missing");
                    judgments.push_back(std::move(j));
                    continue;
                }
                if (b == 1.0) {
                    const auto& t = it->second;
                    const auto text = t.think_text + "\n" + t.response_text;
                    j.correct = grade(extract_answer(text, p.answer_type), p.gold_answer, p.answer_type);
                    j.completion_tokens = t.completion_tokens;
                    j.wait_count = count_wait(t.think_text) + count_wait(t.response_text);
                    j.finish_reason = finish_reason_from_string(t.finish_reason);
                    judgments.push_back(std::move(j));
                    continue;
                }
                TokenSeq kept = b > 0.0 ? truncate_think(it->second, spec) : TokenSeq{};
                const auto prompt =
                    build_second_pass_prompt(p.question, kept, think, config_.chat_template, *tokenizer_);
                const auto seed = config_.reuse_first_pass_seed
                                      ? derive_seed(config_.seed, "first-pass", p.id, key.second)
                                      : derive_seed(config_.seed, "second-pass:" + label, p.id, key.second);
                GenerationRequest r;
                r.prompt = prompt;
                const auto head = render_chat_prompt(p.question, raw_mode(), config_.chat_template);
                r.chat = ChatPrefill{p.question, prompt.substr(head.size())};
                r.max_tokens = config_.sampling.max_tokens_no_think;
                r.temperature = config_.sampling.temperature;
                r.top_p = config_.sampling.top_p;
                r.model = config_.model;
                r.seed = seed;
                requests.push_back(std::move(r));
                pending.push_back({judgments.size(), &p, std::move(kept)});
                judgments.push_back(std::move(j));
            }

        note("sweep " + label + ": " + std::to_string(requests.size()) + " second-pass requests");
        const auto results = dispatch(requests);
        for (std::size_t i = 0; i < results.size(); ++i) {
            auto& j = judgments[pending[i].judgment];
            const auto& kept = pending[i].kept;
            const auto& problem = *pending[i].problem;
            const auto& r = results[i];
            if (!r.error.empty()) {
                j.finish_reason = FinishReason::error;
                j.error = r.error;
                continue;
            }
            const auto kept_text = tokenizer_->decode(kept);
            j.correct = grade(extract_answer(kept_text + r.text, problem.answer_type), problem.gold_answer,
                              problem.answer_type);
            j.completion_tokens = kept.size() + count_tokens(r);
            j.wait_count = count_wait(kept_text) + count_wait(r.text);
            j.finish_reason = r.finish_reason;
        }
        persist(judgments);
        points.push_back({b, summarize_judgments(judgments, label, config_.effective_dataset_name())});
    }
    return BudgetCurve(std::move(points));
}

EvalSummary ExperimentRunner::run_think_variant(RunKind kind, std::string label, std::optional<std::size_t> cap,
                                                const std::string& query_prefix) {
    const auto think = find_mode(modes::think);
    const std::size_t max_tokens = cap.value_or(config_.sampling.max_tokens_think);
    std::vector<GenerationRequest> requests;
    std::vector<std::pair<const Problem*, int>> owners;
    for (const auto& p : problems_)
        for (std::size_t s = 0; s < config_.repeats; ++s) {
            const int sample = static_cast<int>(s);
            requests.push_back(request_for(p, think, query_prefix + p.question, max_tokens,
                                           derive_seed(config_.seed, "baseline:" + label, p.id, sample)));
            owners.emplace_back(&p, sample);
        }
    note("baseline " + label + ": " + std::to_string(requests.size()) + " requests");
    const auto results = dispatch(requests);
    std::vector<Judgment> judgments;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& [p, sample] = owners[i];
        const auto& r = results[i];
        Judgment j;
        j.id = p->id;
        j.label = label;
        j.kind = kind;
        j.mode = think.name;
        j.cap = cap;
        j.sample = sample;
        if (!r.error.empty()) {
            j.finish_reason = FinishReason::error;
            j.error = r.error;
        } else {
            j.correct = grade(extract_answer(r.text, p->answer_type), p->gold_answer, p->answer_type);
            j.completion_tokens = count_tokens(r);
            j.wait_count = count_wait(r.text);
            j.finish_reason = r.finish_reason;
        }
        judgments.push_back(std::move(j));
    }
    persist(judgments);
    return summarize_judgments(judgments, label, config_.effective_dataset_name());
}

std::vector<EvalSummary> ExperimentRunner::run_baselines() {
    if (config_.fixed_token_caps.empty() && config_.brevity_instruction.empty())
        throw ConfigError("run_baselines: set fixed_token_caps or brevity_instruction");
    std::vector<EvalSummary> out;
    auto caps = config_.fixed_token_caps;
    std::sort(caps.begin(), caps.end());
    caps.erase(std::unique(caps.begin(), caps.end()), caps.end());
    for (auto cap : caps) out.push_back(run_think_variant(RunKind::fixed_cap, "fixed_cap=" + std::to_string(cap), cap, ""));
    if (!config_.brevity_instruction.empty())
        out.push_back(run_think_variant(RunKind::prompt, "prompt", std::nullopt, config_.brevity_instruction + "\n\n"));
    return out;
}

// ---------------------------------------------------------------------------

void export_rl_dataset(std::span<const Problem> problems, const ModeSpec& mode, const std::filesystem::path& path,
                       const ChatTemplate& tmpl) {
    // find_mode throws ConfigError for names that are not built in.
    if (!(find_mode(mode.name) == mode))
        throw ConfigError("export-rl requires a built-in mode; '" + mode.name + "' was redefined");
    std::ostringstream body;
    for (const auto& p : problems) {
        json row;
        row["id"] = p.id;
        row["answer"] = p.gold_answer;
        row["prompt"] = render_chat_prompt(p.question, mode, tmpl);
        body << row.dump() << '\n';
    }
    write_file(path, body.str());
}

namespace {

struct LabelGroup {
    std::string label;
    RunKind kind;
    std::optional<double> budget;
    std::optional<std::size_t> cap;
    std::vector<Judgment> records;
};

std::string meta_text(const json& meta, const char* key, const std::string& fallback = "unknown") {
    if (!meta.contains(key) || meta[key].is_null()) return fallback;
    const auto& v = meta[key];
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return shortest(v.get<double>());
    return v.dump();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

ReportFiles emit_report(const std::filesystem::path& run_dir) {
    const auto judgments = latest_judgments(load_judgments(run_dir / kJudgmentsFile));
    if (judgments.empty()) throw InputError("no judgments in " + run_dir.string());

    json meta = json::object();
    if (std::ifstream in(run_dir / kRunMetaFile, std::ios::binary); in) {
        try {
            meta = json::parse(in);
        } catch (const json::parse_error& e) {
            throw DataError("malformed " + (run_dir / kRunMetaFile).string() + ": " + e.what());
        }
    }
    const auto dataset = meta_text(meta, "dataset");
    double epsilon = kDefaultClassifyEpsilon;
    if (meta.contains("classify_epsilon") && meta["classify_epsilon"].is_number())
        epsilon = meta["classify_epsilon"].get<double>();

    std::map<std::string, LabelGroup> by_label;
    for (const auto& j : judgments) {
        auto [it, inserted] = by_label.try_emplace(j.label);
        if (inserted) it->second = LabelGroup{j.label, j.kind, j.budget, j.cap, {}};
        it->second.records.push_back(j);
    }
    std::vector<const LabelGroup*> groups;
    for (const auto& [label, g] : by_label) groups.push_back(&g);
    std::sort(groups.begin(), groups.end(), [](const LabelGroup* a, const LabelGroup* b) {
        const auto key = [](const LabelGroup* g) {
            const double order = g->budget ? *g->budget : g->cap ? static_cast<double>(*g->cap) : 0.0;
            return std::tuple(kind_rank(g->kind), order, g->label);
        };
        return key(a) < key(b);
    });

    std::vector<std::pair<const LabelGroup*, EvalSummary>> summaries;
    for (const auto* g : groups) summaries.emplace_back(g, summarize_judgments(g->records, g->label, dataset));

    std::vector<BudgetCurvePoint> curve_points;
    std::vector<ParetoPoint> points;
    for (const auto& [g, s] : summaries) {
        if (g->kind == RunKind::budget) curve_points.push_back({*g->budget, s});
        points.push_back({g->label, s.avg_len, s.accuracy});
    }
    const BudgetCurve curve(curve_points);
    const auto frontier = pareto_frontier(points);
    std::set<std::string> on_frontier;
    for (const auto& p : frontier) on_frontier.insert(p.label);

    std::ostringstream md;
    md << "# Reasoning budget report\n\n";
    md << "## Provenance\n\n";
    md << "- model: " << meta_text(meta, "model") << '\n';
    md << "- dataset: " << dataset << " (" << meta_text(meta, "problems") << " problems, "
       << meta_text(meta, "repeats", "1") << " sample(s) each)\n";
    md << "- tokenizer: " << meta_text(meta, "tokenizer") << " (" << meta_text(meta, "tokenizer_name") << ")\n";
    if (meta.contains("tokenizer_warning")) md << "- tokenizer warning: " << meta_text(meta, "tokenizer_warning") << '\n';
    md << "- sampling: temperature " << meta_text(meta, "temperature") << ", top_p " << meta_text(meta, "top_p")
       << ", max_tokens " << meta_text(meta, "max_tokens_think") << " (think family) / "
       << meta_text(meta, "max_tokens_no_think") << " (no-think and second pass)\n";
    md << "- seed: " << meta_text(meta, "seed") << ", second-pass seed policy: " << meta_text(meta, "second_pass_seed")
       << '\n';
    md << "- length: generated completion tokens; budget runs add the kept reasoning tokens to the second-pass "
          "tokens\n";
    md << "- wait count: case-insensitive whole-word \"wait\" over all generated text\n";
    md << "- grader: exact rational comparison after normalization; symbolic equivalence such as \\sqrt{2}/2 "
          "against 1/\\sqrt{2} is not detected\n\n";

    md << "## Results\n\n";
    md << "| setting | kind | samples | accuracy | avg_len | wait_total | errors |\n";
    md << "|---|---|---:|---:|---:|---:|---:|\n";
    for (const auto& [g, s] : summaries)
        md << "| " << g->label << " | " << to_string(g->kind) << " | " << s.sample_count << " | "
           << fixed(s.accuracy) << " | " << fixed(s.avg_len) << " | " << s.wait_total << " | " << s.errors << " |\n";

    md << "\n## Pareto frontier\n\n";
    md << "Settings not dominated in (shorter avg_len, higher accuracy):\n\n";
    for (const auto& p : frontier) md << "- " << p.label << " (" << fixed(p.avg_len) << ", " << fixed(p.accuracy) << ")\n";

    md << "\n## Classification against the budget curve\n\n";
    if (curve.size() < 2) {
        md << "Needs at least two budget points; found " << curve.size() << ".\n";
    } else {
        md << "Epsilon " << shortest(epsilon) << " accuracy points, linear interpolation in avg_len.\n\n";
        for (const auto& [g, s] : summaries) {
            if (g->kind == RunKind::budget) continue;
            const auto c = classify_point({g->label, s.avg_len, s.accuracy}, curve, epsilon);
            md << "- " << g->label << ": " << to_string(c.position) << " (accuracy " << fixed(s.accuracy)
               << " vs curve " << fixed(c.interpolated_accuracy) << " at " << fixed(s.avg_len)
               << " tokens; nearest budget " << shortest(c.nearest_budget)
               << (c.extrapolated ? "; extrapolated" : "") << ")\n";
        }
    }

    const auto reference_model = meta_text(meta, "reference_model", "");
    if (!reference_model.empty()) {
        md << "\n## Published reference (" << reference_model << ", " << dataset << ")\n\n";
        bool any = false;
        for (const auto& [g, s] : summaries) {
            const auto ref = find_reference(reference_model, dataset, g->label);
            if (!ref) continue;
            any = true;
            const auto cmp = compare_to_reference(s, *ref);
            md << "- " << g->label << ": accuracy " << fixed(s.accuracy) << " vs " << fixed(ref->accuracy)
               << " (delta " << fixed(cmp.accuracy_delta) << ")";
            if (ref->avg_len) md << ", avg_len " << fixed(s.avg_len) << " vs " << fixed(*ref->avg_len);
            md << '\n';
        }
        if (!any) md << "No matching published settings.\n";
    }

    std::ostringstream budget_csv;
    budget_csv << "budget,accuracy,avg_len,wait_total,samples\n";
    for (const auto& cp : curve.points())
        budget_csv << shortest(cp.budget) << ',' << fixed(cp.summary.accuracy, 4) << ','
                   << fixed(cp.summary.avg_len, 4) << ',' << cp.summary.wait_total << ','
                   << cp.summary.sample_count << '\n';

    std::ostringstream points_csv;
    points_csv << "label,kind,avg_len,accuracy,on_frontier\n";
    for (const auto& [g, s] : summaries)
        points_csv << csv_field(g->label) << ',' << to_string(g->kind) << ',' << fixed(s.avg_len, 4) << ','
                   << fixed(s.accuracy, 4) << ',' << (on_frontier.contains(g->label) ? "true" : "false") << '\n';

    ReportFiles files{run_dir / kReportFile, run_dir / kBudgetCsvFile, run_dir / kPointsCsvFile};
    write_file(files.report, md.str());
    write_file(files.budget_csv, budget_csv.str());
    write_file(files.points_csv, points_csv.str());
    return files;
}

}  // namespace midthink
