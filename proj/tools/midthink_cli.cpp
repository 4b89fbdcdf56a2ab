// midthink: run reasoning-budget experiments against an OpenAI-compatible
// endpoint (or the bundled mock), then summarize them.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "midthink/attention_analysis.hpp"
#include "midthink/error.hpp"
#include "midthink/experiment_runner.hpp"
#include "midthink/mock_model.hpp"

using namespace midthink;

namespace {

MockServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

void print_summary(const EvalSummary& s) {
    std::printf("%-24s acc %6.2f  avg_len %9.2f  wait %7zu  n %zu  errors %zu\n", s.mode.c_str(), s.accuracy,
                s.avg_len, s.wait_total, s.sample_count, s.errors);
}

// The report is written even when some requests failed.
int finish(const ExperimentRunner& runner, std::size_t errors) {
    std::cout << "\nreport: " << emit_report(runner.run_dir()).report.string() << '\n';
    if (runner.transport_failures()) {
        std::cerr << "error: " << runner.transport_failures()
                  << " request(s) gave up after exhausting retries against " << runner.config().endpoint << '\n';
        return exit_code_for(ErrorKind::transport);
    }
    return errors ? 1 : 0;
}

int cmd_eval(const std::string& config_path, const std::vector<std::string>& mode_names) {
    auto cfg = load_config(config_path);
    const auto names = mode_names.empty() ? cfg.modes : mode_names;
    if (names.empty()) throw ConfigError("no mode given: pass --mode or set 'modes' in the config");
    if (cfg.modes.empty()) cfg.modes = names;
    ExperimentRunner runner(cfg, &std::cerr);
    std::size_t errors = 0;
    for (const auto& name : names) {
        const auto s = runner.run_mode_eval(cfg.mode(name));
        errors += s.errors;
        print_summary(s);
    }
    return finish(runner, errors);
}

int cmd_sweep(const std::string& config_path) {
    const auto cfg = load_config(config_path);
    ExperimentRunner runner(cfg, &std::cerr);
    const auto curve = runner.run_budget_sweep();
    std::size_t errors = 0;
    for (const auto& p : curve.points()) {
        errors += p.summary.errors;
        print_summary(p.summary);
    }
    return finish(runner, errors);
}

int cmd_baselines(const std::string& config_path) {
    const auto cfg = load_config(config_path);
    ExperimentRunner runner(cfg, &std::cerr);
    std::size_t errors = 0;
    for (const auto& s : runner.run_baselines()) {
        errors += s.errors;
        print_summary(s);
    }
    return finish(runner, errors);
}

int cmd_pareto(const std::string& run_dir) {
    const auto files = emit_report(run_dir);
    std::ifstream in(files.report);
    std::cout << in.rdbuf();
    return 0;
}

int cmd_attn(const std::string& dump, std::size_t k, const std::string& heatmap) {
    const auto profiles = load_profiles(dump);
    for (const auto& p : profiles) {
        std::cout << p.mode << " (" << p.model_id << ", " << p.generated_len << " generated tokens)\n";
        for (const auto& t : top_k(p, std::min(k, p.prompt_tokens.size()))) {
            nlohmann::json shown = t.token;
            std::printf("  #%-4zu %-24s %.6f\n", t.index, shown.dump().c_str(), t.value);
        }
    }
    std::cout << "\nexpected trigger check:\n";
    for (const auto& c : compare_modes(profiles)) {
        nlohmann::json shown = c.top.token;
        std::printf("  %-24s top %-20s expected %-26s %s\n", c.mode.c_str(), shown.dump().c_str(),
                    std::string(to_string(c.expected)).c_str(), c.matches_expectation ? "match" : "mismatch");
    }
    if (!heatmap.empty()) {
        emit_heatmap(profiles, heatmap);
        std::cout << "heatmap: " << heatmap << '\n';
    }
    return 0;
}

int cmd_export(const std::string& config_path, const std::string& mode_name, const std::string& out) {
    const auto cfg = load_config(config_path);
    const auto problems = load_dataset(cfg.dataset, cfg.answer_type);
    export_rl_dataset(problems, find_mode(mode_name), out, cfg.chat_template);
    std::cerr << "wrote " << problems.size() << " prompts to " << out << '\n';
    return 0;
}

int cmd_mock(int port, std::uint64_t seed, const std::string& host, bool no_tokenize) {
    MockBehavior behavior;
    behavior.seed = seed;
    MockServerOptions opts;
    opts.enable_tokenize = !no_tokenize;
    MockServer server(behavior, opts);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "mock server on http://" << host << ':' << port << " (seed " << seed << ")\n";
    server.serve_forever(port, host);
    g_server = nullptr;
    return 0;
}

int cmd_synth(std::size_t count, std::uint64_t seed, const std::string& out) {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + out);
    for (const auto& p : make_synthetic_problems(count, seed)) {
        nlohmann::json row{{"id", p.id}, {"question", p.question}, {"answer", p.gold_answer}, {"type", "math"}};
        f << row.dump() << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"midthink: reasoning-budget experiments for trigger-token prompt formats"};
    app.require_subcommand(1);

    std::string config, mode_out, run_dir, dump, heatmap, out, host = "127.0.0.1";
    std::vector<std::string> mode_names;
    std::size_t top = 5, count = 20;
    int port = 8000;
    std::uint64_t seed = 0;
    bool no_tokenize = false;

    auto* eval = app.add_subcommand("eval", "Evaluate prompt modes");
    eval->add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
    eval->add_option("--mode", mode_names, "Mode name (repeatable); defaults to the config's modes");

    auto* sweep = app.add_subcommand("sweep", "Two-pass reasoning budget sweep");
    sweep->add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);

    auto* baselines = app.add_subcommand("baselines", "Fixed-token caps and prompt-based brevity");
    baselines->add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);

    auto* pareto = app.add_subcommand("pareto", "Rebuild the report of a run directory");
    pareto->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

    auto* attn = app.add_subcommand("attn", "Summarize an attention dump");
    attn->add_option("--dump", dump, "Attention dump (JSON lines)")->required();
    attn->add_option("--top-k", top, "Tokens shown per mode")->check(CLI::PositiveNumber);
    attn->add_option("--heatmap", heatmap, "Write a modes x tokens CSV here");

    auto* exp = app.add_subcommand("export-rl", "Write training prompts in a mode's layout");
    exp->add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
    exp->add_option("--mode", mode_out, "Built-in mode")->required();
    exp->add_option("--out", out, "Output JSONL")->required();

    auto* mock = app.add_subcommand("mock-serve", "Serve the deterministic mock model");
    mock->add_option("--port", port, "Port (0 picks one)");
    mock->add_option("--seed", seed, "Mock seed");
    mock->add_option("--host", host, "Bind address");
    mock->add_flag("--no-tokenize", no_tokenize, "Disable /tokenize");

    auto* synth = app.add_subcommand("synth", "Write synthetic problems the mock can grade");
    synth->add_option("--count", count, "Number of problems");
    synth->add_option("--seed", seed, "Seed");
    synth->add_option("--out", out, "Output JSONL")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*eval) return cmd_eval(config, mode_names);
        if (*sweep) return cmd_sweep(config);
        if (*baselines) return cmd_baselines(config);
        if (*pareto) return cmd_pareto(run_dir);
        if (*attn) return cmd_attn(dump, top, heatmap);
        if (*exp) return cmd_export(config, mode_out, out);
        if (*mock) return cmd_mock(port, seed, host, no_tokenize);
        if (*synth) return cmd_synth(count, seed, out);
    } catch (const midthink::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
