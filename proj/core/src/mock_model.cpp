#include "midthink/mock_model.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <map>
#include <mutex>
#include <random>
#include <regex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "midthink/error.hpp"
#include "midthink/prompt_format.hpp"
#include "midthink/tokenizer.hpp"

namespace midthink {

using json = nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// No entry may be a whole-word "wait" or an extended cue word.
constexpr std::string_view kLexicon[] = {
    "so",     "the",    "value",   "of",      "term",   "we",      "compute", "check",
    "then",   "sum",    "factor",  "next",    "step",   "result",  "equals",  "because",
    "note",   "first",  "second",  "again",   "carefully", "this", "gives", "plus",
    "minus",  "times",  "square",  "root",    "ratio",  "case",    "both",    "sides",
    "expand", "simplify", "substitute", "assume", "hence", "therefore", "recall", "formula",
};

constexpr std::string_view kProblemTag = "[problem:";

std::string find_problem_id(std::string_view prompt) {
    const auto pos = prompt.find(kProblemTag);
    if (pos == std::string_view::npos) return {};
    const auto start = pos + kProblemTag.size();
    const auto end = prompt.find(']', start);
    if (end == std::string_view::npos) return {};
    return std::string(prompt.substr(start, end - start));
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool contains_ci(std::string_view hay, std::string_view needle) {
    auto it = std::search(hay.begin(), hay.end(), needle.begin(), needle.end(), [](char a, char b) {
        return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
    });
    return it != hay.end();
}

// Reasoning words with `waits` evenly spaced "Wait," entries, answer tail.
// Token count is exactly `reasoning_words` + tokens(tail).
std::string build_output(std::mt19937_64& rng, std::size_t reasoning_words, std::size_t waits,
                         std::string_view close_marker, std::string_view answer) {
    std::string out;
    waits = std::min(waits, reasoning_words);
    std::size_t next_wait = 0;
    for (std::size_t i = 0; i < reasoning_words; ++i) {
        out += ' ';
        // Wait number w sits at word floor((w + 0.5) * R / W).
        if (next_wait < waits && i == (2 * next_wait + 1) * reasoning_words / (2 * waits)) {
            out += "Wait,";
            ++next_wait;
        } else {
            out += kLexicon[rng() % std::size(kLexicon)];
        }
    }
    if (!close_marker.empty()) out += "\n" + std::string(close_marker);
    out += "\n\nThe answer is \\boxed{" + std::string(answer) + "}.";
    return out;
}

std::string wrong_answer(std::string_view id) {
    return std::to_string(std::stoll(synthetic_answer(id)) + 1);
}

}  // namespace

void MockBehavior::validate() const {
    if (!(short_len < mid_len && mid_len < long_len))
        throw ConfigError("mock: need short_len < mid_len < long_len");
    if (waits_per_long < 1) throw ConfigError("mock: waits_per_long must be >= 1");
    if (short_len < 8) throw ConfigError("mock: short_len must be >= 8");
}

std::size_t MockBehavior::correctness_threshold(std::string_view problem_id) const {
    const std::uint64_t h = fnv1a(problem_id, fnv1a("threshold") ^ seed);
    const double u = static_cast<double>(h % 1000003) / 1000003.0;
    if (u < easy_fraction) return 0;
    const auto ceiling = static_cast<std::size_t>(threshold_ceiling * static_cast<double>(long_len));
    return 1 + static_cast<std::size_t>((h >> 20) % std::max<std::size_t>(ceiling, 1));
}

std::string prompt_hash(std::string_view prompt) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(prompt)));
    return buf;
}

std::string synthetic_answer(std::string_view problem_id) {
    return std::to_string(100 + fnv1a(problem_id) % 900);
}

std::vector<Problem> make_synthetic_problems(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Problem> out;
    for (std::size_t i = 0; i < count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "p%03zu", i + 1);
        const auto a = 2 + rng() % 97;
        const auto b = 2 + rng() % 97;
        Problem p;
        p.id = id;
        p.question = std::string(kProblemTag) + id + "] Let x = " + std::to_string(a) + " and y = " +
                     std::to_string(b) + ". Compute the requested quantity and box the final answer.";
        p.gold_answer = synthetic_answer(id);
        p.answer_type = AnswerType::math;
        out.push_back(std::move(p));
    }
    return out;
}

std::string_view to_string(MockRegime regime) {
    switch (regime) {
        case MockRegime::think: return "think";
        case MockRegime::mid: return "mid";
        case MockRegime::no_think: return "no_think";
        case MockRegime::second_pass: return "second_pass";
    }
    return "no_think";
}

MockModel::MockModel(MockBehavior behavior) : behavior_(behavior) { behavior_.validate(); }

MockCompletion MockModel::respond(std::string_view prompt, std::optional<std::int64_t> seed) const {
    const auto& b = behavior_;
    std::mt19937_64 rng(fnv1a(prompt) ^ b.seed ^ (seed ? static_cast<std::uint64_t>(*seed) * 0x9E3779B97F4A7C15ULL : 0));
    const std::string id = find_problem_id(prompt);
    const std::size_t threshold = b.correctness_threshold(id);
    const std::string right = synthetic_answer(id);

    // Only the assistant turn carries cues.
    std::string_view tail = prompt;
    if (const auto pos = prompt.rfind("<|im_start|>assistant"); pos != std::string_view::npos)
        tail = prompt.substr(pos);

    MockCompletion out;
    const std::string response_cue = "</think>\n\n";
    auto answer_for = [&](std::size_t think_tokens) {
        out.correct = think_tokens >= threshold;
        return out.correct ? right : wrong_answer(id);
    };

    if (ends_with(tail, kOkayCue)) {
        const auto head = tail.substr(0, tail.size() - kOkayCue.size());
        // Tag opened right before the cue, e.g. "<reason>\n".
        std::string tag;
        static const std::regex tag_before_cue(R"(<([^<>/]+)>\n$)");
        std::match_results<std::string_view::const_iterator> m;
        if (std::regex_search(head.begin(), head.end(), m, tag_before_cue)) tag = m[1].str();

        const bool conflicted = head.find(response_cue) != std::string_view::npos;
        std::size_t total;
        std::size_t waits;
        std::string close;
        if (conflicted) {
            out.regime = MockRegime::mid;
            total = b.mid_len;
            waits = b.waits_per_long / 2;
            if (!tag.empty() && tag != "think") close = "</" + tag + ">";
        } else {
            out.regime = MockRegime::think;
            total = b.long_len;
            if (contains_ci(prompt, "briefly"))
                total = std::max(b.mid_len + 1, static_cast<std::size_t>(b.brevity_scale * static_cast<double>(total)));
            waits = b.waits_per_long;
            close = "</" + (tag.empty() ? std::string("think") : tag) + ">";
        }
        const std::size_t tail_tokens = (close.empty() ? 0 : 1) + 4;
        const std::size_t words = total - tail_tokens;
        out.text = build_output(rng, words, waits, close, answer_for(words));
    } else if (ends_with(tail, ">\n\n")) {
        // A closed reasoning span; how much reasoning does it hold?
        const auto close_start = tail.rfind("</");
        std::size_t k = 0;
        if (close_start != std::string_view::npos) {
            const auto tag_end = tail.find('>', close_start);
            const std::string tag(tail.substr(close_start + 2, tag_end - close_start - 2));
            const auto open = tail.rfind("<" + tag + ">", close_start);
            if (open != std::string_view::npos) {
                const auto body_start = open + tag.size() + 2;
                k = whitespace_token_count(tail.substr(body_start, close_start - body_start));
                // A span made only of whitespace holds no reasoning.
                if (tail.substr(body_start, close_start - body_start).find_first_not_of(" \t\r\n") ==
                    std::string_view::npos)
                    k = 0;
            }
        }
        out.embedded_think_tokens = k;
        out.regime = k == 0 ? MockRegime::no_think : MockRegime::second_pass;
        const std::size_t total =
            b.short_len + static_cast<std::size_t>(b.second_pass_slope * static_cast<double>(k));
        out.text = build_output(rng, total - 4, 0, "", answer_for(k));
    } else if (tail.find(kThinkClose) != std::string_view::npos) {
        // Closed think block with other trailing bytes: answer directly.
        out.regime = MockRegime::no_think;
        out.text = build_output(rng, b.short_len - 4, 0, "", answer_for(0));
    } else {
        // Raw continuation: the model opens its own reasoning span.
        out.regime = MockRegime::think;
        const std::size_t words = b.long_len - 7;
        out.text = "<think>\nOkay" + build_output(rng, words, b.waits_per_long, "</think>", answer_for(words));
    }
    out.completion_tokens = whitespace_token_count(out.text);
    return out;
}

MockCompletion MockModel::complete(std::string_view prompt, std::size_t max_tokens,
                                   std::optional<std::int64_t> seed) const {
    auto out = respond(prompt, seed);
    if (out.completion_tokens > max_tokens) {
        WhitespaceTokenizer tok;
        auto tokens = tok.encode(out.text);
        tokens.resize(max_tokens);
        out.text = tok.decode(tokens);
        out.completion_tokens = max_tokens;
        out.truncated = true;
    }
    return out;
}

struct MockServer::Impl {
    MockModel model;
    MockServerOptions options;
    httplib::Server server;
    std::thread thread;
    int port = 0;

    mutable std::mutex log_mutex;
    std::vector<MockLogEntry> log;
    std::map<std::string, int> flaky_attempts;

    Impl(MockBehavior b, MockServerOptions o) : model(b), options(o) { install_routes(); }

    void record(const httplib::Request& req, const std::string& prompt) {
        std::lock_guard lock(log_mutex);
        MockLogEntry e;
        e.arrival_order = log.size();
        e.index = static_cast<long>(e.arrival_order);
        if (req.has_header("X-Request-Index")) {
            try {
                e.index = std::stol(req.get_header_value("X-Request-Index"));
            } catch (const std::exception&) {
            }
        }
        e.prompt_hash = prompt_hash(prompt);
        log.push_back(std::move(e));
    }

    // Returns true if a fault reply was written.
    bool inject_fault(const std::string& model_name, const std::string& prompt, httplib::Response& res) {
        if (model_name == "mock-fail") {
            res.status = 503;
            res.set_content(R"({"error":"injected failure"})", "application/json");
            return true;
        }
        if (model_name == "mock-bad-json") {
            res.status = 200;
            res.set_content("this is not json", "text/plain");
            return true;
        }
        if (model_name == "mock-flaky") {
            std::lock_guard lock(log_mutex);
            if (flaky_attempts[prompt_hash(prompt)]++ < 2) {
                res.status = 503;
                res.set_content(R"({"error":"flaky"})", "application/json");
                return true;
            }
        }
        return false;
    }

    void reply(const json& body, bool chat, httplib::Response& res, const std::string& prompt) {
        const std::size_t max_tokens = body.value("max_tokens", std::size_t{16});
        std::optional<std::int64_t> seed;
        if (body.contains("seed") && body["seed"].is_number_integer()) seed = body["seed"].get<std::int64_t>();
        const auto c = model.complete(prompt, std::max<std::size_t>(max_tokens, 1), seed);
        json choice = {{"index", 0}, {"finish_reason", c.truncated ? "length" : "stop"}};
        if (chat)
            choice["message"] = {{"role", "assistant"}, {"content", c.text}};
        else
            choice["text"] = c.text;
        json out = {
            {"id", "mock-" + prompt_hash(prompt)},
            {"object", chat ? "chat.completion" : "text_completion"},
            {"model", body.value("model", std::string("mock"))},
            {"choices", json::array({choice})},
            {"usage", {{"prompt_tokens", whitespace_token_count(prompt)},
                       {"completion_tokens", c.completion_tokens},
                       {"total_tokens", whitespace_token_count(prompt) + c.completion_tokens}}},
        };
        res.set_content(out.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
    }

    static void bad_request(httplib::Response& res, const std::string& why) {
        res.status = 400;
        res.set_content(json{{"error", why}}.dump(), "application/json");
    }

    void install_routes() {
        server.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
            json body;
            try {
                body = json::parse(req.body);
                const auto prompt = body.at("prompt").get<std::string>();
                record(req, prompt);
                if (inject_fault(body.value("model", std::string()), prompt, res)) return;
                reply(body, false, res, prompt);
            } catch (const json::exception& e) {
                bad_request(res, e.what());
            }
        });

        server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                const auto body = json::parse(req.body);
                const auto& messages = body.at("messages");
                std::string user;
                std::string prefix;
                for (const auto& m : messages) {
                    if (m.at("role") == "user") user = m.at("content").get<std::string>();
                    if (m.at("role") == "assistant") prefix = m.at("content").get<std::string>();
                }
                const ChatTemplate tmpl;
                const std::string prompt = tmpl.user_open + user + tmpl.user_close + tmpl.assistant_open + prefix;
                record(req, prompt);
                if (inject_fault(body.value("model", std::string()), prompt, res)) return;
                reply(body, true, res, prompt);
            } catch (const json::exception& e) {
                bad_request(res, e.what());
            }
        });

        if (options.enable_tokenize) {
            server.Post("/tokenize", [](const httplib::Request& req, httplib::Response& res) {
                try {
                    const auto body = json::parse(req.body);
                    const auto text = body.at("prompt").get<std::string>();
                    json tokens = json::array();
                    for (const auto& t : WhitespaceTokenizer().encode(text)) tokens.push_back(*t.piece);
                    res.set_content(json{{"tokens", tokens}, {"count", tokens.size()}}.dump(), "application/json");
                } catch (const json::exception& e) {
                    bad_request(res, e.what());
                }
            });
        }

        server.Get("/log", [this](const httplib::Request&, httplib::Response& res) {
            json out = json::array();
            {
                std::lock_guard lock(log_mutex);
                for (const auto& e : log)
                    out.push_back({{"index", e.index}, {"arrival_order", e.arrival_order}, {"prompt_hash", e.prompt_hash}});
            }
            res.set_content(out.dump(), "application/json");
        });

        server.Delete("/log", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(log_mutex);
            log.clear();
            res.set_content("[]", "application/json");
        });

        server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"status":"ok"})", "application/json");
        });
    }
};

MockServer::MockServer(MockBehavior behavior, MockServerOptions options)
    : impl_(std::make_unique<Impl>(behavior, options)) {
    const auto threads = std::max<std::size_t>(options.threads, 1);
    impl_->server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    // httplib also sets SO_REUSEPORT, which would let a second server share
    // a busy port instead of failing to bind.
    impl_->server.set_socket_options([](auto sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
    });
}

MockServer::~MockServer() { stop(); }

void MockServer::start(int port, const std::string& host) {
    if (impl_->thread.joinable()) throw InputError("mock server already running");
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port(host);
        if (impl_->port < 0) throw IoError("mock server: cannot bind " + host);
    } else {
        if (!impl_->server.bind_to_port(host, port))
            throw IoError("mock server: port " + std::to_string(port) + " is in use or unavailable");
        impl_->port = port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void MockServer::serve_forever(int port, const std::string& host) {
    if (!impl_->server.bind_to_port(host, port))
        throw IoError("mock server: port " + std::to_string(port) + " is in use or unavailable");
    impl_->port = port;
    impl_->server.listen_after_bind();
}

void MockServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int MockServer::port() const noexcept { return impl_->port; }

std::string MockServer::base_url() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }

std::vector<MockLogEntry> MockServer::log() const {
    std::lock_guard lock(impl_->log_mutex);
    return impl_->log;
}

void MockServer::clear_log() {
    std::lock_guard lock(impl_->log_mutex);
    impl_->log.clear();
}

}  // namespace midthink
