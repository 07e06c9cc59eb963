// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "effagents/grade.hpp"
#include "effagents/html_text.hpp"
#include "effagents/memory.hpp"
#include "effagents/tts.hpp"

#include "scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace effagents;
using namespace testing_support;

namespace {

using Clock = std::chrono::steady_clock;

// Collects the first few failure messages of one criterion.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (ok) return;
        ++failures_;
        if (messages_.size() < 5) messages_.push_back(what);
    }
    bool ok() const { return failures_ == 0; }
    std::string summary() const {
        std::ostringstream out;
        out << failures_ << " failure(s)";
        for (const auto& m : messages_) out << "; " << m;
        return out.str();
    }

private:
    int failures_ = 0;
    std::vector<std::string> messages_;
};

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

void cost_of_pass_oracle(Check& c) {
    const auto start = Clock::now();
    const double crawler = cost_of_pass(0.705, 0.5333);
    const double n1 = cost_of_pass(0.521, 0.5333);
    const double none = cost_of_pass(0.022, 0.0);
    const double ms = elapsed_ms(start);
    c.expect(in_range(crawler, 1.31, 1.33), "cost_of_pass(0.705, 0.5333) = " + std::to_string(crawler));
    c.expect(in_range(n1, 0.97, 0.99), "cost_of_pass(0.521, 0.5333) = " + std::to_string(n1));
    c.expect(std::isinf(none) && none > 0, "cost_of_pass(0.022, 0) is not +inf");
    c.expect(ms < 1.0, "took " + std::to_string(ms) + " ms");
}

void comparison_math(Check& c) {
    const auto start = Clock::now();
    const auto m = comparison_metrics(0.285, 51.52, 0.398, 53.33);
    const double ms = elapsed_ms(start);
    c.expect(std::abs(m.cost_reduction_pct - 28.4) <= 0.1, "cost reduction " + std::to_string(m.cost_reduction_pct));
    c.expect(std::abs(m.performance_retention_pct - 96.6) <= 0.2,
             "retention " + std::to_string(m.performance_retention_pct));
    c.expect(ms < 1.0, "took " + std::to_string(ms) + " ms");
}

void preset_fidelity(Check& c) {
    const auto d = default_config();
    c.expect(d.backbone_id == "gpt-4.1", "default backbone");
    c.expect(d.max_steps == 12, "default max_steps");
    c.expect(d.plan_interval == 1, "default plan_interval");
    c.expect(d.source_set == SourceSet::Simple, "default source_set");
    c.expect(d.query_expansion_count == 10, "default search num");
    c.expect(d.bon_n == 1, "default bon_n");
    c.expect(d.memory_mode == MemoryMode::Simple, "default memory_mode");

    const auto e = efficient_agents_config();
    c.expect(e.backbone_id == "gpt-4.1", "efficient backbone");
    c.expect(e.max_steps == 8, "efficient max_steps");
    c.expect(e.plan_interval == 1, "efficient plan_interval");
    c.expect(e.source_set == SourceSet::Multi, "efficient source_set");
    c.expect(e.query_expansion_count == 5, "efficient search num");
    c.expect(e.bon_n == 1, "efficient bon_n");
    c.expect(e.memory_mode == MemoryMode::Simple, "efficient memory_mode");

    auto patched = e;
    c.expect(patched.max_steps != d.max_steps && patched.source_set != d.source_set &&
                 patched.query_expansion_count != d.query_expansion_count,
             "presets agree on a field expected to differ");
    patched.max_steps = d.max_steps;
    patched.source_set = d.source_set;
    patched.query_expansion_count = d.query_expansion_count;
    c.expect(patched == d, "presets differ outside {max_steps, source_set, query_expansion_count}");
    c.expect(default_config() == d && efficient_agents_config() == e, "presets are not constant");
    try {
        validate_config(d, test_pricing());
        validate_config(e, test_pricing());
    } catch (const std::exception& ex) {
        c.expect(false, std::string("preset fails validation: ") + ex.what());
    }
}

void plan_cadence(Check& c) {
    const auto start = Clock::now();
    std::mt19937 rng(2024);
    TempDir dir;
    for (int trial = 0; trial < 200; ++trial) {
        auto cfg = default_config();
        cfg.max_steps = 1 + static_cast<int>(rng() % 16);
        cfg.plan_interval = 1 + static_cast<int>(rng() % 6);
        const int stop = static_cast<int>(rng() % 20);
        Script s;
        s.always(Purpose::Planner, "plan")
            .add(Purpose::Actor, final_answer("x"), at_step(stop))
            .always(Purpose::Actor, "ACTION: page_up()");
        auto services = services_for(s.backend(), dir.path());
        const auto r = run_one(make_task("p", 1, "q", "x"), cfg, test_pricing(), services, std::chrono::seconds(0));
        const int executed = static_cast<int>(r.record.steps.size());
        const std::string tag = "trial " + std::to_string(trial);
        c.expect(executed == std::min(stop + 1, cfg.max_steps), tag + ": executed steps");
        const int want = (executed + cfg.plan_interval - 1) / cfg.plan_interval;
        c.expect(static_cast<int>(r.record.plans.size()) == want, tag + ": plan count");
        for (int i = 0; i < std::min<int>(want, static_cast<int>(r.record.plans.size())); ++i)
            c.expect(r.record.plans[i].created_at_step == i * cfg.plan_interval, tag + ": plan step");
        c.expect(r.record.ledger.count(Purpose::Planner) == r.record.plans.size(), tag + ": planner calls");
    }
    const double ms = elapsed_ms(start);
    c.expect(ms < 5000.0, "took " + std::to_string(ms) + " ms");
}

void bon_accounting(Check& c) {
    TempDir dir;
    for (int n : {1, 2, 4}) {
        Script s;
        s.always(Purpose::Planner, "plan")
            .always(Purpose::Actor, final_answer("42"), at_step(2))
            .always(Purpose::Actor, "ACTION: search(query=\"x\")")
            .always(Purpose::QueryExpansion, "1. x\n2. y")
            .always(Purpose::Prm, R"({"analysis":"fine","score":5})");
        auto cfg = small_config();
        cfg.bon_n = n;
        auto services = services_for(s.backend(), dir.path());
        const auto r = run_one(make_task("b", 1, "q", "42"), cfg, test_pricing(), services, std::chrono::seconds(0));
        const std::string tag = "n=" + std::to_string(n);
        c.expect(r.record.steps.size() == 3, tag + ": step count");
        for (int step = 0; step < 3; ++step) {
            c.expect(r.record.ledger.count(Purpose::Actor, step) == static_cast<std::size_t>(n), tag + ": actor entries");
            c.expect(r.record.ledger.count(Purpose::Prm, step) == (n == 1 ? 0u : static_cast<std::size_t>(n)),
                     tag + ": prm entries");
        }
    }
    std::mt19937 rng(1000);
    for (int i = 0; i < 1000; ++i) {
        std::vector<int> scores(1 + rng() % 8);
        for (auto& v : scores) v = static_cast<int>(rng() % 11);
        std::size_t best = 0;
        for (std::size_t j = 1; j < scores.size(); ++j) {
            if (scores[j] > scores[best]) best = j;
        }
        c.expect(select_best(scores) == best, "select_best disagrees on vector " + std::to_string(i));
    }
}

Vector random_vector(std::mt19937& rng, int dim) {
    std::normal_distribution<double> d;
    Vector v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = d(rng);
    return v;
}

void memory_suite(Check& c) {
    TempDir dir;
    // (a) and (d): sentinel reasoning never reaches a Simple-mode prompt; no memory calls.
    for (auto mode : {MemoryMode::Simple, MemoryMode::NoExtra}) {
        Script s;
        s.always(Purpose::Planner, "plan")
            .always(Purpose::Actor, final_answer("42"), at_step(5))
            .always(Purpose::Actor, "SENTINEL-REASONING-5150\nACTION: search(query=\"x\")")
            .always(Purpose::QueryExpansion, "1. x")
            .always(Purpose::Memory, "memo");
        auto cfg = small_config();
        cfg.max_steps = 8;
        cfg.memory_mode = mode;
        auto backend = s.backend();
        auto services = services_for(backend, dir.path());
        const auto r = run_one(make_task("m", 1, "q", "42"), cfg, test_pricing(), services, std::chrono::seconds(0));
        const std::string tag(to_string(mode));
        c.expect(r.record.steps.size() == 6, tag + ": step count");
        c.expect(r.record.ledger.count(Purpose::Memory) == 0, tag + ": memory-tagged entries present");
        if (mode == MemoryMode::Simple) {
            for (const auto& req : backend->requests()) {
                for (const auto& m : req.messages)
                    c.expect(m.content.find("SENTINEL-REASONING-5150") == std::string::npos,
                             "sentinel leaked into a Simple-mode prompt");
            }
        }
    }
    // (b) exhaustive cosine scan.
    std::mt19937 rng(16016);
    for (int trial = 0; trial < 500; ++trial) {
        const int dim = 16;
        const int n = static_cast<int>(rng() % 51);
        const int k = 1 + static_cast<int>(rng() % 10);
        VectorStore store(dim);
        std::vector<Vector> raw;
        for (int i = 0; i < n; ++i) {
            raw.push_back(random_vector(rng, dim));
            store.add({i, std::to_string(i), raw.back()});
        }
        const auto query = random_vector(rng, dim);
        std::vector<std::pair<double, int>> scored;
        const double qn = std::sqrt(std::inner_product(query.begin(), query.end(), query.begin(), 0.0));
        for (int i = 0; i < n; ++i) {
            const double vn = std::sqrt(std::inner_product(raw[i].begin(), raw[i].end(), raw[i].begin(), 0.0));
            scored.emplace_back(std::inner_product(raw[i].begin(), raw[i].end(), query.begin(), 0.0) / (vn * qn), i);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        const auto got = retrieve_top_k(store, query, k);
        c.expect(got.size() == static_cast<std::size_t>(std::min(n, k)), "top-k size");
        for (std::size_t i = 0; i < std::min(got.size(), scored.size()); ++i)
            c.expect(got[i].step_index == scored[i].second, "rank disagreement in store " + std::to_string(trial));
    }
    // (c) note stays bounded.
    {
        Script s;
        for (int i = 0; i < 100; ++i) s.add(Purpose::Memory, std::string(rng() % 400, "xé"[rng() % 2]));
        auto backend = s.backend();
        const auto pricing = test_pricing();
        RunLedger ledger("note");
        LlmSession llm(*backend, pricing, ledger, nullptr, "note", "t");
        const auto templates = PromptTemplates::builtin();
        LongTermNote note(150);
        for (int i = 0; i < 100; ++i) {
            Step step;
            step.index = i;
            step.model_output = "r";
            step.action = parse_action("ACTION: page_down()");
            step.observation = "o";
            note = update_long_term_note(note, step, llm, kModel, templates);
            c.expect(note.text().size() <= 150, "note exceeds max_chars at update " + std::to_string(i));
        }
        c.expect(ledger.count(Purpose::Memory) == 100, "note updates were not all memory-tagged");
    }
}

std::string random_page(int paragraphs, std::mt19937& rng) {
    static const std::vector<std::string> words{"lattice", "tower", "année", "über", "Σίσυφος", "river",
                                                "<b>bold</b>", "&amp;", "naïve", "bridge", "height"};
    std::string html = "<html><head><script>var x = 1;</script></head><body><h2>Fixture</h2>";
    for (int p = 0; p < paragraphs; ++p) {
        html += p % 4 == 3 ? "<li>" : "<p>";
        const int n = 4 + static_cast<int>(rng() % 50);
        for (int w = 0; w < n; ++w) html += words[rng() % words.size()] + " ";
        html += p % 4 == 3 ? "</li>" : "</p>";
    }
    return html + "</body></html>";
}

void tool_suite(Check& c) {
    std::mt19937 rng(77);
    TempDir dir;
    // Viewport partition on 20 fixture pages.
    for (int i = 0; i < 20; ++i) {
        const std::string url = "https://fixture.test/page" + std::to_string(i);
        write_page_fixture(dir.path(), url, random_page(1 + i * 4, rng));
        ToolSettings s;
        s.viewport_chars = 40 + static_cast<int>(rng() % 500);
        s.crawler_max_chars = 200 + static_cast<int>(rng() % 5000);
        FixturePageFetcher fetcher(dir.path());
        const auto crawler = fetch_page(url, PageStrategy::CrawlerStatic, fetcher, s);
        BrowserSession browser(PageStrategy::BrowserComplex, s);
        auto view = browser.open(url, fetcher);
        std::string joined = view.text;
        int pages = 1;
        while (true) {
            const auto next = browser.page_down();
            if (!next.note.empty()) {
                c.expect(next.viewport_index == view.viewport_count - 1 && next.text == browser.current().text,
                         url + ": bottom bound is not a no-op");
                break;
            }
            joined += next.text;
            ++pages;
        }
        c.expect(pages == view.viewport_count, url + ": viewport count");
        c.expect(std::string(utf8_prefix(joined, static_cast<std::size_t>(s.crawler_max_chars))) == crawler.text,
                 url + ": viewports do not concatenate to the crawler text");
        while (browser.current().viewport_index > 0) browser.page_up();
        const auto top = browser.page_up();
        c.expect(top.viewport_index == 0 && !top.note.empty() && top.text == view.text, url + ": top bound");
    }
    // Search merge/dedup against a brute-force oracle.
    const std::vector<std::string> hosts{"alpha.com", "beta.org", "gamma.net", "delta.io"};
    for (int trial = 0; trial < 30; ++trial) {
        TempDir fx;
        const std::vector<std::string> queries{"q one", "q two", "q three"};
        const int limit = 1 + static_cast<int>(rng() % 5);
        std::map<std::pair<std::string, std::string>, std::vector<std::pair<int, int>>> lists;
        for (const auto& q : queries) {
            for (const auto& p : providers_for(SourceSet::Multi)) {
                if (rng() % 4 == 0) continue;
                std::vector<std::tuple<std::string, std::string, std::string>> rows;
                const int n = static_cast<int>(rng() % 7);
                for (int i = 0; i < n; ++i) {
                    const int h = static_cast<int>(rng() % hosts.size()), path = static_cast<int>(rng() % 5);
                    lists[{q, p}].emplace_back(h, path);
                    std::string host = hosts[h];
                    if (rng() % 2) std::transform(host.begin(), host.end(), host.begin(), ::toupper);
                    rows.emplace_back("r", "https://" + host + "/x" + std::to_string(path) + (rng() % 2 ? "#f" : ""),
                                      "");
                }
                write_search_fixture(fx.path(), p, q, rows);
            }
        }
        ProviderMap providers;
        for (const auto& id : providers_for(SourceSet::Multi))
            providers[id] = std::make_shared<FixtureSearchProvider>(fx.path(), id);
        for (const auto set : {SourceSet::Simple, SourceSet::Multi}) {
            std::vector<std::string> want;
            std::set<std::string> seen;
            for (const auto& q : queries) {
                for (const auto& p : providers_for(set)) {
                    const auto& l = lists[{q, p}];
                    for (int i = 0; i < std::min<int>(limit, static_cast<int>(l.size())); ++i) {
                        const auto key = "https://" + hosts[l[i].first] + "/x" + std::to_string(l[i].second);
                        if (seen.insert(key).second) want.push_back(key);
                    }
                }
            }
            const auto got = search(set, queries, limit, providers);
            std::vector<std::string> keys;
            for (const auto& r : got.results) keys.push_back(normalize_url(r.url));
            c.expect(keys == want, "search trial " + std::to_string(trial) + " disagrees with the oracle");
        }
    }
}

struct Snapshot {
    std::string report;
    std::map<std::string, std::string> traces;
};

Snapshot snapshot(const BenchmarkResult& r, const fs::path& trace_dir) {
    Snapshot s;
    s.report = emit_report(label_rows("scenario", r.rows), ReportFormat::Table) +
               emit_report(label_rows("scenario", r.rows), ReportFormat::Csv);
    for (const auto& e : fs::directory_iterator(trace_dir)) s.traces[e.path().filename().string()] = read_file(e.path());
    return s;
}

void end_to_end(Check& c) {
    const auto start = Clock::now();
    TempDir dir;
    write_scenario_fixtures(dir.path());
    std::vector<Snapshot> snaps;
    BenchmarkResult first;
    for (int workers : {1, 4}) {
        auto services = services_for(scenario_script().backend(), dir.path());
        BenchmarkOptions o;
        o.workers = workers;
        o.trace_dir = dir.path() / ("w" + std::to_string(workers));
        auto r = run_benchmark(scenario_tasks(), small_config(), test_pricing(), services, o);
        snaps.push_back(snapshot(r, *o.trace_dir));
        if (workers == 1) first = std::move(r);
    }
    const auto& all = first.rows.front();
    c.expect(all.scope == Scope::All && all.task_count == 3 && all.solved_count == 2, "accuracy is not 2/3");
    c.expect(Money::from_usd(all.cost_of_pass).micros() == Money::from_usd(all.mean_cost_usd * 1.5).micros(),
             "cost_of_pass != mean cost x 1.5 in micro-dollars");
    std::int64_t ledger_sum = 0;
    for (const auto& o : first.outcomes) ledger_sum += o.cost.pico;
    c.expect(all.total_cost.pico == ledger_sum && Money::from_usd(all.mean_cost_usd * 3).micros() == Money{ledger_sum}.micros(),
             "accounting closure");

    std::vector<fs::path> recorded;
    for (const auto& e : fs::directory_iterator(dir.path() / "w1")) recorded.push_back(e.path());
    const auto replayed = replay_benchmark(recorded, PromptTemplates::builtin(), dir.path() / "replay");
    snaps.push_back(snapshot(replayed, dir.path() / "replay"));
    c.expect(replayed.outcomes == first.outcomes, "replayed outcomes differ");

    c.expect(snaps[0].traces.size() == 3, "expected 3 trace files");
    c.expect(snaps[0].report == snaps[1].report, "workers 1 vs 4: report bytes differ");
    c.expect(snaps[0].traces == snaps[1].traces, "workers 1 vs 4: trace bytes differ");
    c.expect(snaps[0].report == snaps[2].report, "replay: report bytes differ");
    c.expect(snaps[0].traces == snaps[2].traces, "replay: trace bytes differ");
    const double ms = elapsed_ms(start);
    c.expect(ms < 10000.0, "took " + std::to_string(ms) + " ms");
}

// Independent numeric reading: strip quotes, trailing periods, commas and percent signs.
std::optional<double> reference_number(std::string s) {
    auto trim = [](std::string& t) {
        while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
        while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
    };
    trim(s);
    for (bool changed = true; changed && !s.empty();) {
        changed = false;
        if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
            s = s.substr(1, s.size() - 2);
            changed = true;
        }
        if (!s.empty() && s.back() == '.') {
            s.pop_back();
            changed = true;
        }
        trim(s);
    }
    std::string digits;
    for (char ch : s) {
        if (ch != ',' && ch != '%') digits += ch;
    }
    if (digits.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(digits, &used);
        return used == digits.size() ? std::optional<double>(v) : std::nullopt;
    } catch (...) {
        return std::nullopt;
    }
}

std::string with_thousands(long long v) {
    const std::string s = std::to_string(v < 0 ? -v : v);
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i > 0 && (s.size() - i) % 3 == 0) out += ',';
        out += s[i];
    }
    return (v < 0 ? "-" : "") + out;
}

void grader_table(Check& c) {
    const std::vector<std::tuple<std::string, std::string, bool>> table{
        {"Paris ", "paris", true},
        {"3.0", "3", true},
        {"1,234", "1234", true},
        {"42", "41", false},
        {"\"Mount  Everest\".", "mount everest", true},
        {"12%", "12", true},
        {"blue, red, green", "green,blue,red", true},
        {"blue, red", "green, blue, red", false},
        {"Paris", "Lyon", false}};
    for (const auto& [a, e, want] : table) c.expect(grade(a, e) == want, "grade(\"" + a + "\", \"" + e + "\")");

    std::mt19937 rng(909);
    for (int i = 0; i < 20; ++i) {
        const long long base = static_cast<long long>(rng() % 100'000'000) - 50'000'000;
        const long long other = rng() % 3 == 0 ? base - 1 - static_cast<long long>(rng() % 99) : base;
        std::string a = with_thousands(base);
        std::string e = std::to_string(other);
        switch (rng() % 5) {
            case 0: a += ".00"; break;
            case 1: a = " " + a + ".  "; break;
            case 2: a = "'" + a + "'"; break;
            case 3: a += "%"; e += "%"; break;
            default: e = with_thousands(other) + ".0"; break;
        }
        const auto ra = reference_number(a), re = reference_number(e);
        if (!ra || !re) {
            c.expect(false, "reference normalizer rejected " + a + " / " + e);
            continue;
        }
        const bool want = std::abs(*ra - *re) <= 1e-9 * std::max(std::abs(*ra), std::abs(*re));
        c.expect(grade(a, e) == want, "grade(\"" + a + "\", \"" + e + "\")");
    }
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
        {"cost-of-pass oracle", cost_of_pass_oracle},
        {"comparison metrics", comparison_math},
        {"preset fidelity", preset_fidelity},
        {"plan cadence (200 scenarios)", plan_cadence},
        {"best-of-N accounting and selection", bon_accounting},
        {"memory suite", memory_suite},
        {"tool suite", tool_suite},
        {"end-to-end determinism", end_to_end},
        {"grader table", grader_table}};

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check check;
        const auto start = Clock::now();
        try {
            criteria[i].second(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const double ms = elapsed_ms(start);
        std::cout << (check.ok() ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << " ("
                  << std::fixed << std::setprecision(1) << ms << " ms)";
        if (!check.ok()) {
            std::cout << ": " << check.summary();
            ++failed;
        }
        std::cout << '\n';
    }
    return failed == 0 ? 0 : 1;
}
