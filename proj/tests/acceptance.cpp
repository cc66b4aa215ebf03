// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "e2e.hpp"
#include "fbk/annotate/chunks.hpp"
#include "fbk/core/stats.hpp"
#include "fbk/core/validate.hpp"
#include "fbk/eval/aggregate.hpp"
#include "fbk/eval/report.hpp"
#include "fbk/eval/tests.hpp"
#include "fbk/gateway/factory.hpp"
#include "fbk/segment/c99.hpp"
#include "planted.hpp"
#include "scenarios.hpp"
#include "support.hpp"

using namespace fbk;

namespace {

// Collects failed expectations for one criterion.
struct Check {
    std::vector<std::string> failures;
    std::string note;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

int g_failed = 0;

void criterion(const std::string& name, double limit_s, const std::function<void(Check&)>& body) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= limit_s) c.failures.push_back("runtime over " + std::to_string(limit_s) + " s");
    const bool ok = c.failures.empty();
    if (!ok) ++g_failed;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3fs", secs);
    std::cout << (ok ? "PASS " : "FAIL ") << name << " (" << buf << ")";
    if (!c.note.empty()) std::cout << " " << c.note;
    std::cout << "\n";
    for (const auto& f : c.failures) std::cout << "    - " << f << "\n";
}

void schema(Check& c) {
    std::size_t classified = 0;
    for (int appropriate = 0; appropriate < 2; ++appropriate) {
        for (int mask = 0; mask < 16; ++mask) {
            Feedback fb;
            fb.appropriate = appropriate == 1;
            const bool goal = mask & 1, areas = mask & 2, alt = mask & 4, pos = mask & 8;
            if (goal) fb.goal_alignment = "a goal";
            if (areas) fb.areas_for_improvement = SkillSet{SkillCategory::Questions};
            if (alt) fb.alternative = "an alternative";
            if (pos) fb.positive_areas = SkillSet{SkillCategory::Empathy};
            const bool expect_ok = fb.appropriate ? (!goal && !areas && !alt) : (goal && areas && alt);
            const auto r = validate_feedback(fb);
            bool right = r.ok() == expect_ok;
            if (fb.appropriate) {
                right = right && r.has(Violation::GoalOnAppropriate) == goal &&
                        r.has(Violation::AreasOnAppropriate) == areas && r.has(Violation::AlternativeOnAppropriate) == alt;
            } else {
                right = right && r.has(Violation::MissingGoal) == !goal && r.has(Violation::MissingAreas) == !areas &&
                        r.has(Violation::MissingAlternative) == !alt;
            }
            c.expect(right, "combination appropriate=" + std::to_string(appropriate) + " mask=" + std::to_string(mask));
            ++classified;
        }
    }
    c.expect(classified == 32, "32 combinations");
    std::mt19937_64 rng(7);
    std::size_t bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto fb = testkit::random_feedback(rng);
        const auto text = serialize_feedback(fb);
        bad += !(parse_feedback(text) == fb && serialize_feedback(parse_feedback(text)) == text);
    }
    c.expect(bad == 0, std::to_string(bad) + " of 1000 roundtrips failed");
    c.note = "32 combinations, 1000 roundtrips";
}

void self_scoring(Check& c) {
    auto gw = gateway::load_gateway(testkit::fixture_dir() / "backend.toml");
    const auto conv = make_conversation("c", {{Speaker::Seeker, "My exams went badly."},
                                              {Speaker::Helper, "I am sure it will be fine."}});
    const auto segs = seg::Segmentation::single(2);
    const auto fbs = gw->sample_feedback(selfimprove::query_for(conv, 1, segs), 4);
    std::vector<double> sig;
    for (const auto& fb : fbs) sig.push_back(selfimprove::self_score(conv, 1, fb, segs, *gw));
    c.expect(sig == std::vector<double>{0.4, 0.1, 0.7, 0.9}, "fixture script sigmas differ from rule outputs");
    const auto bad = testkit::substitution_violations(200, 42);
    c.expect(bad == 0, std::to_string(bad) + " of 200 substitutions broke the conversation");
    c.note = "sigmas 0.4/0.1/0.7/0.9, 200 substitutions";
}

void pairs(Check& c) {
    const auto conv = testkit::pair_conversation();
    const auto segs = seg::Segmentation::single(2);
    auto gw = testkit::pair_gateway(0.49, {0.2, 0.9, 0.6});
    const auto p = selfimprove::build_pair(conv, 1, 3, segs, *gw);
    c.expect(p && p->chosen.sample_index == 1 && p->rejected.sample_index == 0, "hand trace: chosen 1, rejected 0");
    auto gate = testkit::pair_gateway(0.5, {0.2, 0.9, 0.6});
    c.expect(!selfimprove::build_pair(conv, 1, 3, segs, *gate), "p_original 0.5 must give no pair");
    auto equal = testkit::pair_gateway(0.1, {0.6, 0.6, 0.6});
    c.expect(!selfimprove::build_pair(conv, 1, 3, segs, *equal), "equal sigmas must give no pair");
    const auto st = testkit::run_pair_trials(1000, 7);
    c.expect(st.violations == 0, std::to_string(st.violations) + " randomized trials violated the pair rules");
    c.note = std::to_string(st.pairs) + " pairs in " + std::to_string(st.trials) + " trials";
}

// Exact two-sided p by enumerating relabellings, U from pairwise comparisons.
double brute_force_mwu(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = pooled.size(), na = a.size();
    auto u2 = [&](std::uint32_t mask) {
        long s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(mask >> i & 1)) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (mask >> j & 1) continue;
                s += pooled[i] > pooled[j] ? 2 : pooled[i] == pooled[j] ? 1 : 0;
            }
        }
        return s;
    };
    const long mu2 = static_cast<long>(na * b.size());
    const long obs = std::labs(u2((1u << na) - 1) - mu2);
    long hit = 0, total = 0;
    for (std::uint32_t m = 0; m < (1u << n); ++m) {
        if (static_cast<std::size_t>(__builtin_popcount(m)) != na) continue;
        ++total;
        hit += std::labs(u2(m) - mu2) >= obs;
    }
    return static_cast<double>(hit) / static_cast<double>(total);
}

void statistics(Check& c) {
    std::mt19937_64 rng(99);
    std::size_t mwu_cases = 0;
    for (std::size_t na = 1; na <= 7; ++na) {
        for (std::size_t nb = 1; nb <= 7; ++nb) {
            for (int rep = 0; rep < 3; ++rep) {
                std::vector<double> a(na), b(nb);
                for (auto& v : a) v = rep == 0 ? static_cast<double>(rng() % 100000) / 1e5 : static_cast<double>(rng() % (2 + rep));
                for (auto& v : b) v = rep == 0 ? static_cast<double>(rng() % 100000) / 1e5 : static_cast<double>(rng() % (2 + rep));
                const auto r = eval::mann_whitney_u(a, b);
                const double ref = brute_force_mwu(a, b);
                c.expect(r.exact && std::fabs(r.p - ref) <= 1e-9,
                         "Mann-Whitney " + std::to_string(na) + "x" + std::to_string(nb));
                ++mwu_cases;
            }
        }
    }
    // scipy.stats.ttest_ind(equal_var=False) reference values
    struct Welch {
        std::vector<double> a, b;
        double t, p;
    };
    const std::vector<Welch> fixtures = {
        {{1, 2, 3}, {11, 12, 13}, -12.24744871391589, 0.00025521674944192687},
        {{1.2, 3.4, 2.2, 5.1, 4.4}, {2.0, 2.5, 1.1, 0.7}, 2.0546361553818393, 0.08415203937850081},
        {{0.91, 0.85, 0.99, 0.7, 0.88, 0.93}, {0.5, 0.62, 0.81, 0.77, 0.4, 0.69, 0.58}, 3.694496799513981,
         0.0038079329807242713},
    };
    for (const auto& f : fixtures) {
        const auto r = eval::t_test(f.a, f.b);
        c.expect(std::fabs(r.t - f.t) <= 1e-9 && std::fabs(r.p - f.p) <= 1e-6, "Welch fixture t=" + std::to_string(f.t));
    }
    const int pcts[] = {1, 5, 10, 25, 50, 100};
    std::size_t wf_bad = 0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 1 + rng() % 3000;
        std::vector<double> v(n);
        for (auto& x : v) x = static_cast<double>(rng() % 1001) / 1000.0;
        const int pct = pcts[rng() % 6];
        const std::size_t k = std::max<std::size_t>(1, (static_cast<std::size_t>(pct) * n + 99) / 100);
        auto s = v;
        std::sort(s.begin(), s.end());
        long double sum = 0;
        for (std::size_t i = 0; i < k; ++i) sum += s[i];
        wf_bad += std::fabs(eval::worst_fraction_mean(v, pct / 100.0) - static_cast<double>(sum / k)) > 1e-12;
    }
    c.expect(wf_bad == 0, std::to_string(wf_bad) + " of 1000 worst-fraction means differ from the sort oracle");
    c.expect(eval::worst_subset_size(8090, 0.01) == 81, "subset size for N=8090, f=0.01");
    c.note = std::to_string(mwu_cases) + " exact MWU cases, 3 Welch fixtures, 1000 worst-fraction inputs";
}

void segmentation(Check& c) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        hits += seg::segment_embeddings(testkit::planted_clusters(5, 5, 0.02, seed)).boundaries() ==
                std::vector<std::size_t>{0, 5};
    }
    c.expect(hits >= 95, "planted boundary recovered in " + std::to_string(hits) + "/100 trials");
    std::size_t cases = 0, bad = 0;
    for (std::size_t n = 1; n <= 7; ++n) {
        for (std::uint32_t bits = 0; bits < (1u << (n - 1)); ++bits) {
            std::vector<std::size_t> b{0};
            for (std::size_t k = 1; k < n; ++k) {
                if (bits & (1u << (k - 1))) b.push_back(k);
            }
            const seg::Segmentation s(b, n);
            std::vector<int> id(n);
            int cur = -1;
            for (std::size_t k = 0; k < n; ++k) {
                if (std::find(b.begin(), b.end(), k) != b.end()) ++cur;
                id[k] = cur;
            }
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t lo = 0;
                while (id[lo] < id[i] - 1) ++lo;
                const auto w = seg::context_for(i, s);
                bad += !(w.lo == lo && w.hi() == i);
                ++cases;
            }
        }
    }
    c.expect(bad == 0, std::to_string(bad) + " context windows differ from the table");
    c.expect(seg::context_for(5, seg::Segmentation({0, 4, 8}, 10)).lo == 0, "[0,4,8] at 5");
    c.expect(seg::context_for(9, seg::Segmentation({0, 4, 8}, 10)).lo == 4, "[0,4,8] at 9");
    c.note = std::to_string(hits) + "/100 planted trials, " + std::to_string(cases) + " context cases";
}

void chunks(Check& c) {
    for (std::size_t h = 1; h <= 40; ++h) {
        std::vector<std::size_t> helpers;
        for (std::size_t i = 0; i < h; ++i) helpers.push_back(2 * i + 1);
        std::vector<std::size_t> kept;
        for (const auto& ch : annotate::plan_chunks(helpers).chunks) kept.insert(kept.end(), ch.kept.begin(), ch.kept.end());
        c.expect(kept == helpers, "kept sets do not partition H=" + std::to_string(h));
    }
    const auto plan = annotate::plan_chunks({1, 2, 3, 4, 5, 6, 7, 8, 9});
    c.expect(plan.chunks.size() == 3 && plan.chunks[0].kept == std::vector<std::size_t>{1, 2, 3, 4, 5} &&
                 plan.chunks[1].kept == std::vector<std::size_t>{6, 7, 8} && plan.chunks[2].kept == std::vector<std::size_t>{9},
             "H=9 plan is not [1-5]/[6-8]/[9]");
    c.note = "H in [1, 40]";
}

void determinism(Check& c) {
    const auto dir = testkit::scratch_dir("acceptance_e2e");
    const int a = testkit::run_fixture_pipeline(dir / "one");
    const int b = testkit::run_fixture_pipeline(dir / "two");
    c.expect(a == 0 && b == 0, "exit codes " + std::to_string(a) + ", " + std::to_string(b));
    const auto one = testkit::snapshot(dir / "one");
    std::set<std::string> names;
    for (const auto& [k, _] : one) names.insert(k);
    c.expect(names == testkit::expected_artifacts(), "artifact set differs from the expected list");
    const auto x = testkit::snapshot(dir / "one", {"run_log.jsonl"});
    const auto y = testkit::snapshot(dir / "two", {"run_log.jsonl"});
    for (const auto& [k, v] : x) {
        auto it = y.find(k);
        c.expect(it != y.end() && it->second == v, k + " differs between runs");
    }
    c.expect(x.size() == y.size(), "artifact counts differ");
    c.note = std::to_string(x.size()) + " artifacts compared";
    std::filesystem::remove_all(dir);
}

void ordering(Check& c) {
    const auto fam = testkit::run_system_family();
    c.expect(fam.inexact == 0, "scored sigmas differ from the scripted values");
    const auto rep = eval::build_report(fam.systems, {"baseline", 0.01});
    for (const auto& s : rep.systems) {
        c.expect(s.means[1] < s.means[2] && s.means[2] < s.means[0], s.name + ": worst1 < worst5 < overall");
    }
    const auto& b = rep.system("baseline");
    const auto& i = rep.system("improved");
    for (std::size_t r = 0; r < 3; ++r) {
        c.expect(i.means[r] > b.means[r], std::string("improved not higher on ") + eval::row_key(eval::kRows[r]));
    }
    for (const auto& t : rep.tests) {
        c.expect(t.significant && t.t && t.t->p < 0.01 && t.u.p < 0.01,
                 std::string("no star on ") + eval::row_key(t.row));
    }
    std::ostringstream note;
    note << fam.helper_utterances << " utterances x 10; overall " << eval::format_fixed(b.means[0]) << " vs "
         << eval::format_fixed(i.means[0]) << ", worst 1% " << eval::format_fixed(b.means[1]) << " vs "
         << eval::format_fixed(i.means[1]);
    c.note = note.str();
}

void dataset_stats_check(Check& c) {
    const auto data = load_dataset(testkit::fixture_dir() / "stats_mini.jsonl");
    const auto s = dataset_stats(data);
    c.expect(s.n_sessions == 3 && s.n_utterances == 3 && s.n_total_utterances == 9, "mini fixture counts");
    c.expect(s.n_appropriate == 1 && s.n_inappropriate == 2, "mini fixture appropriate split");
    c.expect(s.avg_alt_len == 5.0 && s.avg_goal_len == 5.0, "mini fixture average lengths");
    c.expect(s.positive_counts[static_cast<int>(SkillCategory::Empathy)] == 2 &&
                 s.improve_counts[static_cast<int>(SkillCategory::Reflections)] == 1,
             "mini fixture category counts");
    const char* full = std::getenv("FBK_RELEASED_DATASET");
    if (!full || !*full) {
        c.note = "mini fixture; released-dataset check skipped (FBK_RELEASED_DATASET unset)";
        return;
    }
    const auto t = dataset_stats(load_dataset(full));
    c.expect(t.n_sessions == 400, "sessions " + std::to_string(t.n_sessions));
    c.expect(t.n_utterances == 8179, "utterances " + std::to_string(t.n_utterances));
    c.expect(t.n_appropriate == 4721, "appropriate " + std::to_string(t.n_appropriate));
    c.expect(t.n_inappropriate == 3458, "inappropriate " + std::to_string(t.n_inappropriate));
    c.expect(std::fabs(t.avg_alt_len - 28.3) < 0.05, "avg alternative length " + std::to_string(t.avg_alt_len));
    c.expect(std::fabs(t.avg_goal_len - 36.6) < 0.05, "avg goal length " + std::to_string(t.avg_goal_len));
    c.note = "mini fixture and released dataset";
}

}  // namespace

int main() {
    criterion("schema-suite", 5, schema);
    criterion("self-scoring-contract", 5, self_scoring);
    criterion("pair-construction", 10, pairs);
    criterion("statistics-oracles", 60, statistics);
    criterion("segmentation", 30, segmentation);
    criterion("chunk-planning", 1, chunks);
    criterion("end-to-end-determinism", 60, determinism);
    criterion("qualitative-ordering", 60, ordering);
    criterion("dataset-stats", 60, dataset_stats_check);
    std::cout << (g_failed ? "FAILED: " + std::to_string(g_failed) + " criteria\n" : "ALL CRITERIA PASSED\n");
    return g_failed ? 1 : 0;
}
