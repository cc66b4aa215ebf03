#pragma once

#include <array>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "fbk/eval/aggregate.hpp"
#include "fbk/eval/scores.hpp"
#include "fbk/eval/tests.hpp"

namespace fbk::eval {

enum class Row { Overall, Worst1, Worst5 };
inline constexpr std::array<Row, 3> kRows{Row::Overall, Row::Worst1, Row::Worst5};

inline double row_fraction(Row r) {
    switch (r) {
        case Row::Overall: return 1.0;
        case Row::Worst1: return 0.01;
        case Row::Worst5: return 0.05;
    }
    return 1.0;
}

inline const char* row_key(Row r) {
    switch (r) {
        case Row::Overall: return "overall";
        case Row::Worst1: return "worst_1pct";
        case Row::Worst5: return "worst_5pct";
    }
    return "?";
}

inline const char* row_label(Row r) {
    switch (r) {
        case Row::Overall: return "Mean Score Overall";
        case Row::Worst1: return "Mean Score Worst 1%";
        case Row::Worst5: return "Mean Score Worst 5%";
    }
    return "?";
}

struct SystemSummary {
    std::string name;
    std::size_t n = 0;
    std::array<double, 3> means{};          // by Row
    std::array<std::size_t, 3> subset_sizes{};
};

struct PairwiseTest {
    std::string system;
    std::string baseline;
    Row row = Row::Overall;
    std::optional<TTestResult> t;
    MannWhitneyResult u;
    bool significant = false;  // both p below alpha and the mean above the baseline's
    std::string note;
};

struct AggregateReport {
    std::string baseline;
    double alpha = 0.01;
    std::vector<SystemSummary> systems;
    std::vector<PairwiseTest> tests;

    const SystemSummary& system(const std::string& name) const {
        for (const auto& s : systems) if (s.name == name) return s;
        throw PreconditionError("no system named '" + name + "' in report");
    }
    const PairwiseTest* test(const std::string& name, Row r) const {
        for (const auto& t : tests) if (t.system == name && t.row == r) return &t;
        return nullptr;
    }
};

struct NamedScores {
    std::string name;
    EvalSampleSet scores;
};

struct ReportOptions {
    std::string baseline;  // empty: the first system
    double alpha = 0.01;
};

inline AggregateReport build_report(const std::vector<NamedScores>& systems, ReportOptions opt = {}) {
    if (systems.empty()) throw PreconditionError("build_report needs at least one system");
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw PreconditionError("alpha must lie in (0, 1)");
    AggregateReport rep;
    rep.alpha = opt.alpha;
    rep.baseline = opt.baseline.empty() ? systems.front().name : opt.baseline;

    const NamedScores* base = nullptr;
    std::set<std::string> names;
    for (const auto& s : systems) {
        if (!names.insert(s.name).second) throw PreconditionError("duplicate system name '" + s.name + "'");
        if (s.scores.empty()) throw EmptyInput("system '" + s.name + "' has no scores");
        if (s.name == rep.baseline) base = &s;
    }
    if (!base) throw PreconditionError("baseline '" + rep.baseline + "' is not among the systems");
    const auto keys_of = [](const EvalSampleSet& s) {
        std::vector<EvalKey> k;
        for (const auto& [key, _] : s.entries()) k.push_back(key);
        return k;
    };
    const auto base_keys = keys_of(base->scores);
    for (const auto& s : systems) {
        if (keys_of(s.scores) != base_keys) {
            throw MismatchedSystems("system '" + s.name + "' is not scored on the same (conversation, utterance, sample) keys as '" +
                                    rep.baseline + "'");
        }
    }

    std::map<std::string, std::vector<double>> sorted;
    for (const auto& s : systems) {
        auto v = s.scores.sigmas();
        std::sort(v.begin(), v.end());
        SystemSummary sum;
        sum.name = s.name;
        sum.n = v.size();
        for (std::size_t r = 0; r < kRows.size(); ++r) {
            sum.subset_sizes[r] = worst_subset_size(v.size(), row_fraction(kRows[r]));
            sum.means[r] = sorted_prefix_mean(v, sum.subset_sizes[r]);
        }
        rep.systems.push_back(sum);
        sorted.emplace(s.name, std::move(v));
    }

    const auto& bsum = rep.system(rep.baseline);
    const auto& bv = sorted.at(rep.baseline);
    for (const auto& sum : rep.systems) {
        if (sum.name == rep.baseline) continue;
        const auto& sv = sorted.at(sum.name);
        for (std::size_t r = 0; r < kRows.size(); ++r) {
            PairwiseTest pt;
            pt.system = sum.name;
            pt.baseline = rep.baseline;
            pt.row = kRows[r];
            const std::span<const double> a(sv.data(), sum.subset_sizes[r]);
            const std::span<const double> b(bv.data(), bsum.subset_sizes[r]);
            pt.u = mann_whitney_u(a, b);
            if (a.size() < 2 || b.size() < 2) {
                pt.note = "t-test needs at least 2 values per subset";
            } else {
                try {
                    pt.t = t_test(a, b);
                } catch (const ZeroVariance&) {
                    pt.note = "t-test undefined: both subsets constant and equal";
                }
            }
            pt.significant = pt.t && pt.t->p < rep.alpha && pt.u.p < rep.alpha && sum.means[r] > bsum.means[r];
            rep.tests.push_back(std::move(pt));
        }
    }
    return rep;
}

inline std::string format_fixed(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline ordered_json report_to_json(const AggregateReport& rep) {
    ordered_json j;
    j["baseline"] = rep.baseline;
    j["alpha"] = rep.alpha;
    j["systems"] = ordered_json::array();
    for (const auto& s : rep.systems) {
        ordered_json o;
        o["name"] = s.name;
        o["n"] = s.n;
        for (std::size_t r = 0; r < kRows.size(); ++r) o[std::string("mean_") + row_key(kRows[r])] = s.means[r];
        ordered_json sizes;
        for (std::size_t r = 0; r < kRows.size(); ++r) sizes[row_key(kRows[r])] = s.subset_sizes[r];
        o["subset_sizes"] = sizes;
        j["systems"].push_back(o);
    }
    j["tests"] = ordered_json::array();
    for (const auto& t : rep.tests) {
        ordered_json o;
        o["system"] = t.system;
        o["baseline"] = t.baseline;
        o["row"] = row_key(t.row);
        if (t.t) {
            o["t"] = std::isfinite(t.t->t) ? ordered_json(t.t->t) : ordered_json(t.t->t > 0 ? "inf" : "-inf");
            o["t_df"] = t.t->df;
            o["t_p"] = t.t->p;
        } else {
            o["t"] = nullptr;
            o["t_df"] = nullptr;
            o["t_p"] = nullptr;
        }
        o["u"] = t.u.u;
        o["u_p"] = t.u.p;
        o["u_exact"] = t.u.exact;
        o["significant"] = t.significant;
        if (!t.note.empty()) o["note"] = t.note;
        j["tests"].push_back(o);
    }
    return j;
}

inline std::string pad_right(std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

inline std::string pad_left(std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
}

// Rows are the three aggregates, columns the systems in input order. A '*'
// follows a value significantly above the baseline's in both tests.
inline std::string render_table(const AggregateReport& rep) {
    std::size_t label_w = std::string("Method").size();
    for (auto r : kRows) label_w = std::max(label_w, std::string(row_label(r)).size());
    std::vector<std::size_t> col_w;
    for (const auto& s : rep.systems) col_w.push_back(std::max<std::size_t>(s.name.size(), 6) + 2);

    std::string out = pad_right("Method", label_w);
    for (std::size_t c = 0; c < rep.systems.size(); ++c) out += pad_left(rep.systems[c].name, col_w[c]) + " ";
    out += '\n';
    for (std::size_t r = 0; r < kRows.size(); ++r) {
        out += pad_right(row_label(kRows[r]), label_w);
        for (std::size_t c = 0; c < rep.systems.size(); ++c) {
            const auto* t = rep.test(rep.systems[c].name, kRows[r]);
            out += pad_left(format_fixed(rep.systems[c].means[r]), col_w[c]);
            out += (t && t->significant) ? "*" : " ";
        }
        out += '\n';
    }
    char alpha[32];
    std::snprintf(alpha, sizeof alpha, "%g", rep.alpha);
    out += "* p < " + std::string(alpha) + " vs " + rep.baseline + " in both the t-test and the Mann-Whitney U test\n";
    return out;
}

inline constexpr std::size_t kHistogramBins = 20;

// Bin counts over [0, 1]; the last bin is closed.
inline std::string histogram_csv(const std::vector<NamedScores>& systems, std::size_t bins = kHistogramBins) {
    if (bins == 0) throw PreconditionError("histogram needs at least one bin");
    std::vector<std::vector<std::size_t>> counts(systems.size(), std::vector<std::size_t>(bins, 0));
    for (std::size_t s = 0; s < systems.size(); ++s) {
        for (double v : systems[s].scores.sigmas()) {
            auto b = static_cast<std::size_t>(v * static_cast<double>(bins));
            counts[s][std::min(b, bins - 1)]++;
        }
    }
    std::string out = "bin_lo,bin_hi";
    for (const auto& s : systems) out += "," + s.name;
    out += '\n';
    for (std::size_t b = 0; b < bins; ++b) {
        out += format_fixed(static_cast<double>(b) / static_cast<double>(bins), 4) + "," +
               format_fixed(static_cast<double>(b + 1) / static_cast<double>(bins), 4);
        for (std::size_t s = 0; s < systems.size(); ++s) out += "," + std::to_string(counts[s][b]);
        out += '\n';
    }
    return out;
}

}  // namespace fbk::eval
