#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "fbk/error.hpp"
#include "fbk/eval/special.hpp"

namespace fbk::eval {

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

// Welch's unequal-variance t-test, two-sided.
inline TTestResult t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw PreconditionError("t_test needs at least 2 values per sample");
    auto moments = [](std::span<const double> x) {
        double m = 0.0;
        for (double v : x) m += v;
        m /= static_cast<double>(x.size());
        double ss = 0.0;
        for (double v : x) ss += (v - m) * (v - m);
        return std::pair{m, ss / static_cast<double>(x.size() - 1)};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double sa = va / na, sb = vb / nb;
    const double se2 = sa + sb;
    TTestResult r;
    if (se2 == 0.0) {
        if (ma == mb) throw ZeroVariance("t_test: both samples are constant and equal");
        r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.df = na + nb - 2.0;
        r.p = 0.0;
        return r;
    }
    r.t = (ma - mb) / std::sqrt(se2);
    r.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    r.p = student_t_two_sided(r.t, r.df);
    return r;
}

struct MannWhitneyResult {
    double u = 0.0;  // statistic for the first sample
    double p = 1.0;
    bool exact = false;
};

inline constexpr std::size_t kExactProductLimit = 64;

namespace detail {

// Midranks of the pooled sample, doubled so they are integers.
inline std::vector<std::int64_t> doubled_midranks(std::span<const double> pooled, std::vector<double>* tie_sizes) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return pooled[x] < pooled[y]; });
    std::vector<std::int64_t> r2(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        // ranks i+1 .. j+1, midrank (i + j + 2) / 2, doubled
        const auto rank2 = static_cast<std::int64_t>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) r2[order[k]] = rank2;
        if (tie_sizes && j > i) tie_sizes->push_back(static_cast<double>(j - i + 1));
        i = j + 1;
    }
    return r2;
}

}  // namespace detail

// Mann-Whitney U with midranks for ties. The p-value is two-sided: exact
// over the permutation distribution of the pooled midranks when
// |a|*|b| <= 64, otherwise the normal approximation with tie and continuity
// corrections.
inline MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw PreconditionError("mann_whitney_u needs at least 1 value per sample");
    for (double v : a) if (std::isnan(v)) throw DataError("mann_whitney_u: NaN in sample");
    for (double v : b) if (std::isnan(v)) throw DataError("mann_whitney_u: NaN in sample");
    const std::size_t na = a.size(), nb = b.size(), n = na + nb;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<double> ties;
    const auto r2 = detail::doubled_midranks(pooled, &ties);
    std::int64_t rsum2 = 0;
    for (std::size_t i = 0; i < na; ++i) rsum2 += r2[i];

    MannWhitneyResult r;
    r.u = static_cast<double>(rsum2) / 2.0 - static_cast<double>(na * (na + 1)) / 2.0;
    const double mu = static_cast<double>(na * nb) / 2.0;

    if (na * nb <= kExactProductLimit) {
        // count[k][s]: subsets of size k of the pooled items with doubled rank sum s
        std::int64_t max_sum = 0;
        for (auto v : r2) max_sum += v;
        std::vector<std::vector<double>> count(na + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
        count[0][0] = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto w = static_cast<std::size_t>(r2[i]);
            for (std::size_t k = std::min(i + 1, na); k >= 1; --k) {
                auto& dst = count[k];
                const auto& src = count[k - 1];
                for (std::size_t s = dst.size(); s-- > w;) dst[s] += src[s - w];
            }
        }
        // null mean of the doubled rank sum is na * (n + 1)
        const auto centre = static_cast<std::int64_t>(na * (n + 1));
        const auto dev = std::llabs(rsum2 - centre);
        double hit = 0.0, total = 0.0;
        for (std::size_t s = 0; s < count[na].size(); ++s) {
            const double c = count[na][s];
            if (c == 0.0) continue;
            total += c;
            if (std::llabs(static_cast<std::int64_t>(s) - centre) >= dev) hit += c;
        }
        r.p = std::min(1.0, hit / total);
        r.exact = true;
        return r;
    }

    double tie_term = 0.0;
    for (double t : ties) tie_term += t * t * t - t;
    const double nd = static_cast<double>(n);
    const double var = static_cast<double>(na * nb) / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    if (!(var > 0.0)) {
        r.p = 1.0;
        return r;
    }
    const double z = std::max(0.0, std::fabs(r.u - mu) - 0.5) / std::sqrt(var);
    r.p = normal_two_sided(z);
    return r;
}

}  // namespace fbk::eval
