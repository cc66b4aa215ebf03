#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fbk/error.hpp"

namespace fbk::eval {

// ceil(f * N), clamped to [1, N]. The 1e-9 slack keeps products such as
// 0.07 * 100 = 7.000000000000001 from rounding up to an extra element.
inline std::size_t worst_subset_size(std::size_t n, double f) {
    if (!(f > 0.0 && f <= 1.0)) throw PreconditionError("worst fraction must lie in (0, 1]");
    if (n == 0) throw EmptyInput("worst fraction of an empty sample");
    const double raw = std::ceil(f * static_cast<double>(n) - 1e-9);
    const auto k = static_cast<std::size_t>(std::max(1.0, raw));
    return std::min(k, n);
}

// Mean of the first k values of an ascending sequence. The running update
// never decreases along a sorted sequence, so means over growing prefixes
// are ordered exactly.
inline double sorted_prefix_mean(std::span<const double> sorted, std::size_t k) {
    double m = 0.0;
    for (std::size_t i = 0; i < k; ++i) m += (sorted[i] - m) / static_cast<double>(i + 1);
    return m;
}

inline double worst_fraction_mean(std::span<const double> values, double f) {
    const auto k = worst_subset_size(values.size(), f);
    std::vector<double> v(values.begin(), values.end());
    for (double x : v) if (std::isnan(x)) throw DataError("worst_fraction_mean: NaN in sample");
    std::sort(v.begin(), v.end());
    return sorted_prefix_mean(v, k);
}

inline std::vector<double> worst_subset(std::span<const double> values, double f) {
    const auto k = worst_subset_size(values.size(), f);
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    v.resize(k);
    return v;
}

}  // namespace fbk::eval
