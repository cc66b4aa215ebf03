#pragma once

// C99 linear segmentation over a sentence-similarity matrix: cosine
// similarities, local rank transform, then divisive boundary insertion that
// maximises inside density, stopped by a gradient threshold.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "fbk/error.hpp"
#include "fbk/segment/context.hpp"
#include "fbk/segment/matrix.hpp"

namespace fbk::seg {

inline Matrix cosine_similarity_matrix(const EmbeddingMatrix& e) {
    const std::size_t n = e.size();
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double v : e.row(i)) s += v * v;
        norms[i] = std::sqrt(s);
        if (norms[i] == 0.0) throw ZeroNormEmbedding(i);
    }
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
        const auto& a = e.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& b = e.row(j);
            double dot = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
            const double v = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

// Each entry becomes the share of its neighbours (mask x mask window centred
// on it, clipped at the edges, self excluded) holding a strictly smaller value.
inline Matrix rank_transform(const Matrix& s, std::size_t mask) {
    if (mask < 3 || mask % 2 == 0) throw PreconditionError("rank mask must be an odd integer >= 3");
    if (s.rows() != s.cols()) throw PreconditionError("rank_transform needs a square matrix");
    const std::size_t n = s.rows();
    if (n <= 1) return Matrix(n, n, 0.0);
    if (mask > 2 * n - 1) {
        throw MaskTooLarge("mask " + std::to_string(mask) + " exceeds 2n-1 = " + std::to_string(2 * n - 1));
    }
    const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(mask / 2);
    const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(n);
    Matrix out(n, n);
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
        for (std::ptrdiff_t j = 0; j < sn; ++j) {
            const double v = s(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            std::size_t smaller = 0, total = 0;
            for (std::ptrdiff_t a = std::max<std::ptrdiff_t>(0, i - r); a <= std::min(sn - 1, i + r); ++a) {
                for (std::ptrdiff_t b = std::max<std::ptrdiff_t>(0, j - r); b <= std::min(sn - 1, j + r); ++b) {
                    if (a == i && b == j) continue;
                    ++total;
                    if (s(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) < v) ++smaller;
                }
            }
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                total ? static_cast<double>(smaller) / static_cast<double>(total) : 0.0;
        }
    }
    return out;
}

// Largest odd mask not above min(mask, 2n-1), never below 3.
inline std::size_t effective_mask(std::size_t mask, std::size_t n) {
    if (n <= 1) return mask;
    const std::size_t cap = 2 * n - 1;
    return std::max<std::size_t>(3, std::min(mask, cap));
}

// Stop when the density gain of the next split drops below mean + c * stddev
// of all gains observed while splitting to exhaustion, or stops being positive.
struct StopRule {
    double c = 1.2;
    std::optional<std::size_t> max_segments;
};

namespace detail {

class BlockSums {
public:
    explicit BlockSums(const Matrix& m) : n_(m.rows()), p_((n_ + 1) * (n_ + 1), 0.0) {
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                at(i + 1, j + 1) = m(i, j) + at(i, j + 1) + at(i + 1, j) - at(i, j);
            }
        }
    }
    // Sum over the square block [a, b) x [a, b).
    double block(std::size_t a, std::size_t b) const { return cat(b, b) - cat(a, b) - cat(b, a) + cat(a, a); }

private:
    double& at(std::size_t i, std::size_t j) { return p_[i * (n_ + 1) + j]; }
    double cat(std::size_t i, std::size_t j) const { return p_[i * (n_ + 1) + j]; }
    std::size_t n_;
    std::vector<double> p_;
};

}  // namespace detail

// Full split trace: the boundary chosen at each step and the inside density
// after it (densities[0] is the unsplit density).
struct SplitTrace {
    std::vector<std::size_t> splits;
    std::vector<double> densities;
};

inline SplitTrace c99_split_trace(const Matrix& rank, std::size_t min_seg) {
    if (rank.rows() != rank.cols()) throw PreconditionError("c99 needs a square matrix");
    if (min_seg < 1) throw PreconditionError("min_seg must be >= 1");
    const std::size_t n = rank.rows();
    SplitTrace trace;
    if (n == 0) return trace;
    detail::BlockSums sums(rank);
    std::vector<std::size_t> bounds = {0, n};  // sorted, sentinel n
    double total_s = sums.block(0, n);
    double total_a = static_cast<double>(n) * static_cast<double>(n);
    trace.densities.push_back(total_s / total_a);

    while (true) {
        std::optional<std::size_t> best;
        double best_d = 0.0, best_s = 0.0, best_a = 0.0;
        std::size_t seg = 0;
        for (std::size_t p = 1; p < n; ++p) {
            while (bounds[seg + 1] <= p) ++seg;
            const std::size_t a = bounds[seg];
            const std::size_t b = bounds[seg + 1];
            if (p == a || p - a < min_seg || b - p < min_seg) continue;
            const double ns = total_s - sums.block(a, b) + sums.block(a, p) + sums.block(p, b);
            const double la = static_cast<double>(p - a), lb = static_cast<double>(b - p), l = static_cast<double>(b - a);
            const double na = total_a - l * l + la * la + lb * lb;
            const double d = ns / na;
            if (!best || d > best_d) {
                best = p;
                best_d = d;
                best_s = ns;
                best_a = na;
            }
        }
        if (!best) break;
        bounds.insert(std::upper_bound(bounds.begin(), bounds.end(), *best), *best);
        total_s = best_s;
        total_a = best_a;
        trace.splits.push_back(*best);
        trace.densities.push_back(best_d);
    }
    return trace;
}

inline Segmentation c99_segment(const Matrix& rank, std::size_t min_seg, const StopRule& stop = {}) {
    const auto trace = c99_split_trace(rank, min_seg);
    if (rank.rows() == 0) throw PreconditionError("c99 needs a non-empty matrix");
    const std::size_t k = trace.splits.size();
    std::size_t accepted = 0;
    if (k > 0) {
        std::vector<double> grad(k);
        double mean = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            grad[i] = trace.densities[i + 1] - trace.densities[i];
            mean += grad[i];
        }
        mean /= static_cast<double>(k);
        double var = 0.0;
        for (double g : grad) var += (g - mean) * (g - mean);
        var /= static_cast<double>(k);
        const double threshold = mean + stop.c * std::sqrt(var);
        for (double g : grad) {
            if (!(g > 0.0) || g < threshold) break;
            ++accepted;
        }
    }
    if (stop.max_segments && *stop.max_segments >= 1) accepted = std::min(accepted, *stop.max_segments - 1);
    std::vector<std::size_t> b = {0};
    b.insert(b.end(), trace.splits.begin(), trace.splits.begin() + static_cast<std::ptrdiff_t>(accepted));
    std::sort(b.begin(), b.end());
    return Segmentation(std::move(b), rank.rows());
}

struct SegmentParams {
    std::size_t mask = 11;
    std::size_t min_seg = 2;
    StopRule stop{};
};

// Embeddings in, segmentation out. Short conversations use a clamped mask.
inline Segmentation segment_embeddings(const EmbeddingMatrix& e, const SegmentParams& params = {}) {
    const auto sim = cosine_similarity_matrix(e);
    const auto rank = rank_transform(sim, effective_mask(params.mask, e.size()));
    return c99_segment(rank, params.min_seg, params.stop);
}

}  // namespace fbk::seg
