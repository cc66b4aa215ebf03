#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "fbk/segment/c99.hpp"

namespace fbk::testkit {

// Two clusters of unit vectors: pairwise cosine 0.9 inside a cluster and
// 0.09 across, before adding N(0, noise) to every component.
inline seg::EmbeddingMatrix planted_clusters(std::size_t left, std::size_t right, double noise, std::uint64_t seed) {
    const std::size_t n = left + right;
    const std::size_t dim = 2 + n;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise);
    std::vector<double> ca(dim, 0.0), cb(dim, 0.0);
    ca[0] = 1.0;
    cb[0] = 0.1;
    cb[1] = std::sqrt(1.0 - 0.01);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = i < left ? ca : cb;
        std::vector<double> v(dim);
        for (std::size_t k = 0; k < dim; ++k) v[k] = std::sqrt(0.9) * c[k];
        v[2 + i] += std::sqrt(0.1);
        for (auto& x : v) x += gauss(rng);
        rows.push_back(std::move(v));
    }
    return seg::EmbeddingMatrix(std::move(rows));
}

}  // namespace fbk::testkit
