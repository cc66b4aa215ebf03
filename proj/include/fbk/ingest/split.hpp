#pragma once

// Seeded splits. The permutation is a Fisher-Yates shuffle driven by
// std::mt19937_64 (whose output sequence is fixed by the C++ standard) with
// bounded draws by rejection sampling, so membership is reproducible across
// platforms and implementations:
//
//   for i = n-1 down to 1: j = uniform(0..i); swap(perm[i], perm[j])
//   uniform(0..i): draw x until x >= (2^64 mod (i+1)); return x mod (i+1)
//
// Splits take consecutive runs of the permutation in spec order; members of
// each split are then listed in corpus order.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fbk/error.hpp"
#include "fbk/util/text.hpp"

namespace fbk::ingest {

struct SplitSpec {
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::size_t>> sizes;
};

// "annotate=400,prefs=150,test=67"
inline SplitSpec parse_split_spec(std::string_view text, std::uint64_t seed) {
    SplitSpec spec{seed, {}};
    for (const auto& part : util::split(text, ',')) {
        auto item = util::trim(part);
        auto eq = item.find('=');
        if (eq == std::string_view::npos) throw PreconditionError("split entry '" + std::string(item) + "' needs name=count");
        std::string name(util::trim(item.substr(0, eq)));
        std::string count(util::trim(item.substr(eq + 1)));
        if (name.empty() || count.empty() || count.find_first_not_of("0123456789") != std::string::npos) {
            throw PreconditionError("bad split entry '" + std::string(item) + "'");
        }
        for (const auto& [n, _] : spec.sizes) {
            if (n == name) throw PreconditionError("duplicate split name '" + name + "'");
        }
        spec.sizes.emplace_back(std::move(name), std::stoull(count));
    }
    if (spec.sizes.empty()) throw PreconditionError("empty split spec");
    return spec;
}

inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    // bound >= 1
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
        const std::uint64_t x = rng();
        if (x >= threshold) return x % bound;
    }
}

inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i-- > 1;) {
        const auto j = static_cast<std::size_t>(bounded_draw(rng, i + 1));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

struct NamedSplit {
    std::string name;
    std::vector<std::size_t> members;  // corpus indices, ascending
};

// Throws SpecTooLarge if the requested counts exceed the corpus.
inline std::vector<NamedSplit> split_indices(std::size_t corpus_size, const SplitSpec& spec) {
    std::size_t total = 0;
    for (const auto& [name, count] : spec.sizes) total += count;
    if (total > corpus_size) {
        throw SpecTooLarge("split sizes sum to " + std::to_string(total) + " but the corpus has " +
                           std::to_string(corpus_size) + " conversations");
    }
    const auto perm = seeded_permutation(corpus_size, spec.seed);
    std::vector<NamedSplit> out;
    std::size_t at = 0;
    for (const auto& [name, count] : spec.sizes) {
        NamedSplit s{name, {perm.begin() + static_cast<std::ptrdiff_t>(at),
                            perm.begin() + static_cast<std::ptrdiff_t>(at + count)}};
        std::sort(s.members.begin(), s.members.end());
        at += count;
        out.push_back(std::move(s));
    }
    return out;
}

template <class T>
std::vector<std::pair<std::string, std::vector<T>>> split_dataset(const std::vector<T>& corpus, const SplitSpec& spec) {
    std::vector<std::pair<std::string, std::vector<T>>> out;
    for (auto& s : split_indices(corpus.size(), spec)) {
        std::vector<T> items;
        items.reserve(s.members.size());
        for (auto i : s.members) items.push_back(corpus[i]);
        out.emplace_back(std::move(s.name), std::move(items));
    }
    return out;
}

}  // namespace fbk::ingest
