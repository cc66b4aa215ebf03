#pragma once

#include <algorithm>
#include <vector>

#include "fbk/error.hpp"

namespace fbk::annotate {

inline constexpr std::size_t kChunkWindow = 5;
inline constexpr std::size_t kChunkStride = 3;
inline constexpr std::size_t kChunkDiscard = 2;  // leading window members without enough context

struct Chunk {
    std::vector<std::size_t> window;  // helper utterance indices sent together
    std::vector<std::size_t> kept;    // members whose feedback is kept

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

struct ChunkPlan {
    std::vector<Chunk> chunks;
};

// Windows of 5 helper utterances advancing by 3. The first window keeps all
// of its members; later windows drop their first two, which the previous
// window already covered, so kept sets partition the input.
inline ChunkPlan plan_chunks(const std::vector<std::size_t>& helper_indices) {
    if (helper_indices.empty()) throw PreconditionError("plan_chunks needs at least one helper utterance");
    for (std::size_t i = 1; i < helper_indices.size(); ++i) {
        if (helper_indices[i] <= helper_indices[i - 1]) {
            throw PreconditionError("helper indices must be strictly increasing");
        }
    }
    const std::size_t h = helper_indices.size();
    ChunkPlan plan;
    for (std::size_t start = 0;; start += kChunkStride) {
        const std::size_t end = std::min(start + kChunkWindow, h);
        Chunk c;
        c.window.assign(helper_indices.begin() + static_cast<std::ptrdiff_t>(start),
                        helper_indices.begin() + static_cast<std::ptrdiff_t>(end));
        const std::size_t keep_from = start == 0 ? 0 : start + kChunkDiscard;
        c.kept.assign(helper_indices.begin() + static_cast<std::ptrdiff_t>(keep_from),
                      helper_indices.begin() + static_cast<std::ptrdiff_t>(end));
        plan.chunks.push_back(std::move(c));
        if (end == h) break;
    }
    return plan;
}

}  // namespace fbk::annotate
