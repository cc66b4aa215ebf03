#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "fbk/core/model.hpp"
#include "fbk/error.hpp"

namespace fbk::seg {

// Sorted segment start indices over n utterances; always starts with 0.
class Segmentation {
public:
    Segmentation() = default;
    Segmentation(std::vector<std::size_t> boundaries, std::size_t n) : boundaries_(std::move(boundaries)), n_(n) {
        if (n_ == 0) throw DataError("segmentation over zero utterances");
        if (boundaries_.empty() || boundaries_.front() != 0) throw DataError("segmentation must start at 0");
        for (std::size_t i = 1; i < boundaries_.size(); ++i) {
            if (boundaries_[i] <= boundaries_[i - 1]) throw DataError("segment boundaries must be strictly increasing");
        }
        if (boundaries_.back() >= n_) throw DataError("segment boundary out of range");
    }

    static Segmentation single(std::size_t n) { return Segmentation({0}, n); }

    const std::vector<std::size_t>& boundaries() const noexcept { return boundaries_; }
    std::size_t size() const noexcept { return n_; }

    // Index of the segment holding utterance i.
    std::size_t segment_of(std::size_t i) const {
        auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), i);
        return static_cast<std::size_t>(it - boundaries_.begin()) - 1;
    }

    // [start, end) ranges.
    std::vector<std::pair<std::size_t, std::size_t>> segments() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t k = 0; k < boundaries_.size(); ++k) {
            out.emplace_back(boundaries_[k], k + 1 < boundaries_.size() ? boundaries_[k + 1] : n_);
        }
        return out;
    }

    friend bool operator==(const Segmentation&, const Segmentation&) = default;

private:
    std::vector<std::size_t> boundaries_{0};
    std::size_t n_ = 1;
};

// Utterances [lo, target) that precede the target within its own segment
// and the one before it.
struct ContextWindow {
    std::size_t target_index = 0;
    std::size_t lo = 0;

    std::size_t hi() const noexcept { return target_index; }
    bool empty() const noexcept { return lo == target_index; }
    friend bool operator==(const ContextWindow&, const ContextWindow&) = default;
};

inline ContextWindow context_for(std::size_t i, const Segmentation& seg) {
    if (i >= seg.size()) {
        throw PreconditionError("utterance index " + std::to_string(i) + " out of range for " +
                                std::to_string(seg.size()) + " utterances");
    }
    const std::size_t s = seg.segment_of(i);
    const std::size_t lo = s == 0 ? 0 : seg.boundaries()[s - 1];
    return {i, lo};
}

inline std::string render_utterance(const Utterance& u) {
    std::string out(u.speaker == Speaker::Seeker ? "Seeker: " : "Helper: ");
    out += u.text;
    return out;
}

// One "Speaker: text" line per utterance in the window.
inline std::string render_context(const Conversation& c, const ContextWindow& w) {
    std::string out;
    for (std::size_t k = w.lo; k < w.target_index && k < c.size(); ++k) {
        out += render_utterance(c.utterances[k]);
        out += '\n';
    }
    return out;
}

}  // namespace fbk::seg
