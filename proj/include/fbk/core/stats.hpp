#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "json.hpp"

#include "fbk/core/model.hpp"
#include "fbk/core/validate.hpp"

namespace fbk {

// Counts over feedback records. `n_utterances` is the number of feedback
// records (annotated helper utterances); `n_total_utterances` counts every
// utterance of every session.
struct DatasetStats {
    std::size_t n_sessions = 0;
    std::size_t n_utterances = 0;
    std::size_t n_total_utterances = 0;
    std::size_t n_appropriate = 0;
    std::size_t n_inappropriate = 0;
    double avg_alt_len = 0.0;
    double avg_goal_len = 0.0;
    std::array<std::size_t, 8> improve_counts{};
    std::array<std::size_t, 8> positive_counts{};

    friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

inline DatasetStats dataset_stats(std::span<const AnnotatedConversation> dataset) {
    DatasetStats s;
    std::size_t alt_words = 0, alt_n = 0, goal_words = 0, goal_n = 0;
    for (const auto& ac : dataset) {
        ++s.n_sessions;
        s.n_total_utterances += ac.conversation.size();
        for (const auto& [idx, fb] : ac.feedback) {
            require_valid(fb, ac.conversation.id + "#" + std::to_string(idx));
            ++s.n_utterances;
            ++(fb.appropriate ? s.n_appropriate : s.n_inappropriate);
            if (fb.alternative) {
                alt_words += util::word_count(*fb.alternative);
                ++alt_n;
            }
            if (fb.goal_alignment) {
                goal_words += util::word_count(*fb.goal_alignment);
                ++goal_n;
            }
            if (fb.areas_for_improvement) {
                for (auto c : fb.areas_for_improvement->items()) ++s.improve_counts[static_cast<std::size_t>(c)];
            }
            if (fb.positive_areas) {
                for (auto c : fb.positive_areas->items()) ++s.positive_counts[static_cast<std::size_t>(c)];
            }
        }
    }
    if (alt_n) s.avg_alt_len = static_cast<double>(alt_words) / static_cast<double>(alt_n);
    if (goal_n) s.avg_goal_len = static_cast<double>(goal_words) / static_cast<double>(goal_n);
    return s;
}

inline nlohmann::ordered_json stats_to_json(const DatasetStats& s) {
    nlohmann::ordered_json j;
    j["n_sessions"] = s.n_sessions;
    j["n_utterances"] = s.n_utterances;
    j["n_total_utterances"] = s.n_total_utterances;
    j["n_appropriate"] = s.n_appropriate;
    j["n_inappropriate"] = s.n_inappropriate;
    j["avg_alt_len"] = s.avg_alt_len;
    j["avg_goal_len"] = s.avg_goal_len;
    nlohmann::ordered_json minus, plus;
    for (auto c : kAllSkills) {
        minus[std::string(skill_name(c))] = s.improve_counts[static_cast<std::size_t>(c)];
        plus[std::string(skill_name(c))] = s.positive_counts[static_cast<std::size_t>(c)];
    }
    j["areas_for_improvement"] = minus;
    j["positive_areas"] = plus;
    return j;
}

}  // namespace fbk
