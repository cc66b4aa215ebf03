#pragma once

// Mechanical stand-ins for the manual corpus-quality criteria. They are
// approximations; flagged conversations are surfaced for review.

#include <string>
#include <vector>

#include "fbk/core/model.hpp"
#include "fbk/util/text.hpp"

namespace fbk::ingest {

struct FlagRules {
    std::vector<std::string> meta_keywords = {"mturk",   "turk",  "survey",          "are you there",
                                              "seen your message", "quit", "button", "we need to chat"};
    double max_meta_fraction = 0.30;  // flag when strictly more than this share of utterances is meta-talk
    std::size_t min_utterances = 6;
    std::size_t min_helper_utterances = 3;
    double min_mean_words = 3.0;
};

inline constexpr std::string_view kFlagMeta = "meta-conversation";
inline constexpr std::string_view kFlagTooShort = "too short";
inline constexpr std::string_view kFlagFewHelper = "few helper turns";
inline constexpr std::string_view kFlagLowLength = "low mean length";

inline std::vector<std::string> flag_conversation(const Conversation& conv, const FlagRules& rules = {}) {
    std::vector<std::string> flags;
    const std::size_t n = conv.size();

    std::vector<std::string> lowered;
    for (const auto& k : rules.meta_keywords) lowered.push_back(util::to_lower(k));
    std::size_t meta = 0;
    std::size_t words = 0;
    for (const auto& u : conv.utterances) {
        const auto low = util::to_lower(u.text);
        for (const auto& k : lowered) {
            if (util::find_word(low, k) != std::string::npos) {
                ++meta;
                break;
            }
        }
        words += util::word_count(u.text);
    }
    if (n > 0 && static_cast<double>(meta) / static_cast<double>(n) > rules.max_meta_fraction) {
        flags.emplace_back(kFlagMeta);
    }
    if (n < rules.min_utterances) flags.emplace_back(kFlagTooShort);
    if (conv.helper_indices().size() < rules.min_helper_utterances) flags.emplace_back(kFlagFewHelper);
    if (n > 0 && static_cast<double>(words) / static_cast<double>(n) < rules.min_mean_words) {
        flags.emplace_back(kFlagLowLength);
    }
    return flags;
}

}  // namespace fbk::ingest
