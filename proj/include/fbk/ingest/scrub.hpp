#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fbk/core/model.hpp"
#include "fbk/error.hpp"
#include "fbk/util/text.hpp"

namespace fbk::ingest {

inline const std::vector<std::string>& default_keywords() {
    static const std::vector<std::string> kw = {"survey", "quit", "we need to chat", "button"};
    return kw;
}

enum class ScrubAction { RemovedSpan, Flagged };

inline constexpr std::string_view action_name(ScrubAction a) noexcept {
    return a == ScrubAction::RemovedSpan ? "removed_span" : "flagged";
}

struct ScrubHit {
    std::size_t utterance_index = 0;
    std::string keyword;
    ScrubAction action = ScrubAction::RemovedSpan;

    friend bool operator==(const ScrubHit&, const ScrubHit&) = default;
};

struct ScrubReport {
    std::string conversation_id;
    std::vector<ScrubHit> hits;
};

struct ScrubResult {
    std::string text;
    std::vector<ScrubHit> hits;  // utterance_index left at 0; the caller fills it in
};

// Sentences run up to and including a run of [.!?] plus following
// whitespace; trailing text without a terminator is its own sentence.
inline std::vector<std::string_view> split_sentences(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '.' || c == '!' || c == '?') {
            while (i < text.size() && (text[i] == '.' || text[i] == '!' || text[i] == '?')) ++i;
            while (i < text.size() && util::is_space(text[i])) ++i;
            out.push_back(text.substr(start, i - start));
            start = i;
        } else {
            ++i;
        }
    }
    if (start < text.size()) out.push_back(text.substr(start));
    return out;
}

// Removes every sentence mentioning a keyword (case-insensitive, whole-word).
// One hit per removed sentence, naming the keyword that occurs first in it.
// If nothing would remain, the text is kept and each hit is marked Flagged.
inline ScrubResult scrub_utterance(std::string_view text, const std::vector<std::string>& keywords) {
    if (keywords.empty()) throw PreconditionError("scrub keyword list is empty");
    std::vector<std::string> lowered;
    lowered.reserve(keywords.size());
    for (const auto& k : keywords) lowered.push_back(util::to_lower(util::trim(k)));

    ScrubResult r;
    std::string kept;
    for (auto sentence : split_sentences(text)) {
        const std::string low = util::to_lower(sentence);
        std::size_t best_pos = std::string::npos;
        std::size_t best_kw = 0;
        for (std::size_t k = 0; k < lowered.size(); ++k) {
            auto p = util::find_word(low, lowered[k]);
            if (p < best_pos) {
                best_pos = p;
                best_kw = k;
            }
        }
        if (best_pos == std::string::npos) {
            kept += sentence;
        } else {
            r.hits.push_back({0, keywords[best_kw], ScrubAction::RemovedSpan});
        }
    }
    const auto trimmed = util::trim(kept);
    if (!r.hits.empty() && trimmed.empty()) {
        for (auto& h : r.hits) h.action = ScrubAction::Flagged;
        r.text = std::string(util::trim(text));
    } else {
        r.text = std::string(trimmed);
    }
    return r;
}

// Scrubs every utterance; returns the cleaned conversation and its report.
inline std::pair<Conversation, ScrubReport> scrub_conversation(const Conversation& conv,
                                                               const std::vector<std::string>& keywords) {
    Conversation out = conv;
    ScrubReport report{conv.id, {}};
    for (auto& u : out.utterances) {
        auto r = scrub_utterance(u.text, keywords);
        for (auto& h : r.hits) {
            h.utterance_index = u.index;
            report.hits.push_back(std::move(h));
        }
        u.text = std::move(r.text);
    }
    return {std::move(out), std::move(report)};
}

}  // namespace fbk::ingest
