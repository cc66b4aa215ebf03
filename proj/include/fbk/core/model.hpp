#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fbk/core/skill.hpp"
#include "fbk/error.hpp"
#include "fbk/util/text.hpp"

namespace fbk {

enum class Speaker { Seeker, Helper };

inline constexpr std::string_view speaker_name(Speaker s) noexcept {
    return s == Speaker::Seeker ? "seeker" : "helper";
}

struct Utterance {
    std::size_t index = 0;
    Speaker speaker = Speaker::Seeker;
    std::string text;

    friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Conversation {
    std::string id;
    std::vector<Utterance> utterances;
    std::string source_tag;

    std::size_t size() const noexcept { return utterances.size(); }

    std::vector<std::size_t> helper_indices() const {
        std::vector<std::size_t> out;
        for (const auto& u : utterances) {
            if (u.speaker == Speaker::Helper) out.push_back(u.index);
        }
        return out;
    }

    friend bool operator==(const Conversation&, const Conversation&) = default;
};

// Builds a conversation from (speaker, text) turns: trims text, numbers the
// utterances, and rejects empty ids or empty turns.
inline Conversation make_conversation(std::string id, const std::vector<std::pair<Speaker, std::string>>& turns,
                                      std::string source_tag = {}) {
    if (id.empty()) throw DataError("conversation id is empty");
    if (turns.empty()) throw DataError("conversation " + id + " has no utterances");
    Conversation c{std::move(id), {}, std::move(source_tag)};
    c.utterances.reserve(turns.size());
    for (const auto& [speaker, text] : turns) {
        auto t = util::trim(text);
        if (t.empty()) {
            throw DataError("conversation " + c.id + ": utterance " + std::to_string(c.utterances.size()) +
                            " is empty");
        }
        c.utterances.push_back({c.utterances.size(), speaker, std::string(t)});
    }
    return c;
}

// Throws DataError when a conversation breaks its structural invariants.
inline void check_conversation(const Conversation& c) {
    if (c.id.empty()) throw DataError("conversation id is empty");
    if (c.utterances.empty()) throw DataError("conversation " + c.id + " has no utterances");
    for (std::size_t i = 0; i < c.utterances.size(); ++i) {
        const auto& u = c.utterances[i];
        if (u.index != i) throw DataError("conversation " + c.id + ": utterance indices are not contiguous");
        if (u.text.empty() || util::trim(u.text).size() != u.text.size()) {
            throw DataError("conversation " + c.id + ": utterance " + std::to_string(i) + " text is not normalized");
        }
    }
}

// One multi-level feedback record for a helper utterance.
struct Feedback {
    bool appropriate = true;
    std::optional<std::string> goal_alignment;
    std::optional<SkillSet> areas_for_improvement;
    std::optional<std::string> alternative;
    std::optional<SkillSet> positive_areas;

    static Feedback ok(std::optional<SkillSet> positive = std::nullopt) {
        Feedback f;
        f.positive_areas = positive;
        return f;
    }

    static Feedback improve(std::string goal, SkillSet areas, std::string alt,
                            std::optional<SkillSet> positive = std::nullopt) {
        Feedback f;
        f.appropriate = false;
        f.goal_alignment = std::move(goal);
        f.areas_for_improvement = areas;
        f.alternative = std::move(alt);
        f.positive_areas = positive;
        return f;
    }

    friend bool operator==(const Feedback&, const Feedback&) = default;
};

// A sampled feedback generation; sigma is attached once it has been self-scored.
struct Generation {
    std::size_t sample_index = 0;
    Feedback feedback;
    std::optional<double> sigma;

    friend bool operator==(const Generation&, const Generation&) = default;
};

struct AnnotatedConversation {
    Conversation conversation;
    std::map<std::size_t, Feedback> feedback;
    std::map<std::size_t, std::vector<Generation>> generations;

    friend bool operator==(const AnnotatedConversation&, const AnnotatedConversation&) = default;
};

}  // namespace fbk
