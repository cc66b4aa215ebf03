#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fbk/core/model.hpp"

namespace fbk {

enum class Violation {
    GoalOnAppropriate,
    AreasOnAppropriate,
    AlternativeOnAppropriate,
    MissingGoal,
    EmptyGoal,
    MissingAreas,
    EmptyAreas,
    MissingAlternative,
    EmptyAlternative,
    EmptyPositiveAreas,
    OverlappingCategories,
};

inline constexpr std::string_view violation_name(Violation v) noexcept {
    switch (v) {
        case Violation::GoalOnAppropriate: return "goal present on appropriate";
        case Violation::AreasOnAppropriate: return "areas present on appropriate";
        case Violation::AlternativeOnAppropriate: return "alternative present on appropriate";
        case Violation::MissingGoal: return "missing goal";
        case Violation::EmptyGoal: return "empty goal";
        case Violation::MissingAreas: return "missing areas";
        case Violation::EmptyAreas: return "empty areas";
        case Violation::MissingAlternative: return "missing alternative";
        case Violation::EmptyAlternative: return "empty alternative";
        case Violation::EmptyPositiveAreas: return "empty positive areas";
        case Violation::OverlappingCategories: return "category in both areas and positive areas";
    }
    return "";
}

struct ValidationResult {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool has(Violation v) const noexcept {
        for (auto x : violations) {
            if (x == v) return true;
        }
        return false;
    }
    std::string describe() const {
        std::string out;
        for (auto v : violations) {
            if (!out.empty()) out += "; ";
            out += violation_name(v);
        }
        return out;
    }
};

inline ValidationResult validate_feedback(const Feedback& fb) {
    ValidationResult r;
    auto blank = [](const std::string& s) { return util::trim(s).empty(); };

    if (fb.appropriate) {
        if (fb.goal_alignment) r.violations.push_back(Violation::GoalOnAppropriate);
        if (fb.areas_for_improvement) r.violations.push_back(Violation::AreasOnAppropriate);
        if (fb.alternative) r.violations.push_back(Violation::AlternativeOnAppropriate);
    } else {
        if (!fb.goal_alignment) {
            r.violations.push_back(Violation::MissingGoal);
        } else if (blank(*fb.goal_alignment)) {
            r.violations.push_back(Violation::EmptyGoal);
        }
        if (!fb.areas_for_improvement) {
            r.violations.push_back(Violation::MissingAreas);
        } else if (fb.areas_for_improvement->empty()) {
            r.violations.push_back(Violation::EmptyAreas);
        }
        if (!fb.alternative) {
            r.violations.push_back(Violation::MissingAlternative);
        } else if (blank(*fb.alternative)) {
            r.violations.push_back(Violation::EmptyAlternative);
        }
    }
    if (fb.positive_areas && fb.positive_areas->empty()) r.violations.push_back(Violation::EmptyPositiveAreas);
    if (fb.positive_areas && fb.areas_for_improvement &&
        !fb.positive_areas->intersect(*fb.areas_for_improvement).empty()) {
        r.violations.push_back(Violation::OverlappingCategories);
    }
    return r;
}

inline void require_valid(const Feedback& fb, std::string_view where = {}) {
    auto r = validate_feedback(fb);
    if (!r.ok()) {
        std::string msg = "invalid feedback";
        if (!where.empty()) msg += " (" + std::string(where) + ")";
        throw InvalidFeedback(msg + ": " + r.describe());
    }
}

// Structural check of an annotated conversation: keys name helper utterances,
// every record is valid, and generation sample indices are unique.
inline void check_annotated(const AnnotatedConversation& ac) {
    check_conversation(ac.conversation);
    const auto& c = ac.conversation;
    auto check_key = [&](std::size_t idx, const char* what) {
        if (idx >= c.size()) {
            throw DataError("conversation " + c.id + ": " + what + " key " + std::to_string(idx) + " out of range");
        }
        if (c.utterances[idx].speaker != Speaker::Helper) {
            throw DataError("conversation " + c.id + ": " + what + " key " + std::to_string(idx) +
                            " is not a helper utterance");
        }
    };
    for (const auto& [idx, fb] : ac.feedback) {
        check_key(idx, "feedback");
        require_valid(fb, c.id + "#" + std::to_string(idx));
    }
    for (const auto& [idx, gens] : ac.generations) {
        check_key(idx, "generations");
        std::vector<std::size_t> seen;
        for (const auto& g : gens) {
            for (auto s : seen) {
                if (s == g.sample_index) {
                    throw DataError("conversation " + c.id + ": duplicate sample index " +
                                    std::to_string(g.sample_index) + " at utterance " + std::to_string(idx));
                }
            }
            seen.push_back(g.sample_index);
            require_valid(g.feedback, c.id + "#" + std::to_string(idx) + "/" + std::to_string(g.sample_index));
            if (g.sigma && !(*g.sigma >= 0.0 && *g.sigma <= 1.0)) {
                throw DataError("conversation " + c.id + ": sigma outside [0,1]");
            }
        }
    }
}

}  // namespace fbk
