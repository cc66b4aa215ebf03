#pragma once

// Reference catalog of the eight skill categories: a short working
// definition and typical mistakes for each. Shipped as
// data/skills_catalog.json (kept identical to catalog_json()) and used to
// fill the {definitions} slot of annotation prompts.

#include <array>
#include <string>
#include <string_view>

#include "json.hpp"

#include "fbk/core/skill.hpp"

namespace fbk {

struct SkillEntry {
    SkillCategory category;
    std::string_view definition;
    std::array<std::string_view, 4> mistakes;
};

inline constexpr std::array<SkillEntry, 8> kSkillCatalog = {{
    {SkillCategory::Reflections,
     "Restating or paraphrasing what the seeker said so their feelings are named and acknowledged.",
     {"Parroting the seeker's exact words", "Naming a feeling with more certainty than the seeker expressed",
      "Reflecting many feelings at once instead of the most salient one",
      "Reflecting the feelings of third parties rather than the seeker"}},
    {SkillCategory::Questions,
     "Open inquiries or prompts that help the seeker explore and understand their situation and emotions.",
     {"Closed questions where an open one would invite exploration", "Several questions stacked in one turn",
      "Questions with no clear purpose", "Asking about other people instead of the seeker's experience"}},
    {SkillCategory::Suggestions,
     "Concrete ideas or directions the seeker might try outside the conversation.",
     {"Advice offered before the problem is understood", "Prescriptive 'you should' phrasing",
      "Imposing the helper's own values", "Arguing the seeker into the helper's view"}},
    {SkillCategory::Validation,
     "Affirming that the seeker's experience and reactions are understandable and deserve respect.",
     {"Not normalising the seeker's feelings", "Endorsing distorted beliefs or biases",
      "Seeming absent or inattentive to what was shared", "Validation that sounds formulaic"}},
    {SkillCategory::SelfDisclosure,
     "Brief sharing of the helper's own experience to build connection without taking over the conversation.",
     {"Not returning the focus to the seeker right away", "Disclosures that run long or get complicated",
      "Sharing more personal detail than is useful", "Talking more than the seeker"}},
    {SkillCategory::Empathy,
     "Conveying an understanding of the seeker's emotions so they feel seen and heard.",
     {"No warmth or concern where it is called for", "Not conveying understanding of the seeker's situation",
      "Not exploring the seeker's feelings", "Sympathy or pity in place of empathy"}},
    {SkillCategory::Professionalism,
     "Keeping appropriate boundaries, language, and tone for a supportive conversation.",
     {"Heavy slang", "Stiff, robotic formality", "Language implying too much closeness",
      "Unclear boundaries about the helper's role"}},
    {SkillCategory::Structure,
     "Guiding the flow of the conversation: agenda, focus, and a clear wrap-up.",
     {"No shared agenda or rapport at the start", "Too many topics open at once",
      "No summary of takeaways at the end", "Ending without any actionable insight"}},
}};

inline nlohmann::ordered_json catalog_json() {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : kSkillCatalog) {
        nlohmann::ordered_json j;
        j["name"] = std::string(skill_name(e.category));
        j["definition"] = std::string(e.definition);
        nlohmann::ordered_json m = nlohmann::ordered_json::array();
        for (auto s : e.mistakes) m.push_back(std::string(s));
        j["example_mistakes"] = std::move(m);
        arr.push_back(std::move(j));
    }
    return arr;
}

// Plain-text block used for prompt {definitions}.
inline std::string catalog_definitions_text() {
    std::string out;
    for (const auto& e : kSkillCatalog) {
        out += "- ";
        out += skill_name(e.category);
        out += ": ";
        out += e.definition;
        out += " Typical mistakes: ";
        for (std::size_t i = 0; i < e.mistakes.size(); ++i) {
            if (i) out += "; ";
            out += e.mistakes[i];
        }
        out += ".\n";
    }
    return out;
}

}  // namespace fbk
