#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fbk {

// The eight communication-skill categories of the feedback taxonomy.
enum class SkillCategory : std::uint8_t {
    Reflections,
    Questions,
    Suggestions,
    Validation,
    SelfDisclosure,
    Empathy,
    Professionalism,
    Structure,
};

inline constexpr std::array<SkillCategory, 8> kAllSkills = {
    SkillCategory::Reflections,    SkillCategory::Questions, SkillCategory::Suggestions,
    SkillCategory::Validation,     SkillCategory::SelfDisclosure, SkillCategory::Empathy,
    SkillCategory::Professionalism, SkillCategory::Structure,
};

inline constexpr std::string_view skill_name(SkillCategory c) noexcept {
    switch (c) {
        case SkillCategory::Reflections: return "Reflections";
        case SkillCategory::Questions: return "Questions";
        case SkillCategory::Suggestions: return "Suggestions";
        case SkillCategory::Validation: return "Validation";
        case SkillCategory::SelfDisclosure: return "Self-disclosure";
        case SkillCategory::Empathy: return "Empathy";
        case SkillCategory::Professionalism: return "Professionalism";
        case SkillCategory::Structure: return "Structure";
    }
    return "";
}

// Exact match on the canonical name.
inline std::optional<SkillCategory> parse_skill(std::string_view name) noexcept {
    for (SkillCategory c : kAllSkills) {
        if (skill_name(c) == name) return c;
    }
    return std::nullopt;
}

// A set of categories, stored as a bitmask; iteration is in canonical order.
class SkillSet {
public:
    constexpr SkillSet() = default;
    SkillSet(std::initializer_list<SkillCategory> cs) {
        for (SkillCategory c : cs) insert(c);
    }

    static constexpr SkillSet from_mask(std::uint8_t mask) noexcept {
        SkillSet s;
        s.mask_ = mask;
        return s;
    }

    // Returns false if `c` was already present.
    constexpr bool insert(SkillCategory c) noexcept {
        const auto bit = bit_of(c);
        const bool fresh = (mask_ & bit) == 0;
        mask_ |= bit;
        return fresh;
    }
    constexpr bool contains(SkillCategory c) const noexcept { return (mask_ & bit_of(c)) != 0; }
    constexpr bool empty() const noexcept { return mask_ == 0; }
    constexpr std::uint8_t mask() const noexcept { return mask_; }
    int size() const noexcept { return __builtin_popcount(mask_); }

    constexpr SkillSet intersect(SkillSet other) const noexcept { return from_mask(mask_ & other.mask_); }

    std::vector<SkillCategory> items() const {
        std::vector<SkillCategory> out;
        for (SkillCategory c : kAllSkills) {
            if (contains(c)) out.push_back(c);
        }
        return out;
    }

    friend constexpr bool operator==(SkillSet, SkillSet) = default;

private:
    static constexpr std::uint8_t bit_of(SkillCategory c) noexcept {
        return static_cast<std::uint8_t>(1u << static_cast<unsigned>(c));
    }
    std::uint8_t mask_ = 0;
};

}  // namespace fbk
