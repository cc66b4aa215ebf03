#pragma once

// Canonical line-oriented feedback grammar:
//
//   Appropriate: yes|no
//   Positive areas: <Category>, <Category>        (optional)
//   Goal and alignment: <text>                     (optional)
//   Areas for improvement: <Category>, ...         (optional)
//   Alternative: <text>                            (optional)
//
// Fields appear at most once and in exactly this order; every line ends with
// '\n'. Inside text values '\\', '\n' and '\r' are written as "\\\\", "\\n",
// "\\r". Trailing blank lines and CRLF line endings are accepted on input.

#include <array>
#include <string>
#include <string_view>

#include "fbk/core/model.hpp"
#include "fbk/core/validate.hpp"
#include "fbk/error.hpp"

namespace fbk {

namespace feedback_labels {
inline constexpr std::string_view kAppropriate = "Appropriate";
inline constexpr std::string_view kPositive = "Positive areas";
inline constexpr std::string_view kGoal = "Goal and alignment";
inline constexpr std::string_view kAreas = "Areas for improvement";
inline constexpr std::string_view kAlternative = "Alternative";
}  // namespace feedback_labels

namespace detail {

inline std::string escape_value(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string join_skills(SkillSet s) {
    std::string out;
    for (SkillCategory c : s.items()) {
        if (!out.empty()) out += ", ";
        out += skill_name(c);
    }
    return out;
}

}  // namespace detail

// Deterministic text form; throws InvalidFeedback for records that fail
// validate_feedback.
inline std::string serialize_feedback(const Feedback& fb) {
    require_valid(fb);
    namespace L = feedback_labels;
    std::string out;
    auto line = [&out](std::string_view label, std::string_view value) {
        out += label;
        out += ": ";
        out += value;
        out += '\n';
    };
    line(L::kAppropriate, fb.appropriate ? "yes" : "no");
    if (fb.positive_areas) line(L::kPositive, detail::join_skills(*fb.positive_areas));
    if (fb.goal_alignment) line(L::kGoal, detail::escape_value(*fb.goal_alignment));
    if (fb.areas_for_improvement) line(L::kAreas, detail::join_skills(*fb.areas_for_improvement));
    if (fb.alternative) line(L::kAlternative, detail::escape_value(*fb.alternative));
    return out;
}

namespace detail {

struct Line {
    std::size_t offset;  // byte offset of the first character
    std::string_view text;
};

inline std::string unescape_value(std::string_view s, std::size_t base_offset) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out += s[i];
            continue;
        }
        if (i + 1 >= s.size()) throw ParseError(base_offset + i, "escape sequence after '\\'");
        switch (s[i + 1]) {
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 'r': out += '\r'; break;
            default: throw ParseError(base_offset + i + 1, "one of '\\\\', 'n', 'r' after '\\'");
        }
        ++i;
    }
    return out;
}

inline SkillSet parse_skill_list(std::string_view s, std::size_t base_offset) {
    SkillSet set;
    if (util::trim(s).empty()) return set;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t comma = s.find(',', start);
        if (comma == std::string_view::npos) comma = s.size();
        std::string_view raw = s.substr(start, comma - start);
        std::size_t lead = 0;
        while (lead < raw.size() && util::is_space(raw[lead])) ++lead;
        std::string_view name = util::trim(raw);
        const std::size_t at = base_offset + start + lead;
        auto cat = parse_skill(name);
        if (!cat) {
            throw ParseError(at, "skill category name (Reflections, Questions, Suggestions, Validation, "
                                 "Self-disclosure, Empathy, Professionalism, Structure)");
        }
        if (!set.insert(*cat)) throw ParseError(at, "distinct skill category");
        start = comma + 1;
    }
    return set;
}

}  // namespace detail

// Inverse of serialize_feedback. Syntax only: a record with, say, an empty
// area list parses, and validate_feedback reports it.
inline Feedback parse_feedback(std::string_view text) {
    namespace L = feedback_labels;
    std::vector<detail::Line> lines;
    {
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t nl = text.find('\n', pos);
            std::size_t end = nl == std::string_view::npos ? text.size() : nl;
            std::string_view l = text.substr(pos, end - pos);
            if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
            lines.push_back({pos, l});
            pos = nl == std::string_view::npos ? text.size() : nl + 1;
        }
        while (!lines.empty() && util::trim(lines.back().text).empty()) lines.pop_back();
    }
    if (lines.empty()) throw ParseError(0, "'Appropriate: yes|no'");

    auto value_after = [](const detail::Line& l, std::string_view label) -> std::optional<detail::Line> {
        if (l.text.size() <= label.size() || l.text.substr(0, label.size()) != label || l.text[label.size()] != ':') {
            return std::nullopt;
        }
        std::size_t skip = label.size() + 1;
        if (skip < l.text.size() && l.text[skip] == ' ') ++skip;
        return detail::Line{l.offset + skip, l.text.substr(skip)};
    };

    Feedback fb;
    {
        auto v = value_after(lines[0], L::kAppropriate);
        if (!v) throw ParseError(lines[0].offset, "'Appropriate:'");
        const auto flag = util::trim(v->text);
        if (flag == "yes") {
            fb.appropriate = true;
        } else if (flag == "no") {
            fb.appropriate = false;
        } else {
            throw ParseError(v->offset, "'yes' or 'no'");
        }
    }

    static constexpr std::array<std::string_view, 4> order = {L::kPositive, L::kGoal, L::kAreas, L::kAlternative};
    std::size_t next = 0;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto& l = lines[li];
        bool matched = false;
        for (std::size_t k = next; k < order.size(); ++k) {
            auto v = value_after(l, order[k]);
            if (!v) continue;
            switch (k) {
                case 0: fb.positive_areas = detail::parse_skill_list(v->text, v->offset); break;
                case 1: fb.goal_alignment = detail::unescape_value(v->text, v->offset); break;
                case 2: fb.areas_for_improvement = detail::parse_skill_list(v->text, v->offset); break;
                case 3: fb.alternative = detail::unescape_value(v->text, v->offset); break;
            }
            next = k + 1;
            matched = true;
            break;
        }
        if (!matched) {
            std::string expected;
            for (std::size_t k = next; k < order.size(); ++k) {
                if (!expected.empty()) expected += " or ";
                expected += "'" + std::string(order[k]) + ":'";
            }
            if (expected.empty()) expected = "end of input";
            throw ParseError(l.offset, expected);
        }
    }
    return fb;
}

}  // namespace fbk
