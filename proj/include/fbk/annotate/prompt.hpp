#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fbk/core/catalog.hpp"
#include "fbk/core/feedback_text.hpp"
#include "fbk/core/model.hpp"
#include "fbk/error.hpp"

namespace fbk::annotate {

// Output contract given to the annotating model.
inline constexpr std::string_view kAnnotationFormat =
    "For every utterance number listed under targets, write one block that starts with a header line\n"
    "[utterance N]\n"
    "followed by feedback lines in exactly this order:\n"
    "Appropriate: yes|no\n"
    "Positive areas: <comma-separated categories>   (optional)\n"
    "Goal and alignment: <text>                     (only when not appropriate)\n"
    "Areas for improvement: <comma-separated categories> (only when not appropriate)\n"
    "Alternative: <text>                            (only when not appropriate)\n"
    "Categories: Reflections, Questions, Suggestions, Validation, Self-disclosure, Empathy, Professionalism, "
    "Structure. Keep each field on one line.\n";

inline constexpr std::array<std::string_view, 4> kRequiredPlaceholders = {"definitions", "examples", "conversation",
                                                                          "format"};

struct PromptParts {
    std::string definitions = catalog_definitions_text();
    std::string examples;
    std::string conversation;          // rendered "[k] Speaker: text" lines
    std::vector<std::size_t> targets;  // utterance numbers to annotate
};

// Single pass over the template: {name} is replaced for known names; text
// inserted by a substitution is never rescanned; unknown {..} is kept.
inline std::string assemble_prompt(std::string_view tmpl, const PromptParts& parts) {
    if (parts.targets.empty()) throw PreconditionError("assemble_prompt needs a non-empty chunk");
    for (auto name : kRequiredPlaceholders) {
        if (tmpl.find("{" + std::string(name) + "}") == std::string_view::npos) throw MissingPlaceholder(std::string(name));
    }
    std::string targets;
    for (auto t : parts.targets) {
        if (!targets.empty()) targets += ", ";
        targets += std::to_string(t);
    }
    const std::map<std::string_view, std::string_view> values = {{"definitions", parts.definitions},
                                                                  {"examples", parts.examples},
                                                                  {"conversation", parts.conversation},
                                                                  {"format", kAnnotationFormat},
                                                                  {"targets", targets}};
    std::string out;
    out.reserve(tmpl.size() + parts.conversation.size() + parts.definitions.size() + 1024);
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const std::size_t close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto it = values.find(tmpl.substr(i + 1, close - i - 1));
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

// Splits a chunk response into per-utterance feedback. Every target must be
// present exactly once; blocks for other utterances are ignored.
inline std::map<std::size_t, Feedback> parse_chunk_response(std::string_view text, const std::vector<std::size_t>& targets) {
    std::map<std::size_t, Feedback> out;
    struct Block {
        std::size_t utterance;
        std::size_t body_start;
        std::size_t body_end;
    };
    std::vector<Block> blocks;
    std::size_t pos = 0;
    std::size_t preamble_end = text.size();
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::size_t end = nl == std::string_view::npos ? text.size() : nl;
        auto line = util::trim(text.substr(pos, end - pos));
        constexpr std::string_view head = "[utterance ";
        if (line.size() > head.size() + 1 && line.substr(0, head.size()) == head && line.back() == ']') {
            auto num = line.substr(head.size(), line.size() - head.size() - 1);
            if (num.find_first_not_of("0123456789") != std::string_view::npos || num.empty()) {
                throw ParseError(pos, "utterance number in block header");
            }
            if (blocks.empty()) preamble_end = pos;
            if (!blocks.empty()) blocks.back().body_end = pos;
            blocks.push_back({std::stoul(std::string(num)), nl == std::string_view::npos ? text.size() : nl + 1,
                              text.size()});
        }
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
    }
    if (blocks.empty()) throw ParseError(0, "'[utterance N]' block header");
    if (!util::trim(text.substr(0, preamble_end)).empty()) throw ParseError(0, "'[utterance N]' block header");
    for (const auto& b : blocks) {
        if (std::find(targets.begin(), targets.end(), b.utterance) == targets.end()) continue;
        if (out.count(b.utterance)) throw ParseError(b.body_start, "one block per utterance");
        Feedback fb;
        try {
            fb = parse_feedback(text.substr(b.body_start, b.body_end - b.body_start));
        } catch (const ParseError& e) {
            throw ParseError(b.body_start + e.offset(), e.expected());
        }
        require_valid(fb, "utterance " + std::to_string(b.utterance));
        out.emplace(b.utterance, std::move(fb));
    }
    for (auto t : targets) {
        if (!out.count(t)) throw UnparseableGeneration("no block for utterance " + std::to_string(t), std::string(text));
    }
    return out;
}

}  // namespace fbk::annotate
