#pragma once

// Training-file formats (newline-delimited JSON, keys in this order):
//
//   SFT: {"instruction", "input", "output", "conversation_id", "utterance_index"}
//   DPO: {"prompt", "chosen", "rejected", "conversation_id", "utterance_index",
//         "chosen_sigma", "rejected_sigma", "p_original"}
//
// "output", "chosen" and "rejected" hold serialize_feedback text; "prompt"
// is the instruction, a blank line, then the input.

#include <algorithm>
#include <initializer_list>
#include <string>
#include <tuple>
#include <vector>

#include "fbk/core/dataset_io.hpp"
#include "fbk/core/feedback_text.hpp"
#include "fbk/core/prompt_format.hpp"
#include "fbk/segment/segments_io.hpp"
#include "fbk/selfimprove/selfimprove.hpp"

namespace fbk::selfimprove {

struct SftRecord {
    std::string instruction;
    std::string input;
    std::string output;
    std::string conversation_id;
    std::size_t utterance_index = 0;
};

struct DpoRecord {
    std::string prompt;
    std::string chosen;
    std::string rejected;
    std::string conversation_id;
    std::size_t utterance_index = 0;
    double chosen_sigma = 0.0;
    double rejected_sigma = 0.0;
    double p_original = 0.0;
};

inline ordered_json to_json(const SftRecord& r) {
    ordered_json j;
    j["instruction"] = r.instruction;
    j["input"] = r.input;
    j["output"] = r.output;
    j["conversation_id"] = r.conversation_id;
    j["utterance_index"] = r.utterance_index;
    return j;
}

inline ordered_json to_json(const DpoRecord& r) {
    ordered_json j;
    j["prompt"] = r.prompt;
    j["chosen"] = r.chosen;
    j["rejected"] = r.rejected;
    j["conversation_id"] = r.conversation_id;
    j["utterance_index"] = r.utterance_index;
    j["chosen_sigma"] = r.chosen_sigma;
    j["rejected_sigma"] = r.rejected_sigma;
    j["p_original"] = r.p_original;
    return j;
}

// Throws DataError when a pair breaks the preference invariants.
inline DpoRecord to_dpo_record(const PreferencePair& p) {
    const std::string where = p.conversation_id + "#" + std::to_string(p.utterance_index);
    if (!(p.chosen.sigma > p.rejected.sigma)) throw DataError(where + ": chosen sigma must exceed rejected sigma");
    if (!(p.p_original < kPairGate)) throw DataError(where + ": p_original must be below the pair gate");
    DpoRecord r;
    r.prompt = render_feedback_prompt(p.input);
    r.chosen = serialize_feedback(p.chosen.feedback);
    r.rejected = serialize_feedback(p.rejected.feedback);
    if (r.chosen == r.rejected) throw DataError(where + ": chosen and rejected feedback are identical");
    r.conversation_id = p.conversation_id;
    r.utterance_index = p.utterance_index;
    r.chosen_sigma = p.chosen.sigma;
    r.rejected_sigma = p.rejected.sigma;
    r.p_original = p.p_original;
    return r;
}

struct ExportResult {
    std::string content;
    std::size_t records = 0;
    bool empty_warning() const noexcept { return records == 0; }
};

// Pairs are written in (conversation id, utterance index) order.
inline ExportResult export_dpo(std::vector<PreferencePair> pairs) {
    std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        return std::tie(a.conversation_id, a.utterance_index) < std::tie(b.conversation_id, b.utterance_index);
    });
    ExportResult out;
    for (const auto& p : pairs) {
        out.content += to_json(to_dpo_record(p)).dump();
        out.content += '\n';
        ++out.records;
    }
    return out;
}

enum class SftMode { Expert, Generations, BestScored };

inline SftMode parse_sft_mode(std::string_view s) {
    if (s == "expert") return SftMode::Expert;
    if (s == "gens") return SftMode::Generations;
    if (s == "best") return SftMode::BestScored;
    throw PreconditionError("unknown sft mode '" + std::string(s) + "' (expected expert, gens or best)");
}

inline SftRecord make_sft_record(const Conversation& c, std::size_t i, const seg::Segmentation& segs, const Feedback& fb) {
    const auto q = query_for(c, i, segs);
    return {std::string(kTaskInstruction), render_feedback_input(q.context_text, q.utterance_text),
            serialize_feedback(fb), c.id, i};
}

// expert: the annotated feedback; gens: the first generation (lowest sample
// index); best: the highest-sigma generation (ties to the lowest index).
inline ExportResult export_sft(const std::vector<AnnotatedConversation>& data, const seg::SegmentationMap& segs,
                               SftMode mode) {
    ExportResult out;
    std::size_t generation_count = 0;
    for (const auto& ac : data) {
        const auto& c = ac.conversation;
        const auto& s = seg::segmentation_for(segs, c);
        if (mode == SftMode::Expert) {
            for (const auto& [i, fb] : ac.feedback) {
                out.content += to_json(make_sft_record(c, i, s, fb)).dump() + "\n";
                ++out.records;
            }
            continue;
        }
        for (const auto& [i, gens] : ac.generations) {
            if (gens.empty()) continue;
            generation_count += gens.size();
            const Generation* pick = nullptr;
            for (const auto& g : gens) {
                if (mode == SftMode::BestScored) {
                    if (!g.sigma) {
                        throw MissingScores(c.id + "#" + std::to_string(i) + " sample " +
                                            std::to_string(g.sample_index) + " has no sigma");
                    }
                    if (!pick || *g.sigma > *pick->sigma ||
                        (*g.sigma == *pick->sigma && g.sample_index < pick->sample_index)) {
                        pick = &g;
                    }
                } else if (!pick || g.sample_index < pick->sample_index) {
                    pick = &g;
                }
            }
            out.content += to_json(make_sft_record(c, i, s, pick->feedback)).dump() + "\n";
            ++out.records;
        }
    }
    if (mode != SftMode::Expert && generation_count == 0) {
        if (mode == SftMode::BestScored) throw MissingScores("no scored generations in the input");
        throw EmptyGenerations("no generations in the input");
    }
    return out;
}

namespace detail {

inline void only_fields(const json& j, std::initializer_list<std::string_view> keys, const std::string& where) {
    if (!j.is_object()) throw DataError(where + ": expected an object");
    for (const auto& [k, _] : j.items()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw DataError(where + ": unknown field '" + k + "'");
    }
}

inline Feedback valid_feedback_text(const std::string& text, const std::string& where) {
    Feedback fb;
    try {
        fb = parse_feedback(text);
    } catch (const ParseError& e) {
        throw DataError(where + ": " + e.what());
    }
    const auto v = validate_feedback(fb);
    if (!v.ok()) throw InvalidFeedback(where + ": " + v.describe());
    return fb;
}

}  // namespace detail

// Reads an SFT file; every output must parse to a valid feedback record.
inline std::vector<SftRecord> parse_sft(std::string_view content, const std::string& name = "sft") {
    std::vector<SftRecord> out;
    for_each_jsonl(content, name, [&](const json& j, const std::string& where) {
        detail::only_fields(j, {"instruction", "input", "output", "conversation_id", "utterance_index"}, where);
        SftRecord r;
        try {
            r.instruction = fbk::detail::require(j, "instruction", where).get<std::string>();
            r.input = fbk::detail::require(j, "input", where).get<std::string>();
            r.output = fbk::detail::require(j, "output", where).get<std::string>();
            r.conversation_id = fbk::detail::require(j, "conversation_id", where).get<std::string>();
            r.utterance_index = fbk::detail::require(j, "utterance_index", where).get<std::size_t>();
        } catch (const json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        detail::valid_feedback_text(r.output, where + ": output");
        out.push_back(std::move(r));
    });
    return out;
}

// Reads a DPO file and re-checks the preference invariants.
inline std::vector<DpoRecord> parse_dpo(std::string_view content, const std::string& name = "dpo") {
    std::vector<DpoRecord> out;
    for_each_jsonl(content, name, [&](const json& j, const std::string& where) {
        detail::only_fields(j, {"prompt", "chosen", "rejected", "conversation_id", "utterance_index", "chosen_sigma",
                                "rejected_sigma", "p_original"},
                            where);
        DpoRecord r;
        try {
            r.prompt = fbk::detail::require(j, "prompt", where).get<std::string>();
            r.chosen = fbk::detail::require(j, "chosen", where).get<std::string>();
            r.rejected = fbk::detail::require(j, "rejected", where).get<std::string>();
            r.conversation_id = fbk::detail::require(j, "conversation_id", where).get<std::string>();
            r.utterance_index = fbk::detail::require(j, "utterance_index", where).get<std::size_t>();
            r.chosen_sigma = fbk::detail::require(j, "chosen_sigma", where).get<double>();
            r.rejected_sigma = fbk::detail::require(j, "rejected_sigma", where).get<double>();
            r.p_original = fbk::detail::require(j, "p_original", where).get<double>();
        } catch (const json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        detail::valid_feedback_text(r.chosen, where + ": chosen");
        detail::valid_feedback_text(r.rejected, where + ": rejected");
        if (r.chosen == r.rejected) throw DataError(where + ": chosen and rejected feedback are identical");
        if (!(r.chosen_sigma > r.rejected_sigma)) throw DataError(where + ": chosen_sigma must exceed rejected_sigma");
        for (double v : {r.chosen_sigma, r.rejected_sigma, r.p_original}) {
            if (!(v >= 0.0 && v <= 1.0)) throw DataError(where + ": probabilities must lie in [0, 1]");
        }
        if (!(r.p_original < kPairGate)) throw DataError(where + ": p_original must be below the pair gate");
        out.push_back(std::move(r));
    });
    return out;
}

}  // namespace fbk::selfimprove
