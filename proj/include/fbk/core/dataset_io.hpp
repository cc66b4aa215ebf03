#pragma once

// Newline-delimited JSON dataset format (one conversation per line):
//
//   {"id": "...", "source": "...",
//    "utterances": [{"speaker": "seeker"|"helper", "text": "..."}, ...],
//    "feedback": {"<utterance index>": {feedback object}, ...},
//    "generations": {"<utterance index>": [{"sample_index": 0, "feedback": {...}, "sigma": 0.9}]}}
//
// "source", "feedback" and "generations" are optional on input and omitted
// on output when empty. See docs/format.md.

#include <charconv>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fbk/core/model.hpp"
#include "fbk/core/validate.hpp"
#include "fbk/util/io.hpp"

namespace fbk {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace detail {

inline ordered_json skills_to_json(SkillSet s) {
    ordered_json arr = ordered_json::array();
    for (auto c : s.items()) arr.push_back(std::string(skill_name(c)));
    return arr;
}

inline SkillSet skills_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) throw DataError(where + ": expected an array of category names");
    SkillSet s;
    for (const auto& v : j) {
        if (!v.is_string()) throw DataError(where + ": category names must be strings");
        auto c = parse_skill(v.get<std::string>());
        if (!c) throw DataError(where + ": unknown category '" + v.get<std::string>() + "'");
        if (!s.insert(*c)) throw DataError(where + ": duplicate category '" + v.get<std::string>() + "'");
    }
    return s;
}

inline std::size_t parse_index_key(const std::string& key, const std::string& where) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), v);
    if (ec != std::errc{} || p != key.data() + key.size() || key.empty()) {
        throw DataError(where + ": key '" + key + "' is not an utterance index");
    }
    return v;
}

inline const json& require(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw DataError(where + ": missing field '" + key + "'");
    return *it;
}

}  // namespace detail

inline ordered_json feedback_to_json(const Feedback& fb) {
    ordered_json j;
    j["appropriate"] = fb.appropriate;
    if (fb.goal_alignment) j["goal_alignment"] = *fb.goal_alignment;
    if (fb.areas_for_improvement) j["areas_for_improvement"] = detail::skills_to_json(*fb.areas_for_improvement);
    if (fb.alternative) j["alternative"] = *fb.alternative;
    if (fb.positive_areas) j["positive_areas"] = detail::skills_to_json(*fb.positive_areas);
    return j;
}

// Shape check only; callers validate the record.
inline Feedback feedback_from_json(const json& j, const std::string& where = "feedback") {
    if (!j.is_object()) throw DataError(where + ": expected an object");
    Feedback fb;
    const auto& a = detail::require(j, "appropriate", where);
    if (!a.is_boolean()) throw DataError(where + ": 'appropriate' must be a boolean");
    fb.appropriate = a.get<bool>();
    auto text = [&](const char* key) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) throw DataError(where + ": '" + key + "' must be a string");
        return it->get<std::string>();
    };
    auto skills = [&](const char* key) -> std::optional<SkillSet> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return std::nullopt;
        return detail::skills_from_json(*it, where + "." + key);
    };
    fb.goal_alignment = text("goal_alignment");
    fb.areas_for_improvement = skills("areas_for_improvement");
    fb.alternative = text("alternative");
    fb.positive_areas = skills("positive_areas");
    for (const auto& [k, _] : j.items()) {
        if (k != "appropriate" && k != "goal_alignment" && k != "areas_for_improvement" && k != "alternative" &&
            k != "positive_areas") {
            throw DataError(where + ": unknown field '" + k + "'");
        }
    }
    return fb;
}

inline ordered_json conversation_to_json(const Conversation& c) {
    ordered_json j;
    j["id"] = c.id;
    if (!c.source_tag.empty()) j["source"] = c.source_tag;
    ordered_json utts = ordered_json::array();
    for (const auto& u : c.utterances) {
        ordered_json uj;
        uj["speaker"] = std::string(speaker_name(u.speaker));
        uj["text"] = u.text;
        utts.push_back(std::move(uj));
    }
    j["utterances"] = std::move(utts);
    return j;
}

inline ordered_json annotated_to_json(const AnnotatedConversation& ac) {
    ordered_json j = conversation_to_json(ac.conversation);
    if (!ac.feedback.empty()) {
        ordered_json fj = ordered_json::object();
        for (const auto& [idx, fb] : ac.feedback) fj[std::to_string(idx)] = feedback_to_json(fb);
        j["feedback"] = std::move(fj);
    }
    if (!ac.generations.empty()) {
        ordered_json gj = ordered_json::object();
        for (const auto& [idx, gens] : ac.generations) {
            ordered_json arr = ordered_json::array();
            for (const auto& g : gens) {
                ordered_json e;
                e["sample_index"] = g.sample_index;
                e["feedback"] = feedback_to_json(g.feedback);
                if (g.sigma) e["sigma"] = *g.sigma;
                arr.push_back(std::move(e));
            }
            gj[std::to_string(idx)] = std::move(arr);
        }
        j["generations"] = std::move(gj);
    }
    return j;
}

inline Speaker parse_speaker(const std::string& s, const std::string& where) {
    if (s == "seeker") return Speaker::Seeker;
    if (s == "helper") return Speaker::Helper;
    throw DataError(where + ": speaker must be 'seeker' or 'helper', got '" + s + "'");
}

// Parses and fully validates one dataset line.
inline AnnotatedConversation annotated_from_json(const json& j, const std::string& where = "record") {
    if (!j.is_object()) throw DataError(where + ": expected an object");
    const auto& id = detail::require(j, "id", where);
    if (!id.is_string()) throw DataError(where + ": 'id' must be a string");
    const std::string w = where + " (" + id.get<std::string>() + ")";
    for (const auto& [k, v] : j.items()) {
        if (k != "id" && k != "utterances" && k != "source" && k != "feedback" && k != "generations") {
            throw DataError(w + ": unknown field '" + k + "'");
        }
    }
    const auto& utts = detail::require(j, "utterances", w);
    if (!utts.is_array()) throw DataError(w + ": 'utterances' must be an array");

    std::vector<std::pair<Speaker, std::string>> turns;
    for (std::size_t i = 0; i < utts.size(); ++i) {
        const auto& u = utts[i];
        const std::string uw = w + ".utterances[" + std::to_string(i) + "]";
        if (!u.is_object()) throw DataError(uw + ": expected an object");
        const auto& sp = detail::require(u, "speaker", uw);
        const auto& tx = detail::require(u, "text", uw);
        if (!sp.is_string() || !tx.is_string()) throw DataError(uw + ": speaker and text must be strings");
        turns.emplace_back(parse_speaker(sp.get<std::string>(), uw), tx.get<std::string>());
    }
    std::string source;
    if (auto it = j.find("source"); it != j.end()) {
        if (!it->is_string()) throw DataError(w + ": 'source' must be a string");
        source = it->get<std::string>();
    }

    AnnotatedConversation ac;
    ac.conversation = make_conversation(id.get<std::string>(), turns, source);
    if (auto it = j.find("feedback"); it != j.end()) {
        if (!it->is_object()) throw DataError(w + ": 'feedback' must be an object");
        for (const auto& [k, v] : it->items()) {
            ac.feedback[detail::parse_index_key(k, w)] = feedback_from_json(v, w + ".feedback." + k);
        }
    }
    if (auto it = j.find("generations"); it != j.end()) {
        if (!it->is_object()) throw DataError(w + ": 'generations' must be an object");
        for (const auto& [k, v] : it->items()) {
            const std::string gw = w + ".generations." + k;
            if (!v.is_array()) throw DataError(gw + ": expected an array");
            std::vector<Generation> gens;
            for (const auto& e : v) {
                if (!e.is_object()) throw DataError(gw + ": expected objects");
                Generation g;
                const auto& si = detail::require(e, "sample_index", gw);
                if (!si.is_number_unsigned()) throw DataError(gw + ": sample_index must be a non-negative integer");
                g.sample_index = si.get<std::size_t>();
                g.feedback = feedback_from_json(detail::require(e, "feedback", gw), gw);
                if (auto s = e.find("sigma"); s != e.end() && !s->is_null()) {
                    if (!s->is_number()) throw DataError(gw + ": sigma must be a number");
                    g.sigma = s->get<double>();
                }
                gens.push_back(std::move(g));
            }
            ac.generations[detail::parse_index_key(k, w)] = std::move(gens);
        }
    }
    check_annotated(ac);
    return ac;
}

// Splits newline-delimited JSON, skipping blank lines. Errors carry the
// 1-based line number.
template <class Fn>
void for_each_jsonl(std::string_view content, const std::string& name, Fn&& fn) {
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
        std::size_t nl = content.find('\n', pos);
        std::size_t end = nl == std::string_view::npos ? content.size() : nl;
        ++line_no;
        std::string_view line = util::trim(content.substr(pos, end - pos));
        pos = nl == std::string_view::npos ? content.size() : nl + 1;
        if (line.empty()) continue;
        const std::string where = name + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(where + ": invalid JSON: " + e.what());
        }
        fn(j, where);
    }
}

inline std::vector<AnnotatedConversation> parse_dataset(std::string_view content, const std::string& name = "input") {
    std::vector<AnnotatedConversation> out;
    for_each_jsonl(content, name, [&](const json& j, const std::string& where) {
        out.push_back(annotated_from_json(j, where));
    });
    return out;
}

inline std::vector<AnnotatedConversation> load_dataset(const std::filesystem::path& path) {
    return parse_dataset(util::read_file(path), path.string());
}

inline std::string dump_dataset(const std::vector<AnnotatedConversation>& data) {
    std::string out;
    for (const auto& ac : data) {
        out += annotated_to_json(ac).dump();
        out += '\n';
    }
    return out;
}

inline void save_dataset(const std::filesystem::path& path, const std::vector<AnnotatedConversation>& data) {
    util::write_file_atomic(path, dump_dataset(data));
}

}  // namespace fbk
