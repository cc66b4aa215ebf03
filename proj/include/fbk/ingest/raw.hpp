#pragma once

// Raw corpus reader. Accepts newline-delimited records in the toolkit's own
// format ({"id", "utterances": [{"speaker", "text"}]}) or ESConv-style
// records ({"dialog": [{"speaker": "seeker"|"supporter"|"usr"|"sys", "content"}]}),
// and also a single top-level JSON array of such records. Records without
// an id are named "conv-<n>" by 1-based position. Empty turns are dropped.

#include <string>
#include <vector>

#include "fbk/core/dataset_io.hpp"

namespace fbk::ingest {

struct RawCorpus {
    std::vector<Conversation> conversations;
    std::size_t dropped_empty_turns = 0;
};

namespace detail {

inline Speaker raw_speaker(const std::string& s, const std::string& where) {
    const auto l = util::to_lower(s);
    if (l == "seeker" || l == "usr" || l == "user") return Speaker::Seeker;
    if (l == "helper" || l == "supporter" || l == "sys" || l == "system") return Speaker::Helper;
    throw DataError(where + ": unknown speaker '" + s + "'");
}

inline Conversation raw_conversation(const json& j, std::size_t position, const std::string& where,
                                     std::size_t& dropped) {
    if (!j.is_object()) throw DataError(where + ": expected an object");
    std::string id = "conv-" + std::to_string(position);
    if (auto it = j.find("id"); it != j.end()) {
        if (it->is_string()) {
            id = it->get<std::string>();
        } else if (it->is_number_integer()) {
            id = std::to_string(it->get<long long>());
        } else {
            throw DataError(where + ": 'id' must be a string or integer");
        }
    }
    const json* turns = nullptr;
    const char* text_key = "text";
    if (auto it = j.find("utterances"); it != j.end()) {
        turns = &*it;
    } else if (auto it2 = j.find("dialog"); it2 != j.end()) {
        turns = &*it2;
        text_key = "content";
    } else {
        throw DataError(where + ": record has neither 'utterances' nor 'dialog'");
    }
    if (!turns->is_array()) throw DataError(where + ": turns must be an array");
    std::vector<std::pair<Speaker, std::string>> out;
    for (std::size_t i = 0; i < turns->size(); ++i) {
        const auto& t = (*turns)[i];
        const std::string tw = where + ".turn[" + std::to_string(i) + "]";
        if (!t.is_object() || !t.contains("speaker")) throw DataError(tw + ": expected an object with 'speaker'");
        const json* tx = t.contains(text_key) ? &t[text_key] : (t.contains("text") ? &t["text"] : nullptr);
        if (!tx || !tx->is_string() || !t["speaker"].is_string()) throw DataError(tw + ": missing text");
        auto text = util::trim(tx->get_ref<const std::string&>());
        if (text.empty()) {
            ++dropped;
            continue;
        }
        out.emplace_back(raw_speaker(t["speaker"].get<std::string>(), tw), std::string(text));
    }
    std::string source;
    if (auto it = j.find("source"); it != j.end() && it->is_string()) source = it->get<std::string>();
    return make_conversation(std::move(id), out, std::move(source));
}

}  // namespace detail

inline RawCorpus parse_raw_corpus(std::string_view content, const std::string& name = "raw") {
    RawCorpus corpus;
    const auto body = util::trim(content);
    if (!body.empty() && body.front() == '[') {
        json arr;
        try {
            arr = json::parse(body);
        } catch (const json::parse_error& e) {
            throw DataError(name + ": invalid JSON: " + e.what());
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            corpus.conversations.push_back(detail::raw_conversation(arr[i], i + 1, name + "[" + std::to_string(i) + "]",
                                                                    corpus.dropped_empty_turns));
        }
    } else {
        std::size_t position = 0;
        for_each_jsonl(content, name, [&](const json& j, const std::string& where) {
            corpus.conversations.push_back(detail::raw_conversation(j, ++position, where, corpus.dropped_empty_turns));
        });
    }
    for (std::size_t i = 0; i < corpus.conversations.size(); ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            if (corpus.conversations[k].id == corpus.conversations[i].id) {
                throw DataError(name + ": duplicate conversation id '" + corpus.conversations[i].id + "'");
            }
        }
    }
    return corpus;
}

}  // namespace fbk::ingest
