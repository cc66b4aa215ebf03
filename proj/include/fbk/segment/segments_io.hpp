#pragma once

// segments.jsonl: one {"id": "...", "n": <utterances>, "boundaries": [0, ...]} per conversation.

#include <map>
#include <string>

#include "fbk/core/dataset_io.hpp"
#include "fbk/segment/context.hpp"

namespace fbk::seg {

using SegmentationMap = std::map<std::string, Segmentation>;

inline std::string dump_segments(const std::vector<std::pair<std::string, Segmentation>>& segs) {
    std::string out;
    for (const auto& [id, s] : segs) {
        ordered_json j;
        j["id"] = id;
        j["n"] = s.size();
        j["boundaries"] = s.boundaries();
        out += j.dump();
        out += '\n';
    }
    return out;
}

inline SegmentationMap parse_segments(std::string_view content, const std::string& name = "segments") {
    SegmentationMap out;
    for_each_jsonl(content, name, [&](const json& j, const std::string& where) {
        try {
            auto id = j.at("id").get<std::string>();
            Segmentation s(j.at("boundaries").get<std::vector<std::size_t>>(), j.at("n").get<std::size_t>());
            if (!out.emplace(id, std::move(s)).second) throw DataError(where + ": duplicate id '" + id + "'");
        } catch (const json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
    });
    return out;
}

inline SegmentationMap load_segments(const std::filesystem::path& path) {
    return parse_segments(util::read_file(path), path.string());
}

inline const Segmentation& segmentation_for(const SegmentationMap& m, const Conversation& c) {
    auto it = m.find(c.id);
    if (it == m.end()) throw DataError("no segmentation for conversation " + c.id);
    if (it->second.size() != c.size()) {
        throw DataError("segmentation for " + c.id + " covers " + std::to_string(it->second.size()) +
                        " utterances, conversation has " + std::to_string(c.size()));
    }
    return it->second;
}

}  // namespace fbk::seg
