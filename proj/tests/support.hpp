#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "fbk/core/model.hpp"
#include "fbk/gateway/gateway.hpp"
#include "fbk/gateway/mock.hpp"

namespace fbk::testkit {

inline std::filesystem::path source_dir() { return FBK_SOURCE_DIR; }
inline std::filesystem::path fixture_dir() { return source_dir() / "data" / "fixture"; }

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("fbk_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            out.push_back(text.substr(pos));
            break;
        }
        out.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return out;
}

inline gateway::BackendProfile quiet_profile() {
    gateway::BackendProfile p;
    p.kind = "mock";
    p.mock_script = "inline";
    p.retry.retries = 2;
    p.retry.backoff_ms = 0;
    return p;
}

inline std::shared_ptr<gateway::Gateway> mock_gateway(gateway::MockScript script,
                                                      gateway::BackendProfile profile = quiet_profile()) {
    return std::make_shared<gateway::Gateway>(profile, std::make_shared<gateway::MockBackend>(std::move(script)));
}

inline std::shared_ptr<gateway::Gateway> mock_gateway_json(const std::string& json_text) {
    return mock_gateway(gateway::MockScript::from_json(nlohmann::json::parse(json_text)));
}

// seeker/helper alternating conversation with `n` utterances.
inline Conversation alternating(const std::string& id, std::size_t n, bool helper_first = false) {
    std::vector<std::pair<Speaker, std::string>> turns;
    for (std::size_t i = 0; i < n; ++i) {
        const bool helper = (i % 2 == 1) != helper_first;
        turns.emplace_back(helper ? Speaker::Helper : Speaker::Seeker,
                           (helper ? "helper line " : "seeker line ") + std::to_string(i));
    }
    return make_conversation(id, turns);
}

inline std::string random_text(std::mt19937_64& rng, bool allow_specials) {
    static const std::vector<std::string> words = {"you", "feel", "that", "sounds", "hard", "what", "would",
                                                   "help", "right", "now", "I", "hear", "Could", "share", "more?"};
    static const std::vector<std::string> specials = {"\\", "\n", "\r\n", ":", ", ", "Alternative: x", "  ", "é", "\t"};
    std::uniform_int_distribution<int> len(1, 12);
    std::string out;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        if (allow_specials && rng() % 5 == 0) {
            out += specials[rng() % specials.size()];
        } else {
            out += words[rng() % words.size()];
        }
    }
    // values are stored trimmed; keep them non-blank
    return std::string(util::trim(out)).empty() ? "ok" : std::string(util::trim(out));
}

inline SkillSet random_skills(std::mt19937_64& rng, std::uint8_t forbid = 0) {
    for (;;) {
        const auto m = static_cast<std::uint8_t>(rng() & 0xff & ~forbid);
        if (m) return SkillSet::from_mask(m);
        if (forbid == 0xff) return {};
    }
}

// A random valid feedback record.
inline Feedback random_feedback(std::mt19937_64& rng, bool allow_specials = true) {
    Feedback fb;
    fb.appropriate = rng() % 2 == 0;
    if (!fb.appropriate) {
        fb.goal_alignment = random_text(rng, allow_specials);
        fb.areas_for_improvement = random_skills(rng, 0x80);
        fb.alternative = random_text(rng, allow_specials);
    }
    if (rng() % 2 == 0) {
        const std::uint8_t taken = fb.areas_for_improvement ? fb.areas_for_improvement->mask() : 0;
        if (taken != 0xff) fb.positive_areas = random_skills(rng, taken);
    }
    return fb;
}

}  // namespace fbk::testkit
