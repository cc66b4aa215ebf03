#pragma once

// Scripted, fully deterministic backend. Script file (JSON):
//
//   {
//     "default_p": 0.5,
//     "rules": [{"contains": "?", "p": 0.8}, {"equals": "...", "p": 0.49}, {"regex": "^I ", "p": 0.3}],
//     "text_scores": {"exact utterance text": 0.9},
//     "generations": [
//       {"conversation": "c1", "utterance": 3, "samples": [<sample>, ...]},
//       {"fingerprint": "0123abcd...", "samples": [...]}
//     ],
//     "default_generations": [<sample>, ...],
//     "annotations": [{"conversation": "c1", "utterance": 3, "feedback": {...}}],
//     "default_annotation": {"appropriate": true},
//     "outages": [{"conversation": "c1", "utterance": 7, "kind": "annotate"}],
//     "embedding_dim": 64
//   }
//
// A <sample> is a feedback object, a raw string emitted verbatim, or
// {"attempts": [<feedback object or string>, ...]} giving the output per
// retry attempt (the last entry repeats). Sample lists are cycled by sample
// index. Appropriateness probability for a text: text_scores, then the first
// matching rule, then default_p; masses are reported as (p, 1 - p).
// Outage kinds: "generate", "annotate", "label", "embed" or "any"; an
// outage matches when every given field matches the request.

#include <map>
#include <optional>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "fbk/core/dataset_io.hpp"
#include "fbk/core/feedback_text.hpp"
#include "fbk/gateway/backend.hpp"

namespace fbk::gateway {

struct MockPredicate {
    enum class Kind { Contains, Equals, Regex };
    Kind kind = Kind::Contains;
    std::string pattern;
    std::regex re;

    bool matches(std::string_view text) const {
        switch (kind) {
            case Kind::Contains: return text.find(pattern) != std::string_view::npos;
            case Kind::Equals: return text == pattern;
            case Kind::Regex: return std::regex_search(text.begin(), text.end(), re);
        }
        return false;
    }
};

struct MockRule {
    MockPredicate when;
    double p_true = 0.5;
};

struct MockSample {
    std::vector<std::string> attempts;  // raw text per attempt

    const std::string& for_attempt(std::size_t attempt) const {
        return attempts[std::min(attempt, attempts.size() - 1)];
    }
};

struct MockOutage {
    std::optional<std::string> conversation;
    std::optional<std::size_t> utterance;
    std::string kind = "any";
};

struct MockScript {
    double default_p = 0.5;
    std::vector<MockRule> rules;
    std::map<std::string, double> text_scores;
    std::map<std::string, std::vector<MockSample>> by_fingerprint;
    std::map<std::pair<std::string, std::size_t>, std::vector<MockSample>> by_utterance;
    std::vector<MockSample> default_generations = {MockSample{{"Appropriate: yes\n"}}};
    std::map<std::pair<std::string, std::size_t>, Feedback> annotations;
    Feedback default_annotation = Feedback::ok();
    std::vector<MockOutage> outages;
    std::size_t embedding_dim = 64;

    double p_for(std::string_view text) const {
        if (auto it = text_scores.find(std::string(text)); it != text_scores.end()) return it->second;
        for (const auto& r : rules) {
            if (r.when.matches(text)) return r.p_true;
        }
        return default_p;
    }

    MockScript& add_rule(MockPredicate::Kind kind, std::string pattern, double p) {
        MockRule r;
        r.when.kind = kind;
        r.when.pattern = std::move(pattern);
        if (kind == MockPredicate::Kind::Regex) r.when.re = std::regex(r.when.pattern);
        r.p_true = p;
        check_p(p);
        rules.push_back(std::move(r));
        return *this;
    }

    // Scripts the samples for one utterance, as feedback records.
    MockScript& script_samples(const std::string& conversation, std::size_t utterance, const std::vector<Feedback>& fbs) {
        auto& list = by_utterance[{conversation, utterance}];
        list.clear();
        for (const auto& fb : fbs) list.push_back(MockSample{{serialize_feedback(fb)}});
        return *this;
    }

    static void check_p(double p) {
        if (!(p >= 0.0 && p <= 1.0)) throw DataError("mock script: probability outside [0,1]");
    }

    static MockSample sample_from_json(const json& j, const std::string& where) {
        auto one = [&](const json& v) -> std::string {
            if (v.is_string()) return v.get<std::string>();
            if (v.is_object()) {
                auto fb = feedback_from_json(v, where);
                return serialize_feedback(fb);
            }
            throw DataError(where + ": sample must be a feedback object or a string");
        };
        MockSample s;
        if (j.is_object() && j.contains("attempts")) {
            const auto& a = j["attempts"];
            if (!a.is_array() || a.empty()) throw DataError(where + ": 'attempts' must be a non-empty array");
            for (const auto& v : a) s.attempts.push_back(one(v));
        } else {
            s.attempts.push_back(one(j));
        }
        return s;
    }

    static std::vector<MockSample> samples_from_json(const json& j, const std::string& where) {
        if (!j.is_array() || j.empty()) throw DataError(where + ": samples must be a non-empty array");
        std::vector<MockSample> out;
        for (std::size_t i = 0; i < j.size(); ++i) {
            out.push_back(sample_from_json(j[i], where + "[" + std::to_string(i) + "]"));
        }
        return out;
    }

    static MockScript from_json(const json& j) {
        if (!j.is_object()) throw DataError("mock script: expected an object");
        MockScript s;
        s.default_p = j.value("default_p", 0.5);
        check_p(s.default_p);
        if (auto it = j.find("rules"); it != j.end()) {
            for (const auto& r : *it) {
                double p = r.at("p").get<double>();
                if (r.contains("contains")) {
                    s.add_rule(MockPredicate::Kind::Contains, r["contains"].get<std::string>(), p);
                } else if (r.contains("equals")) {
                    s.add_rule(MockPredicate::Kind::Equals, r["equals"].get<std::string>(), p);
                } else if (r.contains("regex")) {
                    s.add_rule(MockPredicate::Kind::Regex, r["regex"].get<std::string>(), p);
                } else {
                    throw DataError("mock script: rule needs 'contains', 'equals' or 'regex'");
                }
            }
        }
        if (auto it = j.find("text_scores"); it != j.end()) {
            for (const auto& [k, v] : it->items()) {
                check_p(v.get<double>());
                s.text_scores[k] = v.get<double>();
            }
        }
        if (auto it = j.find("generations"); it != j.end()) {
            for (std::size_t i = 0; i < it->size(); ++i) {
                const auto& g = (*it)[i];
                const std::string where = "mock script generations[" + std::to_string(i) + "]";
                auto samples = samples_from_json(g.at("samples"), where);
                if (g.contains("fingerprint")) {
                    s.by_fingerprint[g["fingerprint"].get<std::string>()] = std::move(samples);
                } else {
                    s.by_utterance[{g.at("conversation").get<std::string>(), g.at("utterance").get<std::size_t>()}] =
                        std::move(samples);
                }
            }
        }
        if (auto it = j.find("default_generations"); it != j.end()) {
            s.default_generations = samples_from_json(*it, "mock script default_generations");
        }
        if (auto it = j.find("annotations"); it != j.end()) {
            for (const auto& a : *it) {
                auto fb = feedback_from_json(a.at("feedback"), "mock script annotation");
                require_valid(fb, "mock script annotation");
                s.annotations[{a.at("conversation").get<std::string>(), a.at("utterance").get<std::size_t>()}] = fb;
            }
        }
        if (auto it = j.find("default_annotation"); it != j.end()) {
            s.default_annotation = feedback_from_json(*it, "mock script default_annotation");
            require_valid(s.default_annotation, "mock script default_annotation");
        }
        if (auto it = j.find("outages"); it != j.end()) {
            for (const auto& o : *it) {
                MockOutage out;
                if (o.contains("conversation")) out.conversation = o["conversation"].get<std::string>();
                if (o.contains("utterance")) out.utterance = o["utterance"].get<std::size_t>();
                out.kind = o.value("kind", std::string("any"));
                s.outages.push_back(std::move(out));
            }
        }
        s.embedding_dim = j.value("embedding_dim", std::size_t{64});
        if (s.embedding_dim < 2) throw DataError("mock script: embedding_dim must be >= 2");
        return s;
    }

    static MockScript load(const std::filesystem::path& path) {
        try {
            return from_json(json::parse(util::read_file(path)));
        } catch (const json::exception& e) {
            throw DataError("mock script " + path.string() + ": " + e.what());
        }
    }
};

class MockBackend final : public Backend {
public:
    explicit MockBackend(MockScript script) : script_(std::move(script)) {}

    Completion generate(const GenerationRequest& req) override {
        const bool annotate = req.kind == GenerationKind::Annotation;
        check_outage(annotate ? "annotate" : "generate", req.conversation_id, req.targets);
        Completion c;
        if (annotate) {
            for (auto t : req.targets) {
                auto it = script_.annotations.find({req.conversation_id, t});
                const Feedback& fb = it == script_.annotations.end() ? script_.default_annotation : it->second;
                c.text += "[utterance " + std::to_string(t) + "]\n";
                c.text += serialize_feedback(fb);
            }
        } else {
            const std::vector<MockSample>* list = &script_.default_generations;
            if (auto it = script_.by_fingerprint.find(req.fingerprint); it != script_.by_fingerprint.end()) {
                list = &it->second;
            } else if (!req.targets.empty()) {
                if (auto it2 = script_.by_utterance.find({req.conversation_id, req.targets.front()});
                    it2 != script_.by_utterance.end()) {
                    list = &it2->second;
                }
            }
            c.text = (*list)[req.sample_index % list->size()].for_attempt(req.attempt);
        }
        c.prompt_tokens = util::word_count(req.prompt);
        c.completion_tokens = util::word_count(c.text);
        return c;
    }

    LabelMasses label_masses(const LabelRequest& req) override {
        check_outage("label", req.query.conversation_id, {req.query.utterance_index});
        const double p = script_.p_for(req.query.utterance_text);
        return {p, 1.0 - p};
    }

    // Feature-hashed bag of words plus a constant component (never zero).
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
        check_outage("embed", std::nullopt, {});
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        const std::size_t dim = script_.embedding_dim;
        for (const auto& t : texts) {
            std::vector<double> v(dim, 0.0);
            v[0] = 0.1;
            const auto low = util::to_lower(t);
            std::size_t i = 0;
            while (i < low.size()) {
                while (i < low.size() && !util::is_word_char(low[i])) ++i;
                std::size_t j = i;
                while (j < low.size() && util::is_word_char(low[j])) ++j;
                if (j > i) {
                    const auto h = util::fnv1a(std::string_view(low).substr(i, j - i));
                    v[1 + h % (dim - 1)] += (h >> 63) ? -1.0 : 1.0;
                }
                i = j;
            }
            out.push_back(std::move(v));
        }
        return out;
    }

    std::string name() const override { return "mock"; }
    const MockScript& script() const noexcept { return script_; }

private:
    void check_outage(std::string_view kind, const std::optional<std::string>& conv,
                      const std::vector<std::size_t>& targets) const {
        for (const auto& o : script_.outages) {
            if (o.kind != "any" && o.kind != kind) continue;
            if (o.conversation && (!conv || *o.conversation != *conv)) continue;
            if (o.utterance && std::find(targets.begin(), targets.end(), *o.utterance) == targets.end()) continue;
            throw BackendUnavailable("mock outage (" + std::string(kind) + ")");
        }
    }

    MockScript script_;
};

}  // namespace fbk::gateway
