#pragma once

// Score file: one JSON object per line,
//   {"conversation_id": "c1", "utterance_index": 3, "sample_index": 0, "sigma": 0.87}
// sorted by (conversation_id, utterance_index, sample_index).

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "fbk/core/dataset_io.hpp"
#include "fbk/segment/segments_io.hpp"
#include "fbk/selfimprove/selfimprove.hpp"
#include "fbk/util/parallel.hpp"

namespace fbk::eval {

struct EvalKey {
    std::string conversation_id;
    std::size_t utterance_index = 0;
    std::size_t sample_index = 0;
    auto operator<=>(const EvalKey&) const = default;
};

struct EvalEntry {
    EvalKey key;
    double sigma = 0.0;
};

class EvalSampleSet {
public:
    EvalSampleSet() = default;
    explicit EvalSampleSet(std::vector<EvalEntry> entries) {
        for (auto& e : entries) add(std::move(e));
    }

    void add(EvalEntry e) {
        if (!(e.sigma >= 0.0 && e.sigma <= 1.0)) {
            throw DataError(describe(e.key) + ": sigma " + std::to_string(e.sigma) + " outside [0, 1]");
        }
        if (!entries_.emplace(e.key, e.sigma).second) throw DataError(describe(e.key) + ": duplicate score entry");
    }

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::map<EvalKey, double>& entries() const noexcept { return entries_; }

    // Sigmas in key order.
    std::vector<double> sigmas() const {
        std::vector<double> out;
        out.reserve(entries_.size());
        for (const auto& [_, s] : entries_) out.push_back(s);
        return out;
    }

    std::set<std::pair<std::string, std::size_t>> utterances() const {
        std::set<std::pair<std::string, std::size_t>> out;
        for (const auto& [k, _] : entries_) out.emplace(k.conversation_id, k.utterance_index);
        return out;
    }

    std::size_t samples_for(const std::string& conv, std::size_t utt) const {
        auto it = entries_.lower_bound({conv, utt, 0});
        std::size_t n = 0;
        for (; it != entries_.end() && it->first.conversation_id == conv && it->first.utterance_index == utt; ++it) ++n;
        return n;
    }

    static std::string describe(const EvalKey& k) {
        return k.conversation_id + "#" + std::to_string(k.utterance_index) + "/" + std::to_string(k.sample_index);
    }

private:
    std::map<EvalKey, double> entries_;
};

inline std::string dump_scores(const EvalSampleSet& s) {
    std::string out;
    for (const auto& [k, sigma] : s.entries()) {
        ordered_json j;
        j["conversation_id"] = k.conversation_id;
        j["utterance_index"] = k.utterance_index;
        j["sample_index"] = k.sample_index;
        j["sigma"] = sigma;
        out += j.dump();
        out += '\n';
    }
    return out;
}

inline EvalSampleSet parse_scores(std::string_view content, const std::string& name = "scores") {
    EvalSampleSet s;
    for_each_jsonl(content, name, [&](const json& j, const std::string& where) {
        if (!j.is_object()) throw DataError(where + ": expected an object");
        for (const auto& [k, _] : j.items()) {
            if (k != "conversation_id" && k != "utterance_index" && k != "sample_index" && k != "sigma") {
                throw DataError(where + ": unknown field '" + k + "'");
            }
        }
        EvalEntry e;
        try {
            e.key.conversation_id = fbk::detail::require(j, "conversation_id", where).get<std::string>();
            e.key.utterance_index = fbk::detail::require(j, "utterance_index", where).get<std::size_t>();
            e.key.sample_index = fbk::detail::require(j, "sample_index", where).get<std::size_t>();
            e.sigma = fbk::detail::require(j, "sigma", where).get<double>();
        } catch (const json::exception& ex) {
            throw DataError(where + ": " + ex.what());
        }
        try {
            s.add(std::move(e));
        } catch (const DataError& ex) {
            throw DataError(where + ": " + ex.what());
        }
    });
    return s;
}

inline EvalSampleSet load_scores(const std::filesystem::path& path) {
    return parse_scores(util::read_file(path), path.string());
}

struct UtteranceFailure {
    std::string conversation_id;
    std::size_t utterance_index = 0;
    std::string message;
};

struct ScoreRun {
    EvalSampleSet scores;
    std::vector<UtteranceFailure> failures;
    std::size_t skipped = 0;  // utterances already complete in the resume input
    bool complete() const noexcept { return failures.empty(); }
};

// k sampled generations per helper utterance, each self-scored. Utterances
// that already have k entries in `resume` are kept and not re-requested.
// Backend or data failures are recorded per utterance so the partial set can
// be written out and resumed; logic errors propagate.
inline ScoreRun generate_eval_scores(const std::vector<AnnotatedConversation>& data, const seg::SegmentationMap& segs,
                                     std::size_t k, gateway::Gateway& generator, gateway::Gateway& scorer,
                                     const EvalSampleSet& resume = {}, std::size_t workers = 1) {
    if (k == 0) throw PreconditionError("generate_eval_scores needs k >= 1");
    struct Job {
        const Conversation* conv;
        const seg::Segmentation* seg;
        std::size_t utt;
    };
    ScoreRun run;
    std::vector<Job> jobs;
    for (const auto& ac : data) {
        const auto& s = seg::segmentation_for(segs, ac.conversation);
        for (auto i : ac.conversation.helper_indices()) {
            bool have_all = true;
            for (std::size_t j = 0; j < k && have_all; ++j) {
                have_all = resume.entries().count({ac.conversation.id, i, j}) > 0;
            }
            if (have_all) {
                for (std::size_t j = 0; j < k; ++j) {
                    run.scores.add({{ac.conversation.id, i, j}, resume.entries().at({ac.conversation.id, i, j})});
                }
                ++run.skipped;
                continue;
            }
            jobs.push_back({&ac.conversation, &s, i});
        }
    }
    auto results = util::parallel_map(jobs.size(), workers, [&](std::size_t j) {
        const auto& job = jobs[j];
        const auto q = selfimprove::query_for(*job.conv, job.utt, *job.seg);
        const auto fbs = generator.sample_feedback(q, k);
        return selfimprove::score_samples(*job.conv, job.utt, fbs, *job.seg, scorer);
    });
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const auto& job = jobs[j];
        if (results[j].ok()) {
            for (const auto& s : *results[j].value) run.scores.add({{job.conv->id, job.utt, s.sample_index}, s.sigma});
            continue;
        }
        try {
            std::rethrow_exception(results[j].error);
        } catch (const BackendError& e) {
            run.failures.push_back({job.conv->id, job.utt, e.what()});
        } catch (const DataError& e) {
            run.failures.push_back({job.conv->id, job.utt, e.what()});
        }
    }
    return run;
}

}  // namespace fbk::eval
