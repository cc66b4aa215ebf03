#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fbk/core/validate.hpp"
#include "fbk/gateway/gateway.hpp"
#include "fbk/segment/context.hpp"

namespace fbk::selfimprove {

// Appropriateness threshold on the original utterance: pairs are only built
// for utterances whose p_original is strictly below it.
inline constexpr double kPairGate = 0.5;
inline constexpr std::size_t kDefaultSamples = 10;

struct ScoredSample {
    Feedback feedback;
    double sigma = 0.0;
    std::size_t sample_index = 0;

    friend bool operator==(const ScoredSample&, const ScoredSample&) = default;
};

struct PreferencePair {
    std::string conversation_id;
    std::size_t utterance_index = 0;
    std::string input;  // rendered context + target utterance
    ScoredSample chosen;
    ScoredSample rejected;
    double p_original = 0.0;
};

inline Conversation substitute(const Conversation& c, std::size_t i, std::string alternative) {
    if (i >= c.size() || c.utterances[i].speaker != Speaker::Helper) throw NotHelperUtterance(i);
    auto t = util::trim(alternative);
    if (t.empty()) throw PreconditionError("substitute needs a non-empty alternative");
    Conversation out = c;
    out.utterances[i].text = std::string(t);
    return out;
}

inline gateway::FeedbackQuery query_for(const Conversation& c, std::size_t i, const seg::Segmentation& segs) {
    const auto w = seg::context_for(i, segs);
    return {c.id, i, seg::render_context(c, w), c.utterances.at(i).text};
}

// Probability that the model calls the utterance appropriate after the
// feedback's advice is followed: the alternative is substituted in when the
// feedback asks for a change; otherwise the original is scored as-is.
inline double self_score(const Conversation& c, std::size_t i, const Feedback& fb, const seg::Segmentation& segs,
                         gateway::Gateway& scorer) {
    require_valid(fb);
    if (i >= c.size() || c.utterances[i].speaker != Speaker::Helper) throw NotHelperUtterance(i);
    if (fb.appropriate) return scorer.appropriateness_prob(query_for(c, i, segs)).p_true;
    const auto changed = substitute(c, i, *fb.alternative);
    return scorer.appropriateness_prob(query_for(changed, i, segs)).p_true;
}

inline std::vector<ScoredSample> score_samples(const Conversation& c, std::size_t i, const std::vector<Feedback>& fbs,
                                               const seg::Segmentation& segs, gateway::Gateway& scorer) {
    std::vector<ScoredSample> out;
    out.reserve(fbs.size());
    for (std::size_t s = 0; s < fbs.size(); ++s) out.push_back({fbs[s], self_score(c, i, fbs[s], segs, scorer), s});
    return out;
}

// Indices of the highest and lowest sigma (ties to the lowest sample index),
// or nullopt when every sample scores the same.
inline std::optional<std::pair<std::size_t, std::size_t>> select_extremes(const std::vector<ScoredSample>& samples) {
    if (samples.empty()) return std::nullopt;
    std::size_t hi = 0, lo = 0;
    for (std::size_t k = 1; k < samples.size(); ++k) {
        if (samples[k].sigma > samples[hi].sigma) hi = k;
        if (samples[k].sigma < samples[lo].sigma) lo = k;
    }
    if (!(samples[hi].sigma > samples[lo].sigma)) return std::nullopt;
    return std::pair{hi, lo};
}

struct PairOutcome {
    double p_original = 0.0;
    std::vector<ScoredSample> samples;  // empty when the gate skipped sampling
    std::optional<PreferencePair> pair;
};

inline PairOutcome score_and_pair(const Conversation& c, std::size_t i, std::size_t n, const seg::Segmentation& segs,
                                  gateway::Gateway& generator, gateway::Gateway& scorer) {
    if (n < 2) throw PreconditionError("build_pair needs n >= 2");
    if (i >= c.size() || c.utterances[i].speaker != Speaker::Helper) throw NotHelperUtterance(i);
    PairOutcome out;
    const auto q = query_for(c, i, segs);
    out.p_original = scorer.appropriateness_prob(q).p_true;
    if (!(out.p_original < kPairGate)) return out;
    out.samples = score_samples(c, i, generator.sample_feedback(q, n), segs, scorer);
    if (auto ext = select_extremes(out.samples)) {
        PreferencePair p;
        p.conversation_id = c.id;
        p.utterance_index = i;
        p.input = render_feedback_input(q.context_text, q.utterance_text);
        p.chosen = out.samples[ext->first];
        p.rejected = out.samples[ext->second];
        p.p_original = out.p_original;
        out.pair = std::move(p);
    }
    return out;
}

inline std::optional<PreferencePair> build_pair(const Conversation& c, std::size_t i, std::size_t n,
                                                const seg::Segmentation& segs, gateway::Gateway& generator,
                                                gateway::Gateway& scorer) {
    return score_and_pair(c, i, n, segs, generator, scorer).pair;
}

inline std::optional<PreferencePair> build_pair(const Conversation& c, std::size_t i, std::size_t n,
                                                const seg::Segmentation& segs, gateway::Gateway& model) {
    return build_pair(c, i, n, segs, model, model);
}

}  // namespace fbk::selfimprove
