#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

#include "fbk/core/prompt_format.hpp"
#include "fbk/error.hpp"
#include "fbk/util/text.hpp"

namespace fbk::gateway {

// What the model is asked about: one helper utterance in its context.
struct FeedbackQuery {
    std::string conversation_id;
    std::size_t utterance_index = 0;
    std::string context_text;
    std::string utterance_text;

    // Stable hash of (conversation id, utterance index, context text).
    std::string fingerprint() const {
        std::uint64_t h = util::fnv1a(conversation_id);
        h = util::fnv1a("\x1f", h);
        h = util::fnv1a(std::to_string(utterance_index), h);
        h = util::fnv1a("\x1f", h);
        h = util::fnv1a(context_text, h);
        return util::hex64(h);
    }

    std::string prompt() const {
        return render_feedback_prompt(render_feedback_input(context_text, utterance_text));
    }
};

enum class GenerationKind { Feedback, Annotation };

struct GenerationRequest {
    GenerationKind kind = GenerationKind::Feedback;
    std::string prompt;
    std::string conversation_id;
    std::vector<std::size_t> targets;  // utterance indices the prompt asks about
    std::string fingerprint;
    std::size_t sample_index = 0;
    std::size_t attempt = 0;
    double temperature = 0.7;
    int max_tokens = 512;
};

struct Completion {
    std::string text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

struct LabelRequest {
    std::string prompt;
    FeedbackQuery query;
};

struct LabelMasses {
    double mass_true = 0.0;
    double mass_false = 0.0;
};

struct LabelProbability {
    double p_true = 0.0;
    LabelMasses raw;
};

// p_true = mass_true / (mass_true + mass_false).
inline LabelProbability normalize_masses(LabelMasses m) {
    if (!std::isfinite(m.mass_true) || !std::isfinite(m.mass_false) || m.mass_true < 0.0 || m.mass_false < 0.0) {
        throw BackendError("label masses must be finite and non-negative");
    }
    const double total = m.mass_true + m.mass_false;
    if (total <= 0.0) throw DegenerateMass();
    return {std::clamp(m.mass_true / total, 0.0, 1.0), m};
}

// Inference backend. Implementations throw BackendUnavailable for transport
// or server failures and RateLimited when throttled.
class Backend {
public:
    virtual ~Backend() = default;
    virtual Completion generate(const GenerationRequest& req) = 0;
    virtual LabelMasses label_masses(const LabelRequest& req) = 0;
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
    virtual std::string name() const = 0;
};

}  // namespace fbk::gateway
