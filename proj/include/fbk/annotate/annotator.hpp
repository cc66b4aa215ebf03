#pragma once

#include <string>
#include <vector>

#include "fbk/annotate/chunks.hpp"
#include "fbk/annotate/prompt.hpp"
#include "fbk/gateway/gateway.hpp"
#include "fbk/segment/context.hpp"

namespace fbk::annotate {

struct AnnotationOptions {
    std::string template_text;
    std::string examples;
    std::string definitions = catalog_definitions_text();
};

struct ChunkFailure {
    std::size_t chunk_number = 0;  // 1-based
    std::vector<std::size_t> window;
    std::string message;
};

struct AnnotationOutcome {
    AnnotatedConversation annotated;  // records from every chunk that succeeded
    std::vector<ChunkFailure> failures;

    bool complete() const noexcept { return failures.empty(); }
};

// "[k] Speaker: text" for utterances [lo, hi].
inline std::string render_numbered(const Conversation& c, std::size_t lo, std::size_t hi) {
    std::string out;
    for (std::size_t k = lo; k <= hi && k < c.size(); ++k) {
        out += "[" + std::to_string(k) + "] " + seg::render_utterance(c.utterances[k]) + "\n";
    }
    return out;
}

// Prompt for one chunk: the conversation from the context start of the
// chunk's first member through its last member.
inline std::string chunk_prompt(const Conversation& c, const seg::Segmentation& segs, const Chunk& chunk,
                                const AnnotationOptions& opt) {
    PromptParts parts;
    parts.definitions = opt.definitions;
    parts.examples = opt.examples;
    const auto lo = seg::context_for(chunk.window.front(), segs).lo;
    parts.conversation = render_numbered(c, lo, chunk.window.back());
    parts.targets = chunk.window;
    return assemble_prompt(opt.template_text, parts);
}

// Requests feedback chunk by chunk (sequentially) and merges the kept
// records. Failed chunks are reported with their number; records from the
// other chunks are still returned.
inline AnnotationOutcome annotate_conversation(const Conversation& c, const seg::Segmentation& segs,
                                               gateway::Gateway& gw, const AnnotationOptions& opt) {
    AnnotationOutcome out;
    out.annotated.conversation = c;
    if (segs.size() != c.size()) throw DataError("segmentation of " + c.id + " does not match its length");
    const auto helpers = c.helper_indices();
    if (helpers.empty()) return out;

    const auto plan = plan_chunks(helpers);
    for (std::size_t k = 0; k < plan.chunks.size(); ++k) {
        const auto& chunk = plan.chunks[k];
        gateway::GenerationRequest req;
        req.kind = gateway::GenerationKind::Annotation;
        req.prompt = chunk_prompt(c, segs, chunk, opt);
        req.conversation_id = c.id;
        req.targets = chunk.window;
        req.fingerprint = util::hex64(util::fnv1a(req.prompt));
        try {
            auto records = gw.generate_parsed(req, [&](const std::string& text) {
                return parse_chunk_response(text, chunk.window);
            });
            for (auto idx : chunk.kept) {
                if (out.annotated.feedback.count(idx)) {
                    throw MergeConflict("utterance " + std::to_string(idx) + " of " + c.id + " kept twice");
                }
                out.annotated.feedback.emplace(idx, std::move(records.at(idx)));
            }
        } catch (const MergeConflict&) {
            throw;
        } catch (const Error& e) {
            out.failures.push_back({k + 1, chunk.window, e.what()});
        }
    }
    return out;
}

}  // namespace fbk::annotate
