#pragma once

// Feedback endpoint.
//
//   POST /v1/feedback
//     {"conversation": {"id": "c1", "utterances": [{"speaker": "seeker", "text": "..."}, ...]},
//      "target_index": 3,
//      "boundaries": [0, 4]}          # optional; computed with C99 when absent
//   200 {"conversation_id": "c1", "target_index": 3, "feedback": {...}, "text": "<canonical feedback text>"}
//   400 schema violation or non-helper target, 401 bad token, 429 rate limited, 502 backend failure
//
//   GET /health -> 200 {"status": "ok", "backend": "<name>"}

#include <iostream>
#include <memory>
#include <mutex>
#include <string>

#include "fbk/core/dataset_io.hpp"
#include "fbk/gateway/gateway.hpp"
#include "fbk/gateway/http_backend.hpp"
#include "fbk/segment/c99.hpp"
#include "fbk/selfimprove/selfimprove.hpp"

namespace fbk::service {

struct Response {
    int status = 200;
    std::string body;
};

inline Response error_response(int status, const std::string& message) {
    ordered_json j;
    j["error"] = message;
    return {status, j.dump()};
}

class FeedbackService {
public:
    FeedbackService(std::shared_ptr<gateway::Gateway> gw, std::string token = {}, seg::SegmentParams params = {})
        : gw_(std::move(gw)), token_(std::move(token)), params_(params) {}

    bool authorized(const std::string& authorization_header) const {
        return token_.empty() || authorization_header == "Bearer " + token_;
    }

    Response health() const {
        ordered_json j;
        j["status"] = "ok";
        j["backend"] = gw_->backend().name();
        return {200, j.dump()};
    }

    Response feedback(const std::string& body) const {
        Conversation conv;
        std::size_t target = 0;
        std::optional<seg::Segmentation> segs;
        try {
            const json req = json::parse(body);
            if (!req.is_object()) throw DataError("request body must be a JSON object");
            for (const auto& [k, _] : req.items()) {
                if (k != "conversation" && k != "target_index" && k != "boundaries") {
                    throw DataError("unknown field '" + k + "'");
                }
            }
            if (!req.contains("conversation")) throw DataError("missing field 'conversation'");
            if (!req.contains("target_index") || !req["target_index"].is_number_unsigned()) {
                throw DataError("'target_index' must be a non-negative integer");
            }
            conv = annotated_from_json(req["conversation"], "conversation").conversation;
            target = req["target_index"].get<std::size_t>();
            if (target >= conv.size()) {
                throw DataError("target_index " + std::to_string(target) + " out of range for " +
                                std::to_string(conv.size()) + " utterances");
            }
            if (conv.utterances[target].speaker != Speaker::Helper) throw NotHelperUtterance(target);
            if (auto b = req.find("boundaries"); b != req.end()) {
                segs.emplace(b->get<std::vector<std::size_t>>(), conv.size());
            }
        } catch (const json::exception& e) {
            return error_response(400, e.what());
        } catch (const Error& e) {
            return error_response(400, e.what());
        }

        try {
            if (!segs) {
                std::vector<std::string> texts;
                for (const auto& u : conv.utterances) texts.push_back(u.text);
                segs = seg::segment_embeddings(gw_->embed(texts), params_);
            }
            const auto q = selfimprove::query_for(conv, target, *segs);
            const auto fb = gw_->sample_feedback(q, 1).front();
            ordered_json j;
            j["conversation_id"] = conv.id;
            j["target_index"] = target;
            j["feedback"] = feedback_to_json(fb);
            j["text"] = serialize_feedback(fb);
            return {200, j.dump()};
        } catch (const RateLimited& e) {
            return error_response(429, e.what());
        } catch (const BackendError& e) {
            return error_response(502, e.what());
        } catch (const Error& e) {
            return error_response(400, e.what());
        }
    }

private:
    std::shared_ptr<gateway::Gateway> gw_;
    std::string token_;
    seg::SegmentParams params_;
};

// Registers the routes on `server`. Each request is logged as one line to `log`.
inline void install_routes(httplib::Server& server, std::shared_ptr<FeedbackService> svc, std::ostream* log = nullptr) {
    auto guarded = [svc](const httplib::Request& req, httplib::Response& res, auto&& handler) {
        if (!svc->authorized(req.get_header_value("Authorization"))) {
            const auto r = error_response(401, "missing or invalid bearer token");
            res.status = r.status;
            res.set_content(r.body, "application/json");
            return;
        }
        const Response r = handler();
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    server.Get("/health", [svc, guarded](const httplib::Request& req, httplib::Response& res) {
        guarded(req, res, [&] { return svc->health(); });
    });
    server.Post("/v1/feedback", [svc, guarded](const httplib::Request& req, httplib::Response& res) {
        guarded(req, res, [&] { return svc->feedback(req.body); });
    });
    if (log) {
        auto mu = std::make_shared<std::mutex>();
        server.set_logger([log, mu](const httplib::Request& req, const httplib::Response& res) {
            ordered_json j;
            j["method"] = req.method;
            j["path"] = req.path;
            j["status"] = res.status;
            j["remote"] = req.remote_addr;
            std::lock_guard lock(*mu);
            *log << j.dump() << std::endl;
        });
    }
}

}  // namespace fbk::service
