#pragma once

#include <atomic>
#include <chrono>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>

#include "fbk/core/dataset_io.hpp"
#include "fbk/core/feedback_text.hpp"
#include "fbk/gateway/backend.hpp"
#include "fbk/gateway/profile.hpp"
#include "fbk/segment/matrix.hpp"

namespace fbk::gateway {

// Spaces requests at least 1/rps apart. rps <= 0 disables it.
class RateLimiter {
public:
    explicit RateLimiter(double rps) : interval_(rps > 0.0 ? std::chrono::duration<double>(1.0 / rps) : std::chrono::duration<double>(0)) {}

    void acquire() {
        if (interval_.count() <= 0.0) return;
        std::chrono::steady_clock::time_point slot;
        {
            std::lock_guard lock(mu_);
            const auto now = std::chrono::steady_clock::now();
            slot = std::max(now, next_);
            next_ = slot + std::chrono::duration_cast<std::chrono::steady_clock::duration>(interval_);
        }
        std::this_thread::sleep_until(slot);
    }

private:
    std::chrono::duration<double> interval_;
    std::mutex mu_;
    std::chrono::steady_clock::time_point next_{};
};

struct AuditEntry {
    std::uint64_t request_id = 0;
    std::string kind;
    std::string fingerprint;
    std::size_t attempt = 0;
    double latency_ms = 0.0;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    std::string status;
};

// Append-only JSON-lines log of backend traffic.
class AuditLog {
public:
    explicit AuditLog(const std::filesystem::path& path) : out_(path, std::ios::app) {
        if (!out_) throw PreconditionError("cannot open audit log " + path.string());
    }

    void record(const AuditEntry& e) {
        ordered_json j;
        j["request_id"] = e.request_id;
        j["kind"] = e.kind;
        j["fingerprint"] = e.fingerprint;
        j["attempt"] = e.attempt;
        j["latency_ms"] = e.latency_ms;
        j["prompt_tokens"] = e.prompt_tokens;
        j["completion_tokens"] = e.completion_tokens;
        j["status"] = e.status;
        std::lock_guard lock(mu_);
        out_ << j.dump() << '\n';
        out_.flush();
    }

private:
    std::mutex mu_;
    std::ofstream out_;
};

// Thread-safe facade over a backend: retries with exponential backoff,
// throttling, output validation, and auditing.
class Gateway {
public:
    Gateway(BackendProfile profile, std::shared_ptr<Backend> backend, std::shared_ptr<AuditLog> audit = nullptr)
        : profile_(std::move(profile)), backend_(std::move(backend)), audit_(std::move(audit)),
          limiter_(profile_.rate_limit_rps) {}

    const BackendProfile& profile() const noexcept { return profile_; }
    Backend& backend() noexcept { return *backend_; }
    std::uint64_t retries_used() const noexcept { return retries_.load(); }
    std::uint64_t requests_sent() const noexcept { return next_id_.load(); }

    // Sends `req`, parses the text with `parse`, and retries on transport
    // failures and on unparseable output (ParseError, InvalidFeedback,
    // UnparseableGeneration) until the retry budget is spent.
    template <class Parse>
    auto generate_parsed(GenerationRequest req, Parse&& parse) -> decltype(parse(std::string{})) {
        req.temperature = profile_.temperature;
        req.max_tokens = profile_.max_tokens;
        const std::size_t attempts = static_cast<std::size_t>(profile_.retry.retries) + 1;
        std::exception_ptr last;
        for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
            if (attempt > 0) ++retries_;
            req.attempt = attempt;
            const char* kind = req.kind == GenerationKind::Annotation ? "annotate" : "generate";
            Completion c;
            try {
                c = timed(kind, req.fingerprint, attempt, [&] { return backend_->generate(req); },
                          [](const Completion& x) { return std::pair{x.prompt_tokens, x.completion_tokens}; });
            } catch (const BackendUnavailable&) {
                last = std::current_exception();
                if (attempt + 1 < attempts) backoff(attempt);
                continue;
            } catch (const RateLimited&) {
                last = std::current_exception();
                if (attempt + 1 < attempts) backoff(attempt);
                continue;
            }
            try {
                return parse(c.text);
            } catch (const UnparseableGeneration&) {
                last = std::current_exception();
            } catch (const DataError& e) {
                last = std::make_exception_ptr(UnparseableGeneration(e.what(), c.text));
            }
        }
        std::rethrow_exception(last);
    }

    // n sampled feedback records, in sample order; every record is valid.
    std::vector<Feedback> sample_feedback(const FeedbackQuery& q, std::size_t n) {
        if (n == 0) throw PreconditionError("sample_feedback needs n >= 1");
        std::vector<Feedback> out;
        out.reserve(n);
        GenerationRequest req;
        req.kind = GenerationKind::Feedback;
        req.prompt = q.prompt();
        req.conversation_id = q.conversation_id;
        req.targets = {q.utterance_index};
        req.fingerprint = q.fingerprint();
        for (std::size_t s = 0; s < n; ++s) {
            req.sample_index = s;
            out.push_back(generate_parsed(req, [](const std::string& text) {
                Feedback fb = parse_feedback(text);
                require_valid(fb);
                return fb;
            }));
        }
        return out;
    }

    LabelProbability appropriateness_prob(const FeedbackQuery& q) {
        LabelRequest req{q.prompt(), q};
        const auto fp = q.fingerprint();
        const std::size_t attempts = static_cast<std::size_t>(profile_.retry.retries) + 1;
        std::exception_ptr last;
        for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
            if (attempt > 0) ++retries_;
            try {
                auto m = timed("label", fp, attempt, [&] { return backend_->label_masses(req); },
                               [](const LabelMasses&) { return std::pair<std::size_t, std::size_t>{0, 1}; });
                return normalize_masses(m);
            } catch (const BackendUnavailable&) {
                last = std::current_exception();
            } catch (const RateLimited&) {
                last = std::current_exception();
            }
            if (attempt + 1 < attempts) backoff(attempt);
        }
        std::rethrow_exception(last);
    }

    seg::EmbeddingMatrix embed(const std::vector<std::string>& texts) {
        if (texts.empty()) throw PreconditionError("embed needs at least one text");
        const std::size_t attempts = static_cast<std::size_t>(profile_.retry.retries) + 1;
        std::exception_ptr last;
        for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
            if (attempt > 0) ++retries_;
            try {
                auto rows = timed("embed", "", attempt, [&] { return backend_->embed(texts); },
                                  [](const auto&) { return std::pair<std::size_t, std::size_t>{0, 0}; });
                if (rows.size() != texts.size()) {
                    throw DimensionMismatch("backend returned " + std::to_string(rows.size()) + " vectors for " +
                                            std::to_string(texts.size()) + " texts");
                }
                return seg::EmbeddingMatrix(std::move(rows));
            } catch (const BackendUnavailable&) {
                last = std::current_exception();
            } catch (const RateLimited&) {
                last = std::current_exception();
            }
            if (attempt + 1 < attempts) backoff(attempt);
        }
        std::rethrow_exception(last);
    }

private:
    template <class Call, class Usage>
    auto timed(const char* kind, const std::string& fingerprint, std::size_t attempt, Call&& call, Usage&& usage)
        -> decltype(call()) {
        limiter_.acquire();
        const auto id = next_id_++;
        const auto t0 = std::chrono::steady_clock::now();
        auto log = [&](const std::string& status, std::size_t pt, std::size_t ct) {
            if (!audit_) return;
            const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
            audit_->record({id, kind, fingerprint, attempt, dt.count(), pt, ct, status});
        };
        try {
            auto result = call();
            auto [pt, ct] = usage(result);
            log("ok", pt, ct);
            return result;
        } catch (const RateLimited&) {
            log("rate_limited", 0, 0);
            throw;
        } catch (const std::exception& e) {
            log(std::string("error: ") + e.what(), 0, 0);
            throw;
        }
    }

    void backoff(std::size_t attempt) const {
        if (profile_.retry.backoff_ms <= 0) return;
        double ms = profile_.retry.backoff_ms * std::pow(2.0, static_cast<double>(attempt));
        ms = std::min(ms, static_cast<double>(profile_.retry.backoff_max_ms));
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
    }

    BackendProfile profile_;
    std::shared_ptr<Backend> backend_;
    std::shared_ptr<AuditLog> audit_;
    RateLimiter limiter_;
    std::atomic<std::uint64_t> next_id_{0};
    std::atomic<std::uint64_t> retries_{0};
};

}  // namespace fbk::gateway
