#pragma once

// Chat-completions style HTTP backend.
//
//   generate:     POST {chat_path} {"model", "messages": [{"role": "user", "content": prompt}],
//                                   "temperature", "max_tokens", "n": 1}
//                 -> choices[0].message.content, usage.{prompt,completion}_tokens
//   label_masses: POST {chat_path} with "max_tokens": 1, "temperature": 0, "logprobs": true,
//                 "top_logprobs": K; the prompt asks for a yes/no appropriateness label.
//                 Masses sum exp(logprob) over choices[0].logprobs.content[0].top_logprobs
//                 entries whose trimmed, lower-cased token is in true_tokens / false_tokens.
//   embed:        POST {embeddings_path} {"model": embedding_model, "input": [texts]}
//                 -> data[i].embedding, ordered by data[i].index
//
// The bearer token is read from the environment variable named by api_key_env.

#ifdef FBK_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include <cmath>
#include <cstdlib>

#include "fbk/core/dataset_io.hpp"
#include "fbk/gateway/backend.hpp"
#include "fbk/gateway/profile.hpp"

namespace fbk::gateway {

class HttpBackend final : public Backend {
public:
    explicit HttpBackend(BackendProfile profile) : profile_(std::move(profile)) {
        if (const char* key = std::getenv(profile_.api_key_env.c_str())) api_key_ = key;
    }

    Completion generate(const GenerationRequest& req) override {
        json body = {{"model", profile_.model},
                     {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
                     {"temperature", req.temperature},
                     {"max_tokens", req.max_tokens},
                     {"n", 1}};
        const json res = post(profile_.chat_path, body);
        Completion c;
        try {
            c.text = res.at("choices").at(0).at("message").at("content").get<std::string>();
            if (auto u = res.find("usage"); u != res.end() && u->is_object()) {
                c.prompt_tokens = u->value("prompt_tokens", std::size_t{0});
                c.completion_tokens = u->value("completion_tokens", std::size_t{0});
            }
        } catch (const json::exception& e) {
            throw UnparseableGeneration(std::string("malformed completion response: ") + e.what(), res.dump());
        }
        return c;
    }

    LabelMasses label_masses(const LabelRequest& req) override {
        const std::string prompt =
            req.prompt + "\n\nIs the response under review appropriate? Answer with a single word: yes or no.";
        json body = {{"model", profile_.model},
                     {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                     {"temperature", 0},
                     {"max_tokens", 1},
                     {"logprobs", true},
                     {"top_logprobs", profile_.top_logprobs}};
        const json res = post(profile_.chat_path, body);
        LabelMasses m;
        try {
            const auto& top = res.at("choices").at(0).at("logprobs").at("content").at(0).at("top_logprobs");
            for (const auto& e : top) {
                const auto tok = util::to_lower(util::trim(e.at("token").get<std::string>()));
                const double p = std::exp(e.at("logprob").get<double>());
                if (std::find(profile_.true_tokens.begin(), profile_.true_tokens.end(), tok) != profile_.true_tokens.end()) {
                    m.mass_true += p;
                } else if (std::find(profile_.false_tokens.begin(), profile_.false_tokens.end(), tok) !=
                           profile_.false_tokens.end()) {
                    m.mass_false += p;
                }
            }
        } catch (const json::exception& e) {
            throw BackendError(std::string("malformed logprob response: ") + e.what());
        }
        return m;
    }

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
        json body = {{"model", profile_.embedding_model}, {"input", texts}};
        const json res = post(profile_.embeddings_path, body);
        std::vector<std::vector<double>> out(texts.size());
        try {
            const auto& data = res.at("data");
            if (data.size() != texts.size()) throw DimensionMismatch("embedding count does not match input count");
            for (std::size_t i = 0; i < data.size(); ++i) {
                const std::size_t idx = data[i].value("index", i);
                if (idx >= out.size()) throw DimensionMismatch("embedding index out of range");
                out[idx] = data[i].at("embedding").get<std::vector<double>>();
            }
        } catch (const json::exception& e) {
            throw BackendError(std::string("malformed embedding response: ") + e.what());
        }
        return out;
    }

    std::string name() const override { return "http:" + profile_.base_url; }

private:
    json post(const std::string& path, const json& body) const {
        httplib::Client cli(profile_.base_url);
        const auto secs = static_cast<time_t>(profile_.timeout_s);
        const auto usecs = static_cast<time_t>((profile_.timeout_s - static_cast<double>(secs)) * 1e6);
        cli.set_connection_timeout(secs, usecs);
        cli.set_read_timeout(secs, usecs);
        cli.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        auto res = cli.Post(path, headers, body.dump(), "application/json");
        if (!res) throw BackendUnavailable("request to " + profile_.base_url + path + " failed: " + httplib::to_string(res.error()));
        if (res->status == 429) throw RateLimited("backend returned 429");
        if (res->status >= 500) throw BackendUnavailable("backend returned " + std::to_string(res->status));
        if (res->status != 200) throw BackendError("backend returned " + std::to_string(res->status) + ": " + res->body);
        try {
            return json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw BackendError(std::string("backend response is not JSON: ") + e.what());
        }
    }

    BackendProfile profile_;
    std::string api_key_;
};

}  // namespace fbk::gateway
