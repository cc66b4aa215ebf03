#pragma once

// Backend profile, read from a flat TOML file:
//
//   kind = "mock"              # "mock" or "openai" (chat-completions style HTTP)
//   model = "feedback-13b"
//   temperature = 0.7
//   max_tokens = 512
//   timeout_s = 60
//   retries = 3                # extra attempts after the first
//   backoff_ms = 500           # doubled per retry, capped by backoff_max_ms
//   backoff_max_ms = 30000
//   rate_limit_rps = 0         # 0 disables throttling
//   audit_log = "audit.jsonl"  # optional; relative paths resolve against the profile file
//   # mock only
//   mock_script = "mock.json"
//   # http only
//   base_url = "http://localhost:8000"
//   chat_path = "/v1/chat/completions"
//   embeddings_path = "/v1/embeddings"
//   embedding_model = "all-MiniLM-L6-v2"
//   api_key_env = "FBK_API_KEY"
//   top_logprobs = 20
//   true_tokens = ["yes", "true"]
//   false_tokens = ["no", "false"]

#include <filesystem>
#include <string>
#include <vector>

#include "toml.hpp"

#include "fbk/error.hpp"

namespace fbk::gateway {

struct RetryPolicy {
    int retries = 3;
    int backoff_ms = 500;
    int backoff_max_ms = 30000;
};

struct BackendProfile {
    std::string kind = "mock";
    std::string model;
    double temperature = 0.7;
    int max_tokens = 512;
    double timeout_s = 60.0;
    RetryPolicy retry;
    double rate_limit_rps = 0.0;
    std::filesystem::path audit_log;

    std::filesystem::path mock_script;

    std::string base_url = "http://localhost:8000";
    std::string chat_path = "/v1/chat/completions";
    std::string embeddings_path = "/v1/embeddings";
    std::string embedding_model = "all-MiniLM-L6-v2";
    std::string api_key_env = "FBK_API_KEY";
    int top_logprobs = 20;
    std::vector<std::string> true_tokens = {"yes", "true"};
    std::vector<std::string> false_tokens = {"no", "false"};

    void check() const {
        if (!(temperature >= 0.0)) throw PreconditionError("profile: temperature must be >= 0");
        if (retry.retries < 0) throw PreconditionError("profile: retries must be >= 0");
        if (retry.backoff_ms < 0 || retry.backoff_max_ms < 0) throw PreconditionError("profile: backoff must be >= 0");
        if (rate_limit_rps < 0.0) throw PreconditionError("profile: rate_limit_rps must be >= 0");
        if (max_tokens <= 0) throw PreconditionError("profile: max_tokens must be > 0");
        if (kind != "mock" && kind != "openai") throw PreconditionError("profile: unknown kind '" + kind + "'");
        if (kind == "mock" && mock_script.empty()) throw PreconditionError("profile: mock backend needs mock_script");
    }
};

namespace detail {

inline std::vector<std::string> string_array(const toml::table& t, std::string_view key, std::vector<std::string> dflt) {
    const auto* arr = t[key].as_array();
    if (!arr) return dflt;
    std::vector<std::string> out;
    for (const auto& v : *arr) {
        auto s = v.value<std::string>();
        if (!s) throw PreconditionError("profile: '" + std::string(key) + "' must be an array of strings");
        out.push_back(*s);
    }
    return out;
}

}  // namespace detail

inline BackendProfile profile_from_toml(const toml::table& t, const std::filesystem::path& base_dir = {}) {
    BackendProfile p;
    auto resolve = [&](const std::string& s) -> std::filesystem::path {
        if (s.empty()) return {};
        std::filesystem::path path(s);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    p.kind = t["kind"].value_or(p.kind);
    p.model = t["model"].value_or(p.model);
    p.temperature = t["temperature"].value_or(p.temperature);
    p.max_tokens = t["max_tokens"].value_or(p.max_tokens);
    p.timeout_s = t["timeout_s"].value_or(p.timeout_s);
    p.retry.retries = t["retries"].value_or(p.retry.retries);
    p.retry.backoff_ms = t["backoff_ms"].value_or(p.retry.backoff_ms);
    p.retry.backoff_max_ms = t["backoff_max_ms"].value_or(p.retry.backoff_max_ms);
    p.rate_limit_rps = t["rate_limit_rps"].value_or(p.rate_limit_rps);
    p.audit_log = resolve(t["audit_log"].value_or(std::string{}));
    p.mock_script = resolve(t["mock_script"].value_or(std::string{}));
    p.base_url = t["base_url"].value_or(p.base_url);
    p.chat_path = t["chat_path"].value_or(p.chat_path);
    p.embeddings_path = t["embeddings_path"].value_or(p.embeddings_path);
    p.embedding_model = t["embedding_model"].value_or(p.embedding_model);
    p.api_key_env = t["api_key_env"].value_or(p.api_key_env);
    p.top_logprobs = t["top_logprobs"].value_or(p.top_logprobs);
    p.true_tokens = detail::string_array(t, "true_tokens", p.true_tokens);
    p.false_tokens = detail::string_array(t, "false_tokens", p.false_tokens);
    p.check();
    return p;
}

inline BackendProfile load_profile(const std::filesystem::path& path) {
    toml::table t;
    try {
        t = toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        throw PreconditionError("profile " + path.string() + ": " + std::string(e.description()));
    }
    return profile_from_toml(t, path.parent_path());
}

}  // namespace fbk::gateway
