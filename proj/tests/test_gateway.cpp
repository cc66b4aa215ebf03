#include <cmath>
#include <thread>

#include <gtest/gtest.h>

#include "fbk/gateway/factory.hpp"
#include "support.hpp"

using namespace fbk;
using namespace fbk::gateway;

namespace {

FeedbackQuery query(std::string text, std::string conv = "c", std::size_t idx = 1) {
    return {std::move(conv), idx, "Seeker: hi\n", std::move(text)};
}

}  // namespace

TEST(Masses, Normalize) {
    EXPECT_DOUBLE_EQ(normalize_masses({0.3, 0.1}).p_true, 0.75);
    EXPECT_DOUBLE_EQ(normalize_masses({0.0, 0.2}).p_true, 0.0);
    EXPECT_DOUBLE_EQ(normalize_masses({5.0, 0.0}).p_true, 1.0);
    EXPECT_THROW(normalize_masses({0.0, 0.0}), DegenerateMass);
    EXPECT_THROW(normalize_masses({-0.1, 0.5}), BackendError);
    EXPECT_THROW(normalize_masses({NAN, 0.5}), BackendError);
}

TEST(Mock, ProbabilityLookupOrder) {
    auto gw = testkit::mock_gateway_json(R"({"default_p":0.4,"text_scores":{"exact one?":0.05},
        "rules":[{"regex":"^Just","p":0.1},{"contains":"?","p":0.7},{"equals":"hello","p":0.3}]})");
    EXPECT_DOUBLE_EQ(gw->appropriateness_prob(query("exact one?")).p_true, 0.05);
    EXPECT_DOUBLE_EQ(gw->appropriateness_prob(query("Just relax?")).p_true, 0.1);
    EXPECT_DOUBLE_EQ(gw->appropriateness_prob(query("why?")).p_true, 0.7);
    EXPECT_DOUBLE_EQ(gw->appropriateness_prob(query("hello")).p_true, 0.3);
    EXPECT_DOUBLE_EQ(gw->appropriateness_prob(query("nothing")).p_true, 0.4);
}

TEST(Mock, ScriptRejects) {
    using nlohmann::json;
    EXPECT_THROW(MockScript::from_json(json::parse(R"({"default_p":1.5})")), DataError);
    EXPECT_THROW(MockScript::from_json(json::parse(R"({"rules":[{"p":0.2}]})")), DataError);
    EXPECT_THROW(MockScript::from_json(json::parse(R"({"default_generations":[]})")), DataError);
    EXPECT_THROW(MockScript::from_json(json::parse(R"({"default_annotation":{"appropriate":false}})")),
                 InvalidFeedback);
}

TEST(Mock, SamplesCycleAndAreValid) {
    auto gw = testkit::mock_gateway_json(R"({"default_generations":[
        {"appropriate":true},
        {"appropriate":false,"goal_alignment":"g","areas_for_improvement":["Questions"],"alternative":"a"}]})");
    const auto fbs = gw->sample_feedback(query("x"), 5);
    ASSERT_EQ(fbs.size(), 5u);
    EXPECT_TRUE(fbs[0].appropriate);
    EXPECT_FALSE(fbs[1].appropriate);
    EXPECT_TRUE(fbs[4].appropriate);
    EXPECT_THROW(gw->sample_feedback(query("x"), 0), PreconditionError);
}

TEST(Gateway, RetriesUnparseableThenSucceeds) {
    auto gw = testkit::mock_gateway_json(R"({"default_generations":[{"attempts":["garbage","Appropriate: no\n",
        {"appropriate":true}]}]})");
    const auto fbs = gw->sample_feedback(query("x"), 1);
    EXPECT_TRUE(fbs[0].appropriate);
    EXPECT_EQ(gw->retries_used(), 2u);
    EXPECT_EQ(gw->requests_sent(), 3u);
}

TEST(Gateway, RetryBudgetExhausted) {
    auto gw = testkit::mock_gateway_json(R"({"default_generations":["nonsense"]})");
    try {
        gw->sample_feedback(query("x"), 1);
        FAIL();
    } catch (const UnparseableGeneration& e) {
        EXPECT_EQ(e.raw(), "nonsense");
    }
    EXPECT_EQ(gw->requests_sent(), 3u);
}

TEST(Gateway, OutagesMatchByFields) {
    auto gw = testkit::mock_gateway_json(R"({"outages":[{"conversation":"down","kind":"label"},
        {"kind":"embed"}]})");
    EXPECT_THROW(gw->appropriateness_prob(query("x", "down")), BackendUnavailable);
    EXPECT_NO_THROW(gw->appropriateness_prob(query("x", "up")));
    EXPECT_NO_THROW(gw->sample_feedback(query("x", "down"), 1));
    EXPECT_THROW(gw->embed({"a"}), BackendUnavailable);
}

TEST(Gateway, AuditLogOneLinePerAttempt) {
    const auto dir = testkit::scratch_dir("audit");
    auto audit = std::make_shared<AuditLog>(dir / "audit.jsonl");
    auto script = MockScript::from_json(nlohmann::json::parse(R"({"outages":[{"kind":"label"}]})"));
    Gateway gw(testkit::quiet_profile(), std::make_shared<MockBackend>(script), audit);
    EXPECT_THROW(gw.appropriateness_prob(query("x")), BackendUnavailable);
    gw.sample_feedback(query("x"), 1);
    audit.reset();
    const auto lines = testkit::lines_of(util::read_file(dir / "audit.jsonl"));
    ASSERT_EQ(lines.size(), 4u);
    const auto last = nlohmann::json::parse(lines[3]);
    EXPECT_EQ(last["kind"], "generate");
    EXPECT_EQ(last["status"], "ok");
    EXPECT_EQ(last["fingerprint"], query("x").fingerprint());
    EXPECT_EQ(nlohmann::json::parse(lines[2])["attempt"], 2);
}

TEST(Gateway, MockEmbeddingsDeterministicAndNonZero) {
    auto gw = testkit::mock_gateway_json("{}");
    const auto a = gw->embed({"I feel sad", "the weather", ""});
    const auto b = gw->embed({"I feel sad", "the weather", ""});
    ASSERT_EQ(a.size(), 3u);
    EXPECT_EQ(a.dim(), 64u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.row(i), b.row(i));
    EXPECT_DOUBLE_EQ(a.row(2)[0], 0.1);
}

TEST(Fingerprint, DependsOnIdIndexContext) {
    const auto base = query("x");
    auto other = base;
    other.utterance_text = "different";
    EXPECT_EQ(base.fingerprint(), other.fingerprint());
    other.context_text = "Seeker: bye\n";
    EXPECT_NE(base.fingerprint(), other.fingerprint());
    EXPECT_EQ(base.fingerprint().size(), 16u);
}

TEST(Profile, TomlLoadingAndValidation) {
    const auto dir = testkit::scratch_dir("profile");
    util::write_file_atomic(dir / "p.toml", "kind = \"mock\"\nmock_script = \"m.json\"\nretries = 5\n"
                                            "rate_limit_rps = 2.5\ntrue_tokens = [\"Yes\"]\n");
    const auto p = load_profile(dir / "p.toml");
    EXPECT_EQ(p.mock_script, dir / "m.json");
    EXPECT_EQ(p.retry.retries, 5);
    EXPECT_EQ(p.retry.backoff_ms, 500);
    EXPECT_DOUBLE_EQ(p.rate_limit_rps, 2.5);
    EXPECT_EQ(p.true_tokens, std::vector<std::string>{"Yes"});
    util::write_file_atomic(dir / "bad.toml", "kind = \"grpc\"\n");
    EXPECT_THROW(load_profile(dir / "bad.toml"), PreconditionError);
    util::write_file_atomic(dir / "bad2.toml", "kind = \n");
    EXPECT_THROW(load_profile(dir / "bad2.toml"), PreconditionError);
    util::write_file_atomic(dir / "bad3.toml", "kind = \"mock\"\n");
    EXPECT_THROW(load_profile(dir / "bad3.toml"), PreconditionError);
    EXPECT_NO_THROW(load_gateway(testkit::fixture_dir() / "backend.toml"));
}

TEST(RateLimit, SpacesRequests) {
    RateLimiter lim(50.0);
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 6; ++i) lim.acquire();
    EXPECT_GE(std::chrono::steady_clock::now() - t0, std::chrono::milliseconds(95));
}

// Local chat-completions fake.
class FakeServer : public ::testing::Test {
protected:
    void SetUp() override {
        srv_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++calls_;
            last_auth_ = req.get_header_value("Authorization");
            const auto body = nlohmann::json::parse(req.body);
            if (mode_ == "429") {
                res.status = 429;
                return;
            }
            if (mode_ == "500") {
                res.status = 503;
                return;
            }
            if (body.value("logprobs", false)) {
                res.set_content(R"({"choices":[{"logprobs":{"content":[{"top_logprobs":[
                    {"token":" Yes","logprob":-0.2231435513142097},{"token":"no","logprob":-2.3025850929940455},
                    {"token":"maybe","logprob":-3.0}]}]}}]})",
                                "application/json");
                return;
            }
            res.set_content(R"({"choices":[{"message":{"content":"Appropriate: yes\n"}}],
                "usage":{"prompt_tokens":12,"completion_tokens":3}})",
                            "application/json");
        });
        srv_.Post("/v1/embeddings", [](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            nlohmann::json data = nlohmann::json::array();
            const std::size_t n = body["input"].size();
            for (std::size_t i = n; i-- > 0;) {
                data.push_back({{"index", i}, {"embedding", {1.0, static_cast<double>(i)}}});
            }
            res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
        });
        port_ = srv_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { srv_.listen_after_bind(); });
        srv_.wait_until_ready();
        profile_.kind = "openai";
        profile_.base_url = "http://127.0.0.1:" + std::to_string(port_);
        profile_.retry.retries = 1;
        profile_.retry.backoff_ms = 0;
        profile_.timeout_s = 5;
        profile_.api_key_env = "FBK_TEST_KEY";
        ::setenv("FBK_TEST_KEY", "sekret", 1);
    }
    void TearDown() override {
        srv_.stop();
        thread_.join();
    }

    Gateway gateway() { return Gateway(profile_, std::make_shared<HttpBackend>(profile_)); }

    httplib::Server srv_;
    std::thread thread_;
    int port_ = 0;
    std::string mode_ = "ok";
    std::atomic<int> calls_{0};
    std::string last_auth_;
    BackendProfile profile_;
};

TEST_F(FakeServer, GenerateAndAuth) {
    auto gw = gateway();
    const auto fbs = gw.sample_feedback(query("x"), 2);
    EXPECT_TRUE(fbs[1].appropriate);
    EXPECT_EQ(last_auth_, "Bearer sekret");
    EXPECT_EQ(calls_, 2);
}

TEST_F(FakeServer, LogprobMasses) {
    auto gw = gateway();
    const auto p = gw.appropriateness_prob(query("x"));
    EXPECT_NEAR(p.raw.mass_true, 0.8, 1e-12);
    EXPECT_NEAR(p.raw.mass_false, 0.1, 1e-12);
    EXPECT_NEAR(p.p_true, 0.8 / 0.9, 1e-12);
}

TEST_F(FakeServer, EmbeddingsOrderedByIndex) {
    auto gw = gateway();
    const auto e = gw.embed({"a", "b", "c"});
    EXPECT_EQ(e.row(2), (std::vector<double>{1.0, 2.0}));
}

TEST_F(FakeServer, StatusMapping) {
    auto gw = gateway();
    mode_ = "429";
    EXPECT_THROW(gw.appropriateness_prob(query("x")), RateLimited);
    EXPECT_EQ(calls_, 2);
    mode_ = "500";
    EXPECT_THROW(gw.sample_feedback(query("x"), 1), BackendUnavailable);
}

TEST(Http, ConnectionRefused) {
    BackendProfile p;
    p.kind = "openai";
    p.base_url = "http://127.0.0.1:1";
    p.timeout_s = 1;
    HttpBackend b(p);
    EXPECT_THROW(b.embed({"x"}), BackendUnavailable);
}
