#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "e2e.hpp"
#include "fbk/core/catalog.hpp"
#include "fbk/pipeline/run.hpp"
#include "fbk/selfimprove/export.hpp"
#include "fbk/service/service.hpp"
#include "support.hpp"

using namespace fbk;
using namespace fbk::pipeline;
namespace fs = std::filesystem;

namespace {

nlohmann::json fixture_script() { return nlohmann::json::parse(util::read_file(testkit::fixture_dir() / "mock.json")); }

// Clean dataset, segments and template for the fixture in `dir`.
void prepare(const fs::path& dir) {
    IngestArgs in;
    in.in = testkit::fixture_dir() / "raw.jsonl";
    in.out = dir / "clean.jsonl";
    ASSERT_EQ(run_ingest(in).exit_code, kExitOk);
    auto gw = testkit::mock_gateway_json(fixture_script().dump());
    ASSERT_EQ(run_segment({dir / "clean.jsonl", dir / "segments.jsonl"}, *gw).exit_code, kExitOk);
}

}  // namespace

TEST(Stages, IngestWritesSplitsAndReport) {
    const auto dir = testkit::scratch_dir("ingest");
    IngestArgs a;
    a.in = testkit::fixture_dir() / "raw.jsonl";
    a.out = dir / "clean.jsonl";
    a.report = dir / "report.json";
    a.split = "annotate=2,prefs=2,test=2";
    const auto r = run_ingest(a);
    EXPECT_EQ(r.exit_code, kExitOk);
    EXPECT_EQ(r.counts["conversations"], 6);
    EXPECT_EQ(r.counts["dropped_empty_turns"], 1);
    const auto rep = nlohmann::json::parse(util::read_file(dir / "report.json"));
    // permutation of 6 with seed 17 is [3,4,2,1,0,5]
    EXPECT_EQ(rep["split"]["members"]["annotate"], nlohmann::json({"esc-004", "esc-005"}));
    EXPECT_EQ(rep["split"]["members"]["test"], nlohmann::json({"esc-001", "esc-006"}));
    EXPECT_EQ(rep["conversations"][3]["flags"], nlohmann::json({"meta-conversation"}));
    const auto test = load_dataset(dir / "clean.test.jsonl");
    ASSERT_EQ(test.size(), 2u);
    EXPECT_EQ(test[0].conversation.source_tag, "test");
    // esc-001 loses its survey reminder
    for (const auto& u : test[0].conversation.utterances) EXPECT_EQ(u.text.find("survey"), std::string::npos);

    a.drop_flagged = true;
    a.split = "a=5";
    EXPECT_EQ(run_ingest(a).counts["split_a"], 5);
    a.split = "a=6";
    EXPECT_THROW(run_ingest(a), SpecTooLarge);
}

TEST(Stages, MissingArtifactIsUsageError) {
    const auto dir = testkit::scratch_dir("missing");
    prepare(dir);
    auto gw = testkit::mock_gateway_json(fixture_script().dump());
    std::ostringstream log;
    const int code = run_logged("pairs", log, [&] {
        return run_pairs({dir / "clean.jsonl", dir / "nope.jsonl", dir / "pairs.jsonl", 4, 1}, *gw, *gw);
    });
    EXPECT_EQ(code, kExitUsage);
    const auto entry = nlohmann::json::parse(log.str());
    EXPECT_NE(entry["error"].get<std::string>().find("missing segments artifact: " + (dir / "nope.jsonl").string()),
              std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "pairs.jsonl"));
}

TEST(Stages, ExitCodesByErrorKind) {
    auto code = [](auto&& f) {
        try {
            f();
        } catch (...) {
            return exit_code_for(std::current_exception());
        }
        return -1;
    };
    EXPECT_EQ(code([] { throw MissingArtifact("x", "y"); }), kExitUsage);
    EXPECT_EQ(code([] { throw DataError("x"); }), kExitData);
    EXPECT_EQ(code([] { throw BackendUnavailable("x"); }), kExitBackend);
}

TEST(Stages, AnnotateChunkFailureWritesPartial) {
    const auto dir = testkit::scratch_dir("annotate");
    prepare(dir);
    auto script = fixture_script();
    script["outages"] = {{{"conversation", "esc-002"}, {"kind", "annotate"}}};
    auto gw = testkit::mock_gateway_json(script.dump());
    AnnotateArgs a;
    a.in = dir / "clean.jsonl";
    a.segments = dir / "segments.jsonl";
    a.template_path = testkit::fixture_dir() / "prompt.tmpl";
    a.out = dir / "annotated.jsonl";
    a.workers = 3;
    const auto r = run_annotate(a, *gw);
    EXPECT_EQ(r.exit_code, kExitPartial);
    EXPECT_FALSE(fs::exists(a.out));
    const auto partial = load_dataset(dir / "annotated.jsonl.partial");
    ASSERT_EQ(partial.size(), 6u);
    EXPECT_TRUE(partial[1].feedback.empty());
    EXPECT_FALSE(partial[0].feedback.empty());
    ASSERT_FALSE(r.messages.empty());
    EXPECT_EQ(r.messages[0].rfind("esc-002: chunk 1 [", 0), 0u);
}

TEST(Stages, EvalScoreOutageThenResume) {
    const auto dir = testkit::scratch_dir("evalscore");
    prepare(dir);
    auto script = fixture_script();
    script["outages"] = {{{"conversation", "esc-003"}, {"utterance", 3}, {"kind", "generate"}}};
    auto down = testkit::mock_gateway_json(script.dump());
    EvalScoreArgs a;
    a.in = dir / "clean.jsonl";
    a.segments = dir / "segments.jsonl";
    a.out = dir / "scores.jsonl";
    a.k = 3;
    a.workers = 2;
    auto r = run_eval_score(a, *down, *down);
    EXPECT_EQ(r.exit_code, kExitPartial);
    EXPECT_EQ(r.counts["failed_utterances"], 1);
    EXPECT_TRUE(fs::exists(dir / "scores.jsonl.partial"));
    EXPECT_FALSE(fs::exists(a.out));

    auto up = testkit::mock_gateway_json(fixture_script().dump());
    a.resume = true;
    r = run_eval_score(a, *up, *up);
    EXPECT_EQ(r.exit_code, kExitOk);
    EXPECT_FALSE(fs::exists(dir / "scores.jsonl.partial"));
    // only the failed utterance is requested again: 3 generations + 3 labels
    EXPECT_EQ(up->requests_sent(), 6u);

    // matches a run that never failed
    auto fresh = testkit::mock_gateway_json(fixture_script().dump());
    EvalScoreArgs b = a;
    b.resume = false;
    b.out = dir / "fresh.jsonl";
    ASSERT_EQ(run_eval_score(b, *fresh, *fresh).exit_code, kExitOk);
    EXPECT_EQ(util::read_file(a.out), util::read_file(b.out));
}

TEST(Stages, SftAndPairsArtifactsValidate) {
    const auto dir = testkit::scratch_dir("sft");
    prepare(dir);
    auto gw = testkit::mock_gateway_json(fixture_script().dump());
    const auto pr = run_pairs({dir / "clean.jsonl", dir / "segments.jsonl", dir / "pairs.jsonl", 4, 2}, *gw, *gw);
    EXPECT_GT(pr.counts["pairs"].get<int>(), 0);
    EXPECT_EQ(selfimprove::parse_dpo(util::read_file(dir / "pairs.jsonl")).size(), pr.counts["pairs"].get<std::size_t>());
    GenerateArgs g;
    g.in = dir / "clean.jsonl";
    g.segments = dir / "segments.jsonl";
    g.out = dir / "gen.jsonl";
    g.n = 3;
    ASSERT_EQ(run_generate(g, *gw, *gw).exit_code, kExitOk);
    for (auto mode : {selfimprove::SftMode::Generations, selfimprove::SftMode::BestScored}) {
        SftArgs s{dir / "gen.jsonl", dir / "segments.jsonl", dir / "sft.jsonl", mode};
        ASSERT_EQ(run_sft(s).exit_code, kExitOk);
        EXPECT_FALSE(selfimprove::parse_sft(util::read_file(dir / "sft.jsonl")).empty());
    }
    SftArgs s{dir / "clean.jsonl", dir / "segments.jsonl", dir / "sft.jsonl", selfimprove::SftMode::Generations};
    EXPECT_THROW(run_sft(s), EmptyGenerations);
}

TEST(Config, FixtureConfigResolvesPaths) {
    const auto cfg = load_config(testkit::fixture_dir() / "pipeline.toml");
    EXPECT_EQ(cfg.raw, testkit::fixture_dir() / "raw.jsonl");
    EXPECT_EQ(cfg.work_dir, testkit::fixture_dir() / "out");
    EXPECT_EQ(cfg.pairs_n, 4u);
    ASSERT_EQ(cfg.eval_systems.size(), 2u);
    EXPECT_EQ(cfg.eval_systems[0].first, "sft");
    EXPECT_EQ(cfg.eval_systems[1].second, testkit::fixture_dir() / "backend_improved.toml");
    EXPECT_EQ(cfg.backend_for("score"), testkit::fixture_dir() / "backend.toml");
}

TEST(Config, Rejects) {
    const auto dir = testkit::scratch_dir("config");
    util::write_file_atomic(dir / "a.toml", "stages = [\"ingest\", \"train\"]\n");
    EXPECT_THROW(load_config(dir / "a.toml"), PreconditionError);
    util::write_file_atomic(dir / "b.toml", "[sft]\nmode = \"all\"\n");
    EXPECT_THROW(load_config(dir / "b.toml"), PreconditionError);
    util::write_file_atomic(dir / "c.toml", "workers = 0\n");
    EXPECT_THROW(load_config(dir / "c.toml"), PreconditionError);
}

TEST(EndToEnd, FixtureRunsAreByteIdentical) {
    const auto dir = testkit::scratch_dir("e2e");
    ASSERT_EQ(testkit::run_fixture_pipeline(dir / "one"), 0) << util::read_file(dir / "one.log");
    ASSERT_EQ(testkit::run_fixture_pipeline(dir / "two"), 0) << util::read_file(dir / "two.log");
    const auto a = testkit::snapshot(dir / "one");
    std::set<std::string> names;
    for (const auto& [k, _] : a) names.insert(k);
    EXPECT_EQ(names, testkit::expected_artifacts());
    EXPECT_EQ(testkit::snapshot(dir / "one", {"run_log.jsonl"}), testkit::snapshot(dir / "two", {"run_log.jsonl"}));
    const auto log = testkit::lines_of(a.at("run_log.jsonl"));
    ASSERT_EQ(log.size(), 7u);
    for (const auto& line : log) EXPECT_EQ(nlohmann::json::parse(line)["exit_code"], 0);
}

TEST(Cli, SubcommandsAndExitCodes) {
    const auto dir = testkit::scratch_dir("cli");
    const auto fx = testkit::fixture_dir();
    auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
    EXPECT_EQ(testkit::run_fbk("catalog", dir / "catalog.json"), 0);
    EXPECT_EQ(util::read_file(dir / "catalog.json"), util::read_file(testkit::source_dir() / "data" / "skills_catalog.json"));
    EXPECT_EQ(testkit::run_fbk("", dir / "none.log"), 1);
    EXPECT_EQ(testkit::run_fbk("bogus", dir / "bogus.log"), 1);
    EXPECT_EQ(testkit::run_fbk("ingest --in " + q(fx / "raw.jsonl") + " --out " + q(dir / "clean.jsonl"), dir / "i.log"), 0);
    EXPECT_EQ(testkit::run_fbk("segment --in " + q(dir / "clean.jsonl") + " --out " + q(dir / "seg.jsonl") +
                                   " --profile " + q(fx / "backend.toml"),
                               dir / "s.log"),
              0);
    // pairs without the segments artifact
    EXPECT_EQ(testkit::run_fbk("selfimprove pairs --in " + q(dir / "clean.jsonl") + " --segments " +
                                   q(dir / "missing.jsonl") + " --profile " + q(fx / "backend.toml") + " --out " +
                                   q(dir / "p.jsonl"),
                               dir / "p.log"),
              1);
    EXPECT_NE(util::read_file(dir / "p.log").find("missing segments artifact"), std::string::npos);
    EXPECT_EQ(testkit::run_fbk("selfimprove pairs --n 4 --in " + q(dir / "clean.jsonl") + " --segments " +
                                   q(dir / "seg.jsonl") + " --profile " + q(fx / "backend.toml") + " --out " +
                                   q(dir / "p.jsonl"),
                               dir / "p2.log"),
              0);
    EXPECT_EQ(testkit::run_fbk("check --kind dpo --in " + q(dir / "p.jsonl"), dir / "c.log"), 0);
    EXPECT_EQ(testkit::run_fbk("check --kind dataset --in " + q(dir / "p.jsonl"), dir / "c2.log"), 2);
    EXPECT_EQ(testkit::run_fbk("stats --in " + q(dir / "clean.jsonl"), dir / "stats.json"), 0);
    EXPECT_EQ(nlohmann::json::parse(util::read_file(dir / "stats.json"))["n_sessions"], 6);
}

namespace {

std::string feedback_request(std::size_t target, bool with_boundaries = true) {
    nlohmann::json conv = {{"id", "svc"},
                           {"utterances",
                            {{{"speaker", "seeker"}, {"text", "I failed my exam."}},
                             {{"speaker", "helper"}, {"text", "Just study harder."}}}}};
    nlohmann::json j = {{"conversation", conv}, {"target_index", target}};
    if (with_boundaries) j["boundaries"] = {0};
    return j.dump();
}

}  // namespace

TEST(Service, FeedbackResponses) {
    service::FeedbackService svc(testkit::mock_gateway_json(fixture_script().dump()), "tok");
    auto r = svc.feedback(feedback_request(1));
    ASSERT_EQ(r.status, 200) << r.body;
    auto j = nlohmann::json::parse(r.body);
    EXPECT_EQ(j["target_index"], 1);
    EXPECT_EQ(j["text"], "Appropriate: yes\nPositive areas: Questions\n");
    EXPECT_EQ(svc.feedback(feedback_request(1, false)).status, 200);
    EXPECT_EQ(svc.feedback(feedback_request(0)).status, 400);
    EXPECT_EQ(svc.feedback(feedback_request(7)).status, 400);
    EXPECT_EQ(svc.feedback("{not json").status, 400);
    EXPECT_EQ(svc.feedback(R"({"conversation":{},"target_index":1,"extra":1})").status, 400);
    EXPECT_TRUE(svc.authorized("Bearer tok"));
    EXPECT_FALSE(svc.authorized("Bearer nope"));
    EXPECT_FALSE(svc.authorized(""));

    auto script = fixture_script();
    script["outages"] = {{{"kind", "generate"}}};
    service::FeedbackService down(testkit::mock_gateway_json(script.dump()));
    EXPECT_EQ(down.feedback(feedback_request(1)).status, 502);
}

namespace {

class ThrottledBackend final : public gateway::Backend {
public:
    gateway::Completion generate(const gateway::GenerationRequest&) override { throw RateLimited("slow down"); }
    gateway::LabelMasses label_masses(const gateway::LabelRequest&) override { throw RateLimited("slow down"); }
    std::vector<std::vector<double>> embed(const std::vector<std::string>&) override { throw RateLimited("slow down"); }
    std::string name() const override { return "throttled"; }
};

}  // namespace

TEST(Service, RateLimitMapsTo429) {
    auto gw = std::make_shared<gateway::Gateway>(testkit::quiet_profile(), std::make_shared<ThrottledBackend>());
    service::FeedbackService svc(gw);
    EXPECT_EQ(svc.feedback(feedback_request(1)).status, 429);
}

TEST(Service, LiveServer) {
    auto svc = std::make_shared<service::FeedbackService>(testkit::mock_gateway_json(fixture_script().dump()), "tok");
    httplib::Server srv;
    std::ostringstream log;
    service::install_routes(srv, svc, &log);
    const int port = srv.bind_to_any_port("127.0.0.1");
    std::thread th([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    httplib::Client cli("127.0.0.1", port);
    auto h = cli.Get("/health", {{"Authorization", "Bearer tok"}});
    ASSERT_TRUE(h);
    EXPECT_EQ(h->status, 200);
    EXPECT_EQ(nlohmann::json::parse(h->body)["backend"], "mock");
    auto unauth = cli.Post("/v1/feedback", feedback_request(1), "application/json");
    ASSERT_TRUE(unauth);
    EXPECT_EQ(unauth->status, 401);
    auto ok = cli.Post("/v1/feedback", {{"Authorization", "Bearer tok"}}, feedback_request(1), "application/json");
    ASSERT_TRUE(ok);
    EXPECT_EQ(ok->status, 200);
    srv.stop();
    th.join();
    EXPECT_EQ(testkit::lines_of(log.str()).size(), 3u);
}
