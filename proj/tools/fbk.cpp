// fbk: command-line entry point for the feedback toolkit.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"

#include "fbk/core/catalog.hpp"
#include "fbk/core/stats.hpp"
#include "fbk/pipeline/run.hpp"
#include "fbk/service/service.hpp"

namespace {

using namespace fbk;
using namespace fbk::pipeline;

struct Common {
    std::size_t workers = 1;
};

gateway::Gateway& gateway_for(GatewayCache& cache, const fs::path& profile) { return cache.get(profile); }

template <class Fn>
int logged(const std::string& stage, Fn&& fn) {
    return run_logged(stage, std::clog, std::forward<Fn>(fn));
}

int check_file(const std::string& kind, const fs::path& in) {
    return logged("check", [&] {
        require_artifact(in, kind);
        const auto content = util::read_file(in);
        StageResult r;
        r.stage = "check";
        std::size_t n = 0;
        if (kind == "dataset") {
            n = parse_dataset(content, in.string()).size();
        } else if (kind == "segments") {
            n = seg::parse_segments(content, in.string()).size();
        } else if (kind == "sft") {
            n = selfimprove::parse_sft(content, in.string()).size();
        } else if (kind == "dpo") {
            n = selfimprove::parse_dpo(content, in.string()).size();
        } else if (kind == "scores") {
            n = eval::parse_scores(content, in.string()).size();
        } else {
            throw PreconditionError("unknown file kind '" + kind + "'");
        }
        r.counts["kind"] = kind;
        r.counts["records"] = n;
        return r;
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-level counseling feedback toolkit"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--workers", common.workers, "Concurrent backend workers")->check(CLI::PositiveNumber);

    int code = kExitOk;
    GatewayCache gateways;

    // ingest
    IngestArgs ing;
    auto* c_ingest = app.add_subcommand("ingest", "Scrub, flag and split a raw corpus");
    c_ingest->add_option("--in", ing.in, "Raw corpus (jsonl or JSON array)")->required();
    c_ingest->add_option("--out", ing.out, "Clean dataset")->required();
    c_ingest->add_option("--report", ing.report, "Scrub/flag report (JSON)");
    c_ingest->add_option("--keywords", ing.keywords, "Keyword file, one per line");
    c_ingest->add_option("--split", ing.split, "Split spec, e.g. annotate=400,prefs=150,test=67");
    c_ingest->add_option("--seed", ing.seed, "Split seed");
    c_ingest->add_flag("--drop-flagged", ing.drop_flagged, "Leave flagged conversations out of the splits");
    c_ingest->callback([&] { code = logged("ingest", [&] { return run_ingest(ing); }); });

    // segment
    SegmentArgs sg;
    fs::path sg_profile;
    auto* c_segment = app.add_subcommand("segment", "C99 segmentation over utterance embeddings");
    c_segment->add_option("--in", sg.in, "Dataset")->required();
    c_segment->add_option("--out", sg.out, "Segments file")->required();
    c_segment->add_option("--profile", sg_profile, "Embedding backend profile")->required();
    c_segment->add_option("--mask", sg.params.mask, "Rank mask size (odd, >= 3)");
    c_segment->add_option("--min-seg", sg.params.min_seg, "Minimum segment length");
    c_segment->add_option("--c", sg.params.stop.c, "Stop rule multiplier on the gradient deviation");
    c_segment->callback([&] {
        sg.workers = common.workers;
        code = logged("segment", [&] { return run_segment(sg, gateway_for(gateways, sg_profile)); });
    });

    // annotate
    AnnotateArgs an;
    fs::path an_profile;
    auto* c_annotate = app.add_subcommand("annotate", "Chunked model pre-annotation");
    c_annotate->add_option("--in", an.in, "Dataset")->required();
    c_annotate->add_option("--segments", an.segments, "Segments file")->required();
    c_annotate->add_option("--template", an.template_path, "Prompt template")->required();
    c_annotate->add_option("--examples", an.examples, "In-context examples file");
    c_annotate->add_option("--profile", an_profile, "Backend profile")->required();
    c_annotate->add_option("--out", an.out, "Annotated dataset")->required();
    c_annotate->add_option("--partial-out", an.partial_out, "Where to write partial results on chunk failures");
    c_annotate->callback([&] {
        an.workers = common.workers;
        code = logged("annotate", [&] { return run_annotate(an, gateway_for(gateways, an_profile)); });
    });

    // selfimprove
    auto* c_si = app.add_subcommand("selfimprove", "Self-scoring, preference pairs and training exports");
    c_si->require_subcommand(1);

    PairsArgs pa;
    fs::path pa_profile, pa_scorer;
    auto* c_pairs = c_si->add_subcommand("pairs", "Build DPO preference pairs");
    c_pairs->add_option("--in", pa.in, "Dataset")->required();
    c_pairs->add_option("--segments", pa.segments, "Segments file")->required();
    c_pairs->add_option("--n", pa.n, "Samples per utterance");
    c_pairs->add_option("--profile", pa_profile, "Generator backend profile")->required();
    c_pairs->add_option("--scorer-profile", pa_scorer, "Scorer backend profile (default: --profile)");
    c_pairs->add_option("--out", pa.out, "DPO file")->required();
    c_pairs->callback([&] {
        pa.workers = common.workers;
        code = logged("pairs", [&] {
            return run_pairs(pa, gateway_for(gateways, pa_profile),
                             gateway_for(gateways, pa_scorer.empty() ? pa_profile : pa_scorer));
        });
    });

    GenerateArgs ge;
    fs::path ge_profile, ge_scorer;
    bool ge_no_score = false;
    auto* c_gen = c_si->add_subcommand("generate", "Attach sampled (and scored) generations to a dataset");
    c_gen->add_option("--in", ge.in, "Dataset")->required();
    c_gen->add_option("--segments", ge.segments, "Segments file")->required();
    c_gen->add_option("--n", ge.n, "Samples per utterance");
    c_gen->add_option("--profile", ge_profile, "Generator backend profile")->required();
    c_gen->add_option("--scorer-profile", ge_scorer, "Scorer backend profile (default: --profile)");
    c_gen->add_flag("--no-score", ge_no_score, "Do not self-score the generations");
    c_gen->add_option("--out", ge.out, "Dataset with generations")->required();
    c_gen->callback([&] {
        ge.workers = common.workers;
        ge.score = !ge_no_score;
        code = logged("generate", [&] {
            return run_generate(ge, gateway_for(gateways, ge_profile),
                                gateway_for(gateways, ge_scorer.empty() ? ge_profile : ge_scorer));
        });
    });

    SftArgs sf;
    std::string sf_mode = "expert";
    auto* c_sft = c_si->add_subcommand("sft", "Export SFT records");
    c_sft->add_option("--in", sf.in, "Annotated dataset (with generations for gens/best)")->required();
    c_sft->add_option("--segments", sf.segments, "Segments file")->required();
    c_sft->add_option("--mode", sf_mode, "expert | gens | best")->check(CLI::IsMember({"expert", "gens", "best"}));
    c_sft->add_option("--out", sf.out, "SFT file")->required();
    c_sft->callback([&] {
        sf.mode = selfimprove::parse_sft_mode(sf_mode);
        code = logged("sft-export", [&] { return run_sft(sf); });
    });

    // eval
    auto* c_eval = app.add_subcommand("eval", "Evaluation scoring and reports");
    c_eval->require_subcommand(1);

    EvalScoreArgs es;
    fs::path es_profile, es_scorer;
    auto* c_score = c_eval->add_subcommand("score", "Sample and self-score k generations per helper utterance");
    c_score->add_option("--in", es.in, "Test dataset")->required();
    c_score->add_option("--segments", es.segments, "Segments file")->required();
    c_score->add_option("--k", es.k, "Samples per utterance");
    c_score->add_option("--profile", es_profile, "Generator backend profile")->required();
    c_score->add_option("--scorer-profile", es_scorer, "Scorer backend profile (default: --profile)");
    c_score->add_option("--out", es.out, "Scores file")->required();
    c_score->add_option("--checkpoint", es.checkpoint, "Checkpoint file (default: <out>.partial)");
    c_score->add_flag("--resume", es.resume, "Resume from the checkpoint");
    c_score->callback([&] {
        es.workers = common.workers;
        code = logged("eval-score", [&] {
            return run_eval_score(es, gateway_for(gateways, es_profile),
                                  gateway_for(gateways, es_scorer.empty() ? es_profile : es_scorer));
        });
    });

    EvalReportArgs er;
    std::string er_scores;
    auto* c_report = c_eval->add_subcommand("report", "Aggregate scores and run significance tests");
    c_report->add_option("--scores", er_scores, "name=path,... (one per system)")->required();
    c_report->add_option("--baseline", er.baseline, "Baseline system (default: the first)");
    c_report->add_option("--out", er.out, "Output prefix; writes .json, .txt and .hist.csv")->required();
    c_report->add_option("--alpha", er.alpha, "Significance threshold");
    c_report->callback([&] {
        code = logged("eval-report", [&] {
            er.systems = parse_system_list(er_scores);
            return run_eval_report(er);
        });
    });

    // run
    fs::path run_config, run_work_dir;
    std::vector<std::string> run_stages;
    auto* c_run = app.add_subcommand("run", "Run pipeline stages from a config file");
    c_run->add_option("--config", run_config, "Pipeline config (TOML)")->required();
    c_run->add_option("--stage", run_stages, "Stage(s) to run instead of the configured list")
        ->check(CLI::IsMember(known_stages()));
    c_run->add_option("--work-dir", run_work_dir, "Override the configured work_dir");
    c_run->callback([&] {
        try {
            require_artifact(run_config, "pipeline config");
            auto cfg = load_config(run_config);
            if (!run_work_dir.empty()) cfg.work_dir = run_work_dir;
            if (app.get_option("--workers")->count() > 0) cfg.workers = common.workers;
            code = run_pipeline(cfg, run_stages);
        } catch (...) {
            code = exit_code_for(std::current_exception());
            try {
                throw;
            } catch (const std::exception& e) {
                std::cerr << "run: error: " << e.what() << "\n";
            }
        }
    });

    // serve
    fs::path sv_profile;
    std::string sv_host = "127.0.0.1", sv_token;
    int sv_port = 8080;
    auto* c_serve = app.add_subcommand("serve", "HTTP feedback endpoint");
    c_serve->add_option("--profile", sv_profile, "Backend profile")->required();
    c_serve->add_option("--host", sv_host, "Bind address");
    c_serve->add_option("--port", sv_port, "Port")->check(CLI::Range(1, 65535));
    c_serve->add_option("--token", sv_token, "Static bearer token")->envname("FBK_SERVICE_TOKEN");
    c_serve->callback([&] {
        try {
            require_artifact(sv_profile, "backend profile");
            auto svc = std::make_shared<service::FeedbackService>(gateway::load_gateway(sv_profile), sv_token);
            httplib::Server server;
            service::install_routes(server, svc, &std::clog);
            std::clog << "listening on " << sv_host << ":" << sv_port << std::endl;
            if (!server.listen(sv_host, sv_port)) {
                std::cerr << "serve: cannot listen on " << sv_host << ":" << sv_port << "\n";
                code = kExitUsage;
            }
        } catch (...) {
            code = exit_code_for(std::current_exception());
            try {
                throw;
            } catch (const std::exception& e) {
                std::cerr << "serve: error: " << e.what() << "\n";
            }
        }
    });

    // stats
    fs::path st_in;
    auto* c_stats = app.add_subcommand("stats", "Dataset statistics");
    c_stats->add_option("--in", st_in, "Annotated dataset")->required();
    c_stats->callback([&] {
        try {
            require_artifact(st_in, "annotated dataset");
            const auto data = load_dataset(st_in);
            std::cout << stats_to_json(dataset_stats(data)).dump(2) << "\n";
        } catch (...) {
            code = exit_code_for(std::current_exception());
            try {
                throw;
            } catch (const std::exception& e) {
                std::cerr << "stats: error: " << e.what() << "\n";
            }
        }
    });

    // check
    std::string ck_kind;
    fs::path ck_in;
    auto* c_check = app.add_subcommand("check", "Validate a file against its format");
    c_check->add_option("--kind", ck_kind, "dataset | segments | sft | dpo | scores")
        ->required()
        ->check(CLI::IsMember({"dataset", "segments", "sft", "dpo", "scores"}));
    c_check->add_option("--in", ck_in, "File to check")->required();
    c_check->callback([&] { code = check_file(ck_kind, ck_in); });

    // catalog
    auto* c_catalog = app.add_subcommand("catalog", "Print the skill catalog as JSON");
    c_catalog->callback([&] { std::cout << catalog_json().dump(2) << "\n"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }
    return code;
}
