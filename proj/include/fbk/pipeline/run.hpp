#pragma once

#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include "fbk/pipeline/config.hpp"
#include "fbk/pipeline/stages.hpp"

namespace fbk::pipeline {

// One gateway per profile path, so a shared profile shares its audit log.
class GatewayCache {
public:
    gateway::Gateway& get(const fs::path& profile) {
        const auto key = fs::weakly_canonical(profile).string();
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            require_artifact(profile, "backend profile");
            it = cache_.emplace(key, gateway::load_gateway(profile)).first;
        }
        return *it->second;
    }

private:
    std::map<std::string, std::shared_ptr<gateway::Gateway>> cache_;
};

inline StageResult run_stage(const std::string& stage, const PipelineConfig& c, GatewayCache& gws) {
    if (stage == "ingest") {
        IngestArgs a;
        a.in = c.raw;
        a.out = c.split_file("");
        a.report = c.artifact("scrub_report.json");
        a.keywords = c.keywords;
        a.split = c.split;
        a.seed = c.seed;
        a.drop_flagged = c.drop_flagged;
        return run_ingest(a);
    }
    if (stage == "segment") {
        SegmentArgs a{c.split_file(""), c.artifact("segments.jsonl"), c.segment, c.workers};
        return run_segment(a, gws.get(c.backend_for("embed")));
    }
    if (stage == "annotate") {
        AnnotateArgs a;
        a.in = c.split_file(c.annotate_split);
        a.segments = c.artifact("segments.jsonl");
        a.template_path = c.template_path;
        a.examples = c.examples;
        a.out = c.artifact("annotated.jsonl");
        a.partial_out = c.artifact("annotated.partial.jsonl");
        a.workers = c.workers;
        return run_annotate(a, gws.get(c.backend_for("annotate")));
    }
    if (stage == "pairs") {
        PairsArgs a{c.split_file(c.pairs_split), c.artifact("segments.jsonl"), c.artifact("pairs.dpo.jsonl"), c.pairs_n,
                    c.workers};
        return run_pairs(a, gws.get(c.backend_for("generate")), gws.get(c.backend_for("score")));
    }
    if (stage == "generate") {
        GenerateArgs a;
        a.in = c.split_file(c.generate_split);
        a.segments = c.artifact("segments.jsonl");
        a.out = c.artifact("generated.jsonl");
        a.n = c.generate_n;
        a.workers = c.workers;
        return run_generate(a, gws.get(c.backend_for("generate")), gws.get(c.backend_for("score")));
    }
    if (stage == "sft-export") {
        SftArgs a;
        a.in = c.sft_mode == selfimprove::SftMode::Expert ? c.artifact("annotated.jsonl") : c.artifact("generated.jsonl");
        a.segments = c.artifact("segments.jsonl");
        a.out = c.artifact("train.sft.jsonl");
        a.mode = c.sft_mode;
        return run_sft(a);
    }
    if (stage == "eval-score") {
        if (c.eval_systems.empty()) throw PreconditionError("config: eval-score needs [eval.systems]");
        StageResult total;
        total.stage = "eval-score";
        for (const auto& [name, profile] : c.eval_systems) {
            EvalScoreArgs a;
            a.in = c.split_file(c.eval_split);
            a.segments = c.artifact("segments.jsonl");
            a.out = c.artifact("scores." + name + ".jsonl");
            a.k = c.eval_k;
            a.workers = c.workers;
            auto r = run_eval_score(a, gws.get(profile), gws.get(c.backend_for("score")));
            total.counts[name] = r.counts;
            total.artifacts.insert(total.artifacts.end(), r.artifacts.begin(), r.artifacts.end());
            for (auto& m : r.messages) total.messages.push_back(name + ": " + m);
            if (r.exit_code != kExitOk) {
                total.exit_code = r.exit_code;
                break;
            }
        }
        return total;
    }
    if (stage == "eval-report") {
        if (c.eval_systems.empty()) throw PreconditionError("config: eval-report needs [eval.systems]");
        EvalReportArgs a;
        for (const auto& [name, _] : c.eval_systems) a.systems.emplace_back(name, c.artifact("scores." + name + ".jsonl"));
        a.baseline = c.eval_baseline;
        a.out = c.artifact("report");
        a.alpha = c.eval_alpha;
        return run_eval_report(a);
    }
    throw PreconditionError("unknown stage '" + stage + "'");
}

// Runs the configured stages in order, stopping at the first non-zero exit.
// The structured log goes to work_dir/run_log.jsonl.
inline int run_pipeline(const PipelineConfig& c, const std::vector<std::string>& only = {}) {
    const auto& stages = only.empty() ? c.stages : only;
    fs::create_directories(c.work_dir);
    std::ofstream log(c.artifact("run_log.jsonl"), std::ios::trunc);
    if (!log) throw PreconditionError("cannot write run log in " + c.work_dir.string());
    GatewayCache gws;
    for (const auto& s : stages) {
        const int code = run_logged(s, log, [&] { return run_stage(s, c, gws); });
        log.flush();
        if (code != kExitOk) return code;
    }
    return kExitOk;
}

}  // namespace fbk::pipeline
