#pragma once

// Pipeline configuration (TOML). Relative paths resolve against the config
// file's directory.
//
//   seed = 17
//   workers = 2
//   work_dir = "out"
//   raw = "raw.jsonl"
//   template = "prompt.tmpl"
//   examples = "examples.txt"          # optional
//   keywords = "keywords.txt"          # optional
//   stages = ["ingest", "segment", "annotate", "pairs", "sft-export", "eval-score", "eval-report"]
//
//   [backends]
//   default = "backend.toml"           # used where no override is given
//   embed = "..."; annotate = "..."; generate = "..."; score = "..."
//
//   [ingest]   split = "annotate=2,prefs=2,test=2", drop_flagged = false
//   [segment]  mask = 11, min_seg = 2, c = 1.2
//   [annotate] split = "annotate"
//   [pairs]    split = "prefs", n = 10
//   [generate] split = "prefs", n = 10
//   [sft]      mode = "expert"         # expert | gens | best
//   [eval]     split = "test", k = 10, baseline = "sft", alpha = 0.01
//   [[eval.systems]]                   # report columns follow this order
//   name = "sft"
//   profile = "backend.toml"           # generator profile for the system
//   (a plain [eval.systems] table of name = profile also works; names then sort)
//
// Artifacts land in work_dir under fixed names (see artifact_path).

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toml.hpp"

#include "fbk/error.hpp"
#include "fbk/segment/c99.hpp"
#include "fbk/selfimprove/export.hpp"

namespace fbk::pipeline {

inline const std::vector<std::string>& known_stages() {
    static const std::vector<std::string> s{"ingest",     "segment",    "annotate",   "pairs",
                                            "generate",   "sft-export", "eval-score", "eval-report"};
    return s;
}

inline const std::vector<std::string>& default_stages() {
    static const std::vector<std::string> s{"ingest", "segment", "annotate", "pairs", "sft-export", "eval-score",
                                            "eval-report"};
    return s;
}

struct PipelineConfig {
    std::filesystem::path base_dir;
    std::uint64_t seed = 17;
    std::size_t workers = 1;
    std::filesystem::path work_dir = "out";
    std::filesystem::path raw;
    std::filesystem::path template_path;
    std::filesystem::path examples;
    std::filesystem::path keywords;
    std::vector<std::string> stages = default_stages();

    std::filesystem::path backend_default;
    std::map<std::string, std::filesystem::path> backend_overrides;  // embed, annotate, generate, score

    std::string split;
    bool drop_flagged = false;
    seg::SegmentParams segment{};
    std::string annotate_split;
    std::string pairs_split;
    std::size_t pairs_n = selfimprove::kDefaultSamples;
    std::string generate_split;
    std::size_t generate_n = selfimprove::kDefaultSamples;
    selfimprove::SftMode sft_mode = selfimprove::SftMode::Expert;
    std::string eval_split;
    std::size_t eval_k = 10;
    std::string eval_baseline;
    double eval_alpha = 0.01;
    std::vector<std::pair<std::string, std::filesystem::path>> eval_systems;

    std::filesystem::path backend_for(const std::string& role) const {
        if (auto it = backend_overrides.find(role); it != backend_overrides.end()) return it->second;
        if (backend_default.empty()) throw PreconditionError("config: no backend profile for '" + role + "'");
        return backend_default;
    }

    // Clean conversations of a split, or all of them when `split` is empty.
    std::filesystem::path split_file(const std::string& split_name) const {
        if (split_name.empty()) return work_dir / "clean.jsonl";
        return work_dir / ("clean." + split_name + ".jsonl");
    }

    std::filesystem::path artifact(const std::string& name) const { return work_dir / name; }
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& s) {
    if (s.empty()) return {};
    std::filesystem::path p(s);
    return p.is_absolute() ? p : base / p;
}

inline std::size_t positive(std::int64_t v, const char* key) {
    if (v <= 0) throw PreconditionError(std::string("config: ") + key + " must be > 0");
    return static_cast<std::size_t>(v);
}

}  // namespace detail

inline PipelineConfig config_from_toml(const toml::table& t, const std::filesystem::path& base) {
    PipelineConfig c;
    c.base_dir = base;
    auto path_of = [&](const toml::node_view<const toml::node>& v) {
        return detail::resolve(base, v.value_or(std::string{}));
    };
    c.seed = static_cast<std::uint64_t>(t["seed"].value_or(std::int64_t{17}));
    c.workers = detail::positive(t["workers"].value_or(std::int64_t{1}), "workers");
    c.work_dir = detail::resolve(base, t["work_dir"].value_or(std::string("out")));
    c.raw = path_of(t["raw"]);
    c.template_path = path_of(t["template"]);
    c.examples = path_of(t["examples"]);
    c.keywords = path_of(t["keywords"]);
    if (const auto* arr = t["stages"].as_array()) {
        c.stages.clear();
        for (const auto& v : *arr) {
            auto s = v.value<std::string>();
            if (!s) throw PreconditionError("config: stages must be strings");
            const auto& known = known_stages();
            if (std::find(known.begin(), known.end(), *s) == known.end()) {
                throw PreconditionError("config: unknown stage '" + *s + "'");
            }
            c.stages.push_back(*s);
        }
    }

    if (const auto* b = t["backends"].as_table()) {
        for (const auto& [k, v] : *b) {
            auto s = v.value<std::string>();
            if (!s) throw PreconditionError("config: backends." + std::string(k.str()) + " must be a path");
            const std::string key(k.str());
            if (key == "default") {
                c.backend_default = detail::resolve(base, *s);
            } else if (key == "embed" || key == "annotate" || key == "generate" || key == "score") {
                c.backend_overrides[key] = detail::resolve(base, *s);
            } else {
                throw PreconditionError("config: unknown backend role '" + key + "'");
            }
        }
    }

    const auto ing = t["ingest"];
    c.split = ing["split"].value_or(std::string{});
    c.drop_flagged = ing["drop_flagged"].value_or(false);

    const auto sg = t["segment"];
    c.segment.mask = detail::positive(sg["mask"].value_or(std::int64_t(c.segment.mask)), "segment.mask");
    c.segment.min_seg = detail::positive(sg["min_seg"].value_or(std::int64_t(c.segment.min_seg)), "segment.min_seg");
    c.segment.stop.c = sg["c"].value_or(c.segment.stop.c);

    c.annotate_split = t["annotate"]["split"].value_or(std::string{});
    c.pairs_split = t["pairs"]["split"].value_or(std::string{});
    c.pairs_n = detail::positive(t["pairs"]["n"].value_or(std::int64_t(c.pairs_n)), "pairs.n");
    c.generate_split = t["generate"]["split"].value_or(c.pairs_split);
    c.generate_n = detail::positive(t["generate"]["n"].value_or(std::int64_t(c.generate_n)), "generate.n");
    c.sft_mode = selfimprove::parse_sft_mode(t["sft"]["mode"].value_or(std::string("expert")));

    const auto ev = t["eval"];
    c.eval_split = ev["split"].value_or(std::string{});
    c.eval_k = detail::positive(ev["k"].value_or(std::int64_t(c.eval_k)), "eval.k");
    c.eval_baseline = ev["baseline"].value_or(std::string{});
    c.eval_alpha = ev["alpha"].value_or(c.eval_alpha);
    if (const auto* arr = ev["systems"].as_array()) {
        for (const auto& v : *arr) {
            const auto* t2 = v.as_table();
            auto name = t2 ? (*t2)["name"].value<std::string>() : std::nullopt;
            auto profile = t2 ? (*t2)["profile"].value<std::string>() : std::nullopt;
            if (!name || !profile) throw PreconditionError("config: each [[eval.systems]] needs name and profile");
            c.eval_systems.emplace_back(*name, detail::resolve(base, *profile));
        }
    } else if (const auto* sys = ev["systems"].as_table()) {
        for (const auto& [k, v] : *sys) {
            auto s = v.value<std::string>();
            if (!s) throw PreconditionError("config: eval.systems." + std::string(k.str()) + " must be a path");
            c.eval_systems.emplace_back(std::string(k.str()), detail::resolve(base, *s));
        }
    }
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    toml::table t;
    try {
        t = toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        throw PreconditionError("config " + path.string() + ": " + std::string(e.description()));
    }
    return config_from_toml(t, path.parent_path());
}

}  // namespace fbk::pipeline
