#pragma once

// Pipeline stages. Each stage reads its inputs from files, writes its
// artifacts atomically and returns counts for the run log. Stages throw the
// library's error types; exit_code_for maps them to process exit codes.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "fbk/annotate/annotator.hpp"
#include "fbk/core/dataset_io.hpp"
#include "fbk/eval/report.hpp"
#include "fbk/eval/scores.hpp"
#include "fbk/gateway/factory.hpp"
#include "fbk/ingest/flags.hpp"
#include "fbk/ingest/raw.hpp"
#include "fbk/ingest/scrub.hpp"
#include "fbk/ingest/split.hpp"
#include "fbk/segment/c99.hpp"
#include "fbk/segment/segments_io.hpp"
#include "fbk/selfimprove/export.hpp"
#include "fbk/util/parallel.hpp"

namespace fbk::pipeline {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitBackend = 3, kExitPartial = 4 };

struct StageResult {
    std::string stage;
    int exit_code = kExitOk;
    ordered_json counts = ordered_json::object();
    std::vector<fs::path> artifacts;
    std::vector<std::string> messages;
};

// Thrown for a missing prerequisite artifact.
class MissingArtifact : public PreconditionError {
public:
    MissingArtifact(const std::string& what, const fs::path& path)
        : PreconditionError("missing " + what + " artifact: " + path.string()) {}
};

inline void require_artifact(const fs::path& path, const std::string& what) {
    if (path.empty()) throw PreconditionError("no " + what + " path given");
    if (!fs::is_regular_file(path)) throw MissingArtifact(what, path);
}

inline int exit_code_for(std::exception_ptr e) {
    try {
        std::rethrow_exception(e);
    } catch (const PreconditionError&) {
        return kExitUsage;
    } catch (const DataError&) {
        return kExitData;
    } catch (const BackendError&) {
        return kExitBackend;
    } catch (const fs::filesystem_error&) {
        return kExitUsage;
    } catch (...) {
        return kExitData;
    }
}

inline std::vector<std::string> read_keywords(const fs::path& path) {
    std::vector<std::string> out;
    for (auto line : util::split(util::read_file(path), '\n')) {
        auto t = util::trim(line);
        if (t.empty() || t.front() == '#') continue;
        out.push_back(util::to_lower(t));
    }
    if (out.empty()) throw PreconditionError("keyword file " + path.string() + " lists no keywords");
    return out;
}

inline std::vector<AnnotatedConversation> wrap(std::vector<Conversation> convs) {
    std::vector<AnnotatedConversation> out;
    out.reserve(convs.size());
    for (auto& c : convs) out.push_back({std::move(c), {}, {}});
    return out;
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
    fs::path in;
    fs::path out;
    fs::path report;
    fs::path keywords;       // empty: built-in list
    std::string split;       // empty: no split files
    std::uint64_t seed = 17;
    bool drop_flagged = false;
    ingest::FlagRules rules{};
};

// Path of split `name` next to `out`: clean.jsonl -> clean.test.jsonl.
inline fs::path split_path(const fs::path& out, const std::string& name) {
    auto p = out;
    p.replace_filename(out.stem().string() + "." + name + out.extension().string());
    return p;
}

inline StageResult run_ingest(const IngestArgs& a) {
    StageResult r;
    r.stage = "ingest";
    require_artifact(a.in, "raw corpus");
    const auto keywords = a.keywords.empty() ? ingest::default_keywords() : read_keywords(a.keywords);
    auto raw = ingest::parse_raw_corpus(util::read_file(a.in), a.in.string());

    std::vector<Conversation> clean;
    ordered_json report;
    report["keywords"] = keywords;
    report["dropped_empty_turns"] = raw.dropped_empty_turns;
    report["conversations"] = ordered_json::array();
    std::size_t hits = 0, flagged = 0;
    std::vector<std::size_t> eligible;
    for (const auto& c : raw.conversations) {
        auto [scrubbed, rep] = ingest::scrub_conversation(c, keywords);
        const auto flags = ingest::flag_conversation(scrubbed, a.rules);
        ordered_json entry;
        entry["id"] = c.id;
        entry["hits"] = ordered_json::array();
        for (const auto& h : rep.hits) {
            entry["hits"].push_back({{"utterance_index", h.utterance_index},
                                     {"keyword", h.keyword},
                                     {"action", std::string(ingest::action_name(h.action))}});
        }
        entry["flags"] = flags;
        report["conversations"].push_back(entry);
        hits += rep.hits.size();
        if (!flags.empty()) ++flagged;
        if (flags.empty() || !a.drop_flagged) eligible.push_back(clean.size());
        clean.push_back(std::move(scrubbed));
    }

    if (!a.split.empty()) {
        const auto spec = ingest::parse_split_spec(a.split, a.seed);
        const auto splits = ingest::split_indices(eligible.size(), spec);
        report["split"] = {{"spec", a.split}, {"seed", a.seed}, {"drop_flagged", a.drop_flagged}};
        ordered_json members = ordered_json::object();
        for (const auto& s : splits) {
            std::vector<AnnotatedConversation> part;
            members[s.name] = ordered_json::array();
            for (auto k : s.members) {
                auto c = clean[eligible[k]];
                c.source_tag = s.name;
                members[s.name].push_back(c.id);
                part.push_back({std::move(c), {}, {}});
            }
            const auto path = split_path(a.out, s.name);
            save_dataset(path, part);
            r.artifacts.push_back(path);
            r.counts["split_" + s.name] = part.size();
        }
        report["split"]["members"] = members;
    }
    save_dataset(a.out, wrap(clean));
    r.artifacts.insert(r.artifacts.begin(), a.out);
    if (!a.report.empty()) {
        util::write_file_atomic(a.report, report.dump(2) + "\n");
        r.artifacts.push_back(a.report);
    }
    r.counts["conversations"] = clean.size();
    r.counts["scrub_hits"] = hits;
    r.counts["flagged"] = flagged;
    r.counts["dropped_empty_turns"] = raw.dropped_empty_turns;
    return r;
}

// ---------------------------------------------------------------- segment

struct SegmentArgs {
    fs::path in;
    fs::path out;
    seg::SegmentParams params{};
    std::size_t workers = 1;
};

inline StageResult run_segment(const SegmentArgs& a, gateway::Gateway& embedder) {
    StageResult r;
    r.stage = "segment";
    require_artifact(a.in, "conversation dataset");
    const auto data = load_dataset(a.in);
    auto results = util::parallel_map(data.size(), a.workers, [&](std::size_t k) {
        const auto& c = data[k].conversation;
        std::vector<std::string> texts;
        texts.reserve(c.size());
        for (const auto& u : c.utterances) texts.push_back(u.text);
        return seg::segment_embeddings(embedder.embed(texts), a.params);
    });
    std::vector<std::pair<std::string, seg::Segmentation>> segs;
    std::size_t n_segments = 0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        if (!results[k].ok()) std::rethrow_exception(results[k].error);
        n_segments += results[k].value->segments().size();
        segs.emplace_back(data[k].conversation.id, *results[k].value);
    }
    util::write_file_atomic(a.out, seg::dump_segments(segs));
    r.artifacts.push_back(a.out);
    r.counts["conversations"] = data.size();
    r.counts["segments"] = n_segments;
    return r;
}

// ---------------------------------------------------------------- annotate

struct AnnotateArgs {
    fs::path in;
    fs::path segments;
    fs::path template_path;
    fs::path examples;       // optional in-context examples file
    fs::path out;
    fs::path partial_out;    // default: <out>.partial
    std::size_t workers = 1;
};

inline fs::path default_partial(const fs::path& out) {
    auto p = out;
    p += ".partial";
    return p;
}

inline StageResult run_annotate(const AnnotateArgs& a, gateway::Gateway& gw) {
    StageResult r;
    r.stage = "annotate";
    require_artifact(a.in, "conversation dataset");
    require_artifact(a.segments, "segments");
    require_artifact(a.template_path, "prompt template");
    const auto data = load_dataset(a.in);
    const auto segs = seg::load_segments(a.segments);
    annotate::AnnotationOptions opt;
    opt.template_text = util::read_file(a.template_path);
    if (!a.examples.empty()) {
        require_artifact(a.examples, "examples");
        opt.examples = util::read_file(a.examples);
    }
    auto results = util::parallel_map(data.size(), a.workers, [&](std::size_t k) {
        const auto& c = data[k].conversation;
        return annotate::annotate_conversation(c, seg::segmentation_for(segs, c), gw, opt);
    });
    std::vector<AnnotatedConversation> out;
    std::size_t records = 0, failed_chunks = 0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        if (!results[k].ok()) std::rethrow_exception(results[k].error);
        auto& o = *results[k].value;
        for (const auto& f : o.failures) {
            std::string win;
            for (auto i : f.window) win += (win.empty() ? "" : ",") + std::to_string(i);
            r.messages.push_back(data[k].conversation.id + ": chunk " + std::to_string(f.chunk_number) + " [" + win +
                                 "] failed: " + f.message);
        }
        failed_chunks += o.failures.size();
        records += o.annotated.feedback.size();
        out.push_back(std::move(o.annotated));
    }
    r.counts["conversations"] = out.size();
    r.counts["feedback_records"] = records;
    r.counts["failed_chunks"] = failed_chunks;
    if (failed_chunks > 0) {
        const auto partial = a.partial_out.empty() ? default_partial(a.out) : a.partial_out;
        save_dataset(partial, out);
        r.artifacts.push_back(partial);
        r.exit_code = kExitPartial;
        return r;
    }
    save_dataset(a.out, out);
    r.artifacts.push_back(a.out);
    return r;
}

// ---------------------------------------------------------------- pairs

struct PairsArgs {
    fs::path in;
    fs::path segments;
    fs::path out;
    std::size_t n = selfimprove::kDefaultSamples;
    std::size_t workers = 1;
};

struct UtteranceRef {
    const Conversation* conv;
    const seg::Segmentation* seg;
    std::size_t utt;
};

inline std::vector<UtteranceRef> helper_utterances(const std::vector<AnnotatedConversation>& data,
                                                   const seg::SegmentationMap& segs) {
    std::vector<UtteranceRef> out;
    for (const auto& ac : data) {
        const auto& s = seg::segmentation_for(segs, ac.conversation);
        for (auto i : ac.conversation.helper_indices()) out.push_back({&ac.conversation, &s, i});
    }
    return out;
}

inline StageResult run_pairs(const PairsArgs& a, gateway::Gateway& generator, gateway::Gateway& scorer) {
    StageResult r;
    r.stage = "pairs";
    require_artifact(a.in, "conversation dataset");
    require_artifact(a.segments, "segments");
    if (a.n < 2) throw PreconditionError("pairs needs --n >= 2");
    const auto data = load_dataset(a.in);
    const auto segs = seg::load_segments(a.segments);
    const auto refs = helper_utterances(data, segs);
    auto results = util::parallel_map(refs.size(), a.workers, [&](std::size_t k) {
        return selfimprove::score_and_pair(*refs[k].conv, refs[k].utt, a.n, *refs[k].seg, generator, scorer);
    });
    std::vector<selfimprove::PreferencePair> pairs;
    std::size_t gated = 0, ties = 0;
    for (auto& res : results) {
        if (!res.ok()) std::rethrow_exception(res.error);
        if (res.value->samples.empty()) ++gated;
        else if (!res.value->pair) ++ties;
        if (res.value->pair) pairs.push_back(std::move(*res.value->pair));
    }
    const auto exported = selfimprove::export_dpo(std::move(pairs));
    util::write_file_atomic(a.out, exported.content);
    r.artifacts.push_back(a.out);
    r.counts["helper_utterances"] = refs.size();
    r.counts["gated_out"] = gated;
    r.counts["equal_scores"] = ties;
    r.counts["pairs"] = exported.records;
    if (exported.empty_warning()) r.messages.push_back("warning: no preference pairs; wrote an empty file");
    return r;
}

// ---------------------------------------------------------------- generate

// Attaches n scored generations to every helper utterance, for the
// generation-based SFT modes.
struct GenerateArgs {
    fs::path in;
    fs::path segments;
    fs::path out;
    std::size_t n = selfimprove::kDefaultSamples;
    bool score = true;
    std::size_t workers = 1;
};

inline StageResult run_generate(const GenerateArgs& a, gateway::Gateway& generator, gateway::Gateway& scorer) {
    StageResult r;
    r.stage = "generate";
    require_artifact(a.in, "conversation dataset");
    require_artifact(a.segments, "segments");
    if (a.n == 0) throw PreconditionError("generate needs --n >= 1");
    auto data = load_dataset(a.in);
    const auto segs = seg::load_segments(a.segments);
    const auto refs = helper_utterances(data, segs);
    auto results = util::parallel_map(refs.size(), a.workers, [&](std::size_t k) {
        const auto& ref = refs[k];
        const auto fbs = generator.sample_feedback(selfimprove::query_for(*ref.conv, ref.utt, *ref.seg), a.n);
        std::vector<Generation> gens;
        for (std::size_t s = 0; s < fbs.size(); ++s) {
            Generation g{s, fbs[s], std::nullopt};
            if (a.score) g.sigma = selfimprove::self_score(*ref.conv, ref.utt, fbs[s], *ref.seg, scorer);
            gens.push_back(std::move(g));
        }
        return gens;
    });
    std::size_t total = 0, k = 0;
    for (auto& ac : data) {
        for (auto i : ac.conversation.helper_indices()) {
            auto& res = results[k++];
            if (!res.ok()) std::rethrow_exception(res.error);
            total += res.value->size();
            ac.generations[i] = std::move(*res.value);
        }
    }
    save_dataset(a.out, data);
    r.artifacts.push_back(a.out);
    r.counts["helper_utterances"] = refs.size();
    r.counts["generations"] = total;
    return r;
}

// ---------------------------------------------------------------- sft export

struct SftArgs {
    fs::path in;
    fs::path segments;
    fs::path out;
    selfimprove::SftMode mode = selfimprove::SftMode::Expert;
};

inline StageResult run_sft(const SftArgs& a) {
    StageResult r;
    r.stage = "sft-export";
    require_artifact(a.in, "annotated dataset");
    require_artifact(a.segments, "segments");
    const auto data = load_dataset(a.in);
    const auto segs = seg::load_segments(a.segments);
    const auto exported = selfimprove::export_sft(data, segs, a.mode);
    util::write_file_atomic(a.out, exported.content);
    r.artifacts.push_back(a.out);
    r.counts["records"] = exported.records;
    if (exported.empty_warning()) r.messages.push_back("warning: no SFT records; wrote an empty file");
    return r;
}

// ---------------------------------------------------------------- eval score

struct EvalScoreArgs {
    fs::path in;
    fs::path segments;
    fs::path out;
    fs::path checkpoint;  // default: <out>.partial
    bool resume = false;
    std::size_t k = 10;
    std::size_t workers = 1;
};

inline StageResult run_eval_score(const EvalScoreArgs& a, gateway::Gateway& generator, gateway::Gateway& scorer) {
    StageResult r;
    r.stage = "eval-score";
    require_artifact(a.in, "test dataset");
    require_artifact(a.segments, "segments");
    if (a.k == 0) throw PreconditionError("eval score needs --k >= 1");
    const auto data = load_dataset(a.in);
    const auto segs = seg::load_segments(a.segments);
    const auto checkpoint = a.checkpoint.empty() ? default_partial(a.out) : a.checkpoint;
    eval::EvalSampleSet prior;
    if (a.resume) {
        require_artifact(checkpoint, "checkpoint");
        prior = eval::load_scores(checkpoint);
    }
    auto run = eval::generate_eval_scores(data, segs, a.k, generator, scorer, prior, a.workers);
    r.counts["entries"] = run.scores.size();
    r.counts["resumed_utterances"] = run.skipped;
    r.counts["failed_utterances"] = run.failures.size();
    for (const auto& f : run.failures) {
        r.messages.push_back(f.conversation_id + "#" + std::to_string(f.utterance_index) + " failed: " + f.message);
    }
    if (!run.complete()) {
        util::write_file_atomic(checkpoint, eval::dump_scores(run.scores));
        r.artifacts.push_back(checkpoint);
        r.exit_code = kExitPartial;
        return r;
    }
    util::write_file_atomic(a.out, eval::dump_scores(run.scores));
    r.artifacts.push_back(a.out);
    if (a.resume) fs::remove(checkpoint);
    return r;
}

// ---------------------------------------------------------------- eval report

struct EvalReportArgs {
    std::vector<std::pair<std::string, fs::path>> systems;
    std::string baseline;
    fs::path out;  // prefix; .json/.txt/.hist.csv are appended
    double alpha = 0.01;
};

// "sft=a.jsonl,selfimp=b.jsonl"
inline std::vector<std::pair<std::string, fs::path>> parse_system_list(std::string_view text) {
    std::vector<std::pair<std::string, fs::path>> out;
    for (auto item : util::split(text, ',')) {
        auto t = util::trim(item);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos || eq == 0 || eq + 1 == t.size()) {
            throw PreconditionError("expected name=path in system list, got '" + std::string(t) + "'");
        }
        out.emplace_back(std::string(util::trim(t.substr(0, eq))), fs::path(std::string(util::trim(t.substr(eq + 1)))));
    }
    if (out.empty()) throw PreconditionError("empty system list");
    return out;
}

inline fs::path report_prefix(fs::path out) {
    const auto ext = out.extension().string();
    if (ext == ".json" || ext == ".txt") out.replace_extension();
    return out;
}

inline fs::path with_suffix(fs::path p, const std::string& suffix) {
    p += suffix;
    return p;
}

inline StageResult run_eval_report(const EvalReportArgs& a) {
    StageResult r;
    r.stage = "eval-report";
    std::vector<eval::NamedScores> systems;
    for (const auto& [name, path] : a.systems) {
        require_artifact(path, "scores for system '" + name + "'");
        systems.push_back({name, eval::load_scores(path)});
    }
    const auto rep = eval::build_report(systems, {a.baseline, a.alpha});
    const auto prefix = report_prefix(a.out);
    const auto json_path = with_suffix(prefix, ".json");
    const auto txt_path = with_suffix(prefix, ".txt");
    const auto hist_path = with_suffix(prefix, ".hist.csv");
    util::write_file_atomic(json_path, eval::report_to_json(rep).dump(2) + "\n");
    util::write_file_atomic(txt_path, eval::render_table(rep));
    util::write_file_atomic(hist_path, eval::histogram_csv(systems));
    r.artifacts = {json_path, txt_path, hist_path};
    r.counts["systems"] = systems.size();
    std::size_t stars = 0;
    for (const auto& t : rep.tests) stars += t.significant ? 1 : 0;
    r.counts["significant_rows"] = stars;
    return r;
}

// ---------------------------------------------------------------- run log

inline ordered_json stage_log_entry(const StageResult& r, double elapsed_ms) {
    ordered_json j;
    j["stage"] = r.stage;
    j["exit_code"] = r.exit_code;
    j["elapsed_ms"] = elapsed_ms;
    j["counts"] = r.counts;
    j["artifacts"] = ordered_json::array();
    for (const auto& p : r.artifacts) j["artifacts"].push_back(p.string());
    if (!r.messages.empty()) j["messages"] = r.messages;
    return j;
}

// Runs `fn`, logs one JSON line to `log`, and returns the exit code.
template <class Fn>
int run_logged(const std::string& stage, std::ostream& log, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    };
    try {
        StageResult r = fn();
        log << stage_log_entry(r, elapsed()).dump() << "\n";
        for (const auto& m : r.messages) std::cerr << r.stage << ": " << m << "\n";
        return r.exit_code;
    } catch (...) {
        const auto code = exit_code_for(std::current_exception());
        std::string msg;
        try {
            throw;
        } catch (const std::exception& e) {
            msg = e.what();
        } catch (...) {
            msg = "unknown error";
        }
        ordered_json j;
        j["stage"] = stage;
        j["exit_code"] = code;
        j["elapsed_ms"] = elapsed();
        j["error"] = msg;
        log << j.dump() << "\n";
        std::cerr << stage << ": error: " << msg << "\n";
        return code;
    }
}

}  // namespace fbk::pipeline
