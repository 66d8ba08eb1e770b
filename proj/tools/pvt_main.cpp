// Command-line front end: gen-data, train, score, calibrate-evaluate,
// simulate-stream. Exit codes: 0 ok, 2 usage, 3 data error, 4 numeric error.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pvt/checkpoint.hpp"
#include "pvt/corpus.hpp"
#include "pvt/decision.hpp"
#include "pvt/error.hpp"
#include "pvt/evalkit.hpp"
#include "pvt/parallel.hpp"
#include "pvt/rng.hpp"
#include "pvt/runconfig.hpp"
#include "pvt/scorer.hpp"
#include "pvt/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using namespace pvt;
using nlohmann::ordered_json;

std::string fmt9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << body;
}

// files.json: every artifact a command produced, relative to its --out dir.
void write_files_manifest(const std::string& out_dir, std::vector<std::string> files) {
    for (auto& f : files) {
        if (f.rfind(out_dir + "/", 0) == 0) f = f.substr(out_dir.size() + 1);
    }
    std::sort(files.begin(), files.end());
    ordered_json j;
    j["files"] = files;
    write_text(out_dir + "/files.json", j.dump(2) + "\n");
}

RunConfig load_or_default(const std::string& config_path) {
    if (config_path.empty()) return RunConfig{};
    return load_runconfig(config_path);
}

Aggregate parse_aggregate(const std::string& s) {
    if (s == "max") return Aggregate::max;
    if (s == "mean") return Aggregate::mean;
    throw DataError("aggregate must be \"max\" or \"mean\", got \"" + s + "\"");
}

// ---------------------------------------------------------------------------
// shared scoring machinery

struct ScoredCandidate {
    std::int64_t id = -1;
    bool positive = false;
    bool stub = false;
    std::vector<double> scores;  // one per grid context
    double early = 0.0;
    double late = 0.0;
};

// Scores one candidate on every context of `grid` by featurizing the longest
// clipped segment once and slicing row prefixes (identical bits to scoring
// each context from scratch).
std::vector<double> score_context_grid(const Checkpoint& ckpt, const AudioBuffer& audio,
                                       const TriggerCandidate& cand,
                                       const std::vector<double>& grid, Aggregate agg) {
    const auto& fe = ckpt.frontend;
    const double duration = audio.duration();
    double max_end = 0.0;
    for (double ctx : grid) max_end = std::max(max_end, std::min(cand.trigger_end + ctx, duration));

    const AudioBuffer seg = extract_segment(audio, cand.trigger_start, max_end);
    auto x = compute_features(seg, fe).windows.cast<float>();
    normalize_rows(x, ckpt.norm_mean, ckpt.norm_std);

    std::vector<double> out(grid.size());
    std::vector<std::pair<int, double>> by_frames;  // memoize equal prefixes
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double end = std::min(cand.trigger_end + grid[i], duration);
        const auto n = static_cast<std::int64_t>(
            std::llround((end - cand.trigger_start) * fe.sample_rate));
        const int frames = stacked_frames_in(fe, n);
        if (frames < 1) throw DataError("segment too short");
        auto hit = std::find_if(by_frames.begin(), by_frames.end(),
                                [frames](const auto& p) { return p.first == frames; });
        if (hit != by_frames.end()) {
            out[i] = hit->second;
            continue;
        }
        Mat<float> prefix(frames, x.cols);
        std::copy(x[0], x[0] + static_cast<std::size_t>(frames) * x.cols, prefix[0]);
        out[i] = score_frames(ckpt, prefix, agg);
        by_frames.emplace_back(frames, out[i]);
    }
    return out;
}

TriggerCandidate candidate_of(const ManifestEntry& e) {
    TriggerCandidate c;
    c.utterance_id = e.id;
    c.trigger_start = e.candidate_start;
    c.trigger_end = e.candidate_end;
    c.source = CandidateSource::annotation;
    return c;
}

// Context grid extended (when needed) by the early/late pair contexts;
// pair_idx locates them in the returned grid.
std::vector<double> build_grid(const std::vector<double>& contexts, double early_ctx,
                               double late_ctx, std::size_t* early_idx, std::size_t* late_idx) {
    std::vector<double> grid = contexts;
    for (double extra : {early_ctx, late_ctx})
        if (std::find(grid.begin(), grid.end(), extra) == grid.end()) grid.push_back(extra);
    *early_idx = std::find(grid.begin(), grid.end(), early_ctx) - grid.begin();
    *late_idx = std::find(grid.begin(), grid.end(), late_ctx) - grid.begin();
    return grid;
}

// Test-split annotation candidates scored over the grid, in manifest order.
std::vector<ScoredCandidate> score_split(const Checkpoint& ckpt, const CorpusManifest& manifest,
                                         const std::string& corpus_dir, const std::string& split,
                                         const std::vector<double>& grid, std::size_t early_idx,
                                         std::size_t late_idx, Aggregate agg,
                                         const std::vector<std::int64_t>& id_filter) {
    std::vector<const ManifestEntry*> picked;
    if (!id_filter.empty()) {
        for (std::int64_t id : id_filter) {
            const ManifestEntry* hit = nullptr;
            for (const auto& e : manifest.entries)
                if (e.id == id) {
                    hit = &e;
                    break;
                }
            if (!hit) throw DataError("unknown utterance id: " + std::to_string(id));
            picked.push_back(hit);
        }
    } else {
        for (const auto& e : manifest.entries)
            if (split == "all" || e.split == split) picked.push_back(&e);
    }

    std::vector<ScoredCandidate> out(picked.size());
    parallel_for(static_cast<std::int64_t>(picked.size()), [&](std::int64_t i) {
        const auto& e = *picked[i];
        const auto audio = read_wav(corpus_dir + "/" + e.wav);
        ScoredCandidate s;
        s.id = e.id;
        s.positive = e.positive;
        s.scores = score_context_grid(ckpt, audio, candidate_of(e), grid, agg);
        s.early = s.scores[early_idx];
        s.late = s.scores[late_idx];
        out[i] = s;
    });
    return out;
}

// Stub-detector candidates over every timeline chunk. Synthetic ids keep
// them distinct from manifest utterances.
std::vector<ScoredCandidate> score_timeline(const Checkpoint& ckpt,
                                            const CorpusManifest& manifest,
                                            const std::string& corpus_dir,
                                            const StubConfig& stub,
                                            const std::vector<double>& grid,
                                            std::size_t early_idx, std::size_t late_idx,
                                            Aggregate agg) {
    std::vector<ScoredCandidate> out;
    for (std::size_t c = 0; c < manifest.timeline.size(); ++c) {
        const auto audio = read_wav(corpus_dir + "/" + manifest.timeline[c].wav);
        const auto cands = stub_first_pass(audio, stub);
        std::vector<ScoredCandidate> chunk_scores(cands.size());
        parallel_for(static_cast<std::int64_t>(cands.size()), [&](std::int64_t k) {
            ScoredCandidate s;
            s.id = 1000000 + static_cast<std::int64_t>(c) * 10000 + k;
            s.positive = false;
            s.stub = true;
            s.scores = score_context_grid(ckpt, audio, cands[k], grid, agg);
            s.early = s.scores[early_idx];
            s.late = s.scores[late_idx];
            chunk_scores[k] = s;
        });
        out.insert(out.end(), chunk_scores.begin(), chunk_scores.end());
    }
    return out;
}

double negative_hours(const CorpusManifest& manifest, const std::vector<ScoredCandidate>& utts) {
    double hours = manifest.negative_timeline_hours;
    std::set<std::int64_t> counted;
    for (const auto& s : utts)
        if (!s.positive && !s.stub && counted.insert(s.id).second) {
            for (const auto& e : manifest.entries)
                if (e.id == s.id) {
                    hours += e.duration_s / 3600.0;
                    break;
                }
        }
    return hours;
}

std::vector<PairScore> to_pairs(const std::vector<ScoredCandidate>& scored) {
    std::vector<PairScore> pairs;
    pairs.reserve(scored.size());
    for (const auto& s : scored) pairs.push_back({s.id, s.positive, s.early, s.late});
    return pairs;
}

// ---------------------------------------------------------------------------
// subcommands

void cmd_gen_data(const RunConfig& cfg) {
    const double t0 = now_s();
    GenConfig gen = cfg.gen;
    gen.seed = derive_seed(cfg.seed, "gen");
    const auto manifest = generate_corpus(gen, cfg.corpus_dir);

    std::vector<std::string> files = {"manifest.jsonl", "timeline.jsonl", "gen_config.json"};
    for (const auto& e : manifest.entries) files.push_back(e.wav);
    for (const auto& t : manifest.timeline) files.push_back(t.wav);
    write_files_manifest(cfg.corpus_dir, files);

    std::printf("corpus: %zu utterances, %zu timeline chunks (%.2f h) -> %s [%.1f s]\n",
                manifest.entries.size(), manifest.timeline.size(),
                manifest.negative_timeline_hours, cfg.corpus_dir.c_str(), now_s() - t0);
}

void cmd_train(const RunConfig& cfg, const std::string& resume_path) {
    const double t0 = now_s();
    if (cfg.model.input_dim != cfg.frontend.feature_dim())
        throw DataError("model input_dim " + std::to_string(cfg.model.input_dim) +
                        " != frontend feature dim " + std::to_string(cfg.frontend.feature_dim()));
    const auto manifest = load_manifest(cfg.corpus_dir);

    TrainConfig tcfg = cfg.train;
    tcfg.seed = derive_seed(cfg.seed, "train");

    Checkpoint resume;
    const Checkpoint* resume_ptr = nullptr;
    if (!resume_path.empty()) {
        resume = load_checkpoint(resume_path);
        resume_ptr = &resume;
    }

    std::filesystem::create_directories(cfg.out_dir);
    const std::string log_path = cfg.out_dir + "/train_log.csv";
    const auto result =
        train(manifest, cfg.corpus_dir, cfg.model, cfg.frontend, tcfg, log_path, resume_ptr);

    const std::string ckpt_path = cfg.out_dir + "/checkpoint.pvtc";
    save_checkpoint(ckpt_path, result.ckpt);
    write_files_manifest(cfg.out_dir, {ckpt_path, log_path});

    std::printf(
        "trained %d steps: phonetic %.4f, disc %.4f, holdout acc %.3f -> %s [%.1f s]\n",
        result.steps_run, result.final_phonetic_loss, result.final_disc_loss,
        result.holdout_disc_accuracy, ckpt_path.c_str(), now_s() - t0);
}

void cmd_score(const RunConfig& cfg, const std::string& split,
               const std::vector<std::int64_t>& ids, bool include_timeline) {
    const double t0 = now_s();
    const auto manifest = load_manifest(cfg.corpus_dir);
    const auto ckpt = load_checkpoint(cfg.checkpoint);
    const Aggregate agg = parse_aggregate(cfg.aggregate);

    std::size_t early_idx = 0, late_idx = 0;
    const auto grid =
        build_grid(cfg.contexts, cfg.early_context, cfg.late_context, &early_idx, &late_idx);

    auto scored = score_split(ckpt, manifest, cfg.corpus_dir, split, grid, early_idx, late_idx,
                              agg, ids);
    if (include_timeline) {
        auto tl = score_timeline(ckpt, manifest, cfg.corpus_dir, cfg.stub, grid, early_idx,
                                 late_idx, agg);
        scored.insert(scored.end(), tl.begin(), tl.end());
    }

    std::filesystem::create_directories(cfg.out_dir);
    std::string scores_csv = "utterance_id,label,post_context,score\n";
    for (const auto& s : scored) {
        const char* label = s.positive ? "positive" : "negative";
        for (std::size_t i = 0; i < cfg.contexts.size(); ++i) {
            const auto gi = static_cast<std::size_t>(
                std::find(grid.begin(), grid.end(), cfg.contexts[i]) - grid.begin());
            scores_csv += std::to_string(s.id);
            scores_csv += ',';
            scores_csv += label;
            scores_csv += ',';
            scores_csv += fmt9(cfg.contexts[i]);
            scores_csv += ',';
            scores_csv += fmt9(s.scores[gi]);
            scores_csv += '\n';
        }
    }
    std::string pairs_csv = "utterance_id,label,early,late\n";
    for (const auto& s : scored) {
        pairs_csv += std::to_string(s.id);
        pairs_csv += ',';
        pairs_csv += s.positive ? "positive" : "negative";
        pairs_csv += ',';
        pairs_csv += fmt9(s.early);
        pairs_csv += ',';
        pairs_csv += fmt9(s.late);
        pairs_csv += '\n';
    }
    write_text(cfg.out_dir + "/scores.csv", scores_csv);
    write_text(cfg.out_dir + "/pairs.csv", pairs_csv);
    write_files_manifest(cfg.out_dir, {"scores.csv", "pairs.csv"});

    std::printf("scored %zu candidates x %zu contexts -> %s [%.1f s]\n", scored.size(),
                cfg.contexts.size(), cfg.out_dir.c_str(), now_s() - t0);
}

void cmd_calibrate_evaluate(const RunConfig& cfg, bool no_timeline) {
    const double t0 = now_s();
    const auto manifest = load_manifest(cfg.corpus_dir);
    const auto ckpt = load_checkpoint(cfg.checkpoint);
    const Aggregate agg = parse_aggregate(cfg.aggregate);

    std::size_t early_idx = 0, late_idx = 0;
    const auto grid =
        build_grid(cfg.contexts, cfg.early_context, cfg.late_context, &early_idx, &late_idx);

    auto scored = score_split(ckpt, manifest, cfg.corpus_dir, "test", grid, early_idx, late_idx,
                              agg, {});
    if (!no_timeline) {
        auto tl = score_timeline(ckpt, manifest, cfg.corpus_dir, cfg.stub, grid, early_idx,
                                 late_idx, agg);
        scored.insert(scored.end(), tl.begin(), tl.end());
    }
    const double hours = negative_hours(manifest, scored);

    std::int64_t n_pos = 0, n_neg = 0;
    for (const auto& s : scored) (s.positive ? n_pos : n_neg)++;
    if (n_pos == 0) throw DataError("no positive test candidates; corpus too small or split empty");
    if (n_neg == 0) throw DataError("no negative candidates; add utterances or timeline hours");

    // one DET curve per context plus the two-stage sweep
    std::vector<DetCurve> curves;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<double> pos, neg;
        for (const auto& s : scored) (s.positive ? pos : neg).push_back(s.scores[i]);
        curves.push_back(det_curve(pos, neg, hours, fmt9(grid[i])));
    }
    const auto pairs = to_pairs(scored);
    std::vector<PairScore> pos_pairs, neg_pairs;
    for (const auto& p : pairs) (p.positive ? pos_pairs : neg_pairs).push_back(p);
    curves.push_back(two_stage_det(pos_pairs, neg_pairs, hours, cfg.early_frr_target));

    Thresholds th = calibrate_two_stage(pairs, cfg.early_frr_target, cfg.late_frr_target,
                                        cfg.late_over_deferred_only);
    th.early_context = cfg.early_context;
    th.late_context = cfg.late_context;
    const auto policy = run_policy(pairs, hours, th);

    std::filesystem::create_directories(cfg.out_dir);
    auto files = emit_reports(curves, pairs, &policy, cfg.out_dir);

    {
        ordered_json j;
        j["early_accept"] = th.early_accept;
        j["late_accept"] = th.late_accept;
        j["early_context"] = th.early_context;
        j["late_context"] = th.late_context;
        const std::string p = cfg.out_dir + "/thresholds.json";
        write_text(p, j.dump(2) + "\n");
        files.push_back(p);
    }
    {
        std::string csv = "utterance_id,label,early,late,outcome,latency_s\n";
        for (const auto& p : pairs) {
            const auto d = decide(p.early, [&p] { return p.late; }, th);
            const char* outcome = d.outcome == Outcome::accept_early  ? "accept_early"
                                  : d.outcome == Outcome::accept_late ? "accept_late"
                                                                      : "reject";
            csv += std::to_string(p.utterance_id);
            csv += ',';
            csv += p.positive ? "positive" : "negative";
            csv += ',';
            csv += fmt9(p.early);
            csv += ',';
            csv += fmt9(p.late);
            csv += ',';
            csv += outcome;
            csv += ',';
            csv += fmt9(d.latency);
            csv += '\n';
        }
        const std::string p = cfg.out_dir + "/decisions.csv";
        write_text(p, csv);
        files.push_back(p);
    }
    {
        auto op_json = [&](const DetCurve& c) {
            ordered_json j;
            const auto at_fa = frr_at_fa_count(c, cfg.operating_fa_count);
            const auto at_h = frr_at_operating_point(c, cfg.operating_hours_per_fa);
            j["frr_at_fa_count"] = at_fa ? ordered_json(*at_fa) : ordered_json(nullptr);
            j["frr_at_hours_per_fa"] = at_h ? ordered_json(*at_h) : ordered_json(nullptr);
            return j;
        };
        ordered_json j;
        j["hours_negative_audio"] = hours;
        j["n_positive"] = pos_pairs.size();
        j["n_negative"] = neg_pairs.size();
        j["operating_fa_count"] = cfg.operating_fa_count;
        j["operating_hours_per_fa"] = cfg.operating_hours_per_fa;
        ordered_json ctxs = ordered_json::array();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            ordered_json c = op_json(curves[i]);
            c["context"] = grid[i];
            ctxs.push_back(c);
        }
        j["contexts"] = ctxs;
        j["two_stage"] = op_json(curves.back());
        const auto early_curve = curves[early_idx];
        const auto e = frr_at_fa_count(early_curve, cfg.operating_fa_count);
        const auto t = frr_at_fa_count(curves.back(), cfg.operating_fa_count);
        j["early_only_frr_at_fa_count"] = e ? ordered_json(*e) : ordered_json(nullptr);
        j["two_stage_frr_at_fa_count"] = t ? ordered_json(*t) : ordered_json(nullptr);
        j["relative_frr_reduction"] =
            (e && t && *e > 0.0) ? ordered_json((*e - *t) / *e) : ordered_json(nullptr);
        j["policy"] = ordered_json::parse(policy.to_json());
        const std::string p = cfg.out_dir + "/report.json";
        write_text(p, j.dump(2) + "\n");
        files.push_back(p);
    }
    write_files_manifest(cfg.out_dir, files);

    std::printf("calibrated T_e=%.6f T_l=%.6f; FRR %.4f, defer %.4f, %lld FAs (%.1f h) -> %s [%.1f s]\n",
                th.early_accept, th.late_accept, policy.frr, policy.defer_fraction,
                static_cast<long long>(policy.fa_count), hours, cfg.out_dir.c_str(),
                now_s() - t0);
}

void cmd_simulate_stream(const RunConfig& cfg, const std::string& thresholds_path) {
    const double t0 = now_s();
    const auto manifest = load_manifest(cfg.corpus_dir);
    const auto ckpt = load_checkpoint(cfg.checkpoint);
    const Aggregate agg = parse_aggregate(cfg.aggregate);

    Thresholds th;
    th.early_context = cfg.early_context;
    th.late_context = cfg.late_context;
    if (!thresholds_path.empty()) {
        std::ifstream f(thresholds_path);
        if (!f) throw DataError("cannot open thresholds: " + thresholds_path);
        ordered_json j;
        try {
            j = ordered_json::parse(f);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("bad thresholds json: ") + e.what());
        }
        th.early_accept = j.value("early_accept", th.early_accept);
        th.late_accept = j.value("late_accept", th.late_accept);
        th.early_context = j.value("early_context", th.early_context);
        th.late_context = j.value("late_context", th.late_context);
    }

    std::int64_t candidates = 0, accepts_early = 0, accepts_late = 0, late_evals = 0;
    double hours = 0.0;
    for (const auto& chunk : manifest.timeline) {
        const auto audio = read_wav(cfg.corpus_dir + "/" + chunk.wav);
        hours += audio.duration() / 3600.0;
        const auto cands = stub_first_pass(audio, cfg.stub);
        // early scores in parallel; the policy then defers serially so lazy
        // late evaluation stays observable
        std::vector<double> early(cands.size());
        parallel_for(static_cast<std::int64_t>(cands.size()), [&](std::int64_t k) {
            early[k] = score_segment(ckpt, audio, {cands[k], th.early_context}, agg);
        });
        for (std::size_t k = 0; k < cands.size(); ++k) {
            ++candidates;
            const auto d = decide(
                early[k],
                [&] {
                    ++late_evals;
                    return score_segment(ckpt, audio, {cands[k], th.late_context}, agg);
                },
                th);
            if (d.outcome == Outcome::accept_early) ++accepts_early;
            if (d.outcome == Outcome::accept_late) ++accepts_late;
        }
    }

    const std::int64_t fa = accepts_early + accepts_late;
    std::filesystem::create_directories(cfg.out_dir);
    ordered_json j;
    j["chunks"] = manifest.timeline.size();
    j["hours"] = hours;
    j["candidates"] = candidates;
    j["fa_count"] = fa;
    j["hours_per_fa"] = fa > 0 ? ordered_json(hours / fa) : ordered_json(nullptr);
    j["accepts_early"] = accepts_early;
    j["accepts_late"] = accepts_late;
    j["late_evaluations"] = late_evals;
    j["defer_fraction"] =
        candidates > 0 ? ordered_json(static_cast<double>(late_evals) / candidates)
                       : ordered_json(nullptr);
    write_text(cfg.out_dir + "/stream_report.json", j.dump(2) + "\n");
    write_files_manifest(cfg.out_dir, {"stream_report.json"});

    std::printf("stream: %lld candidates over %.2f h, %lld FAs, %lld late evals -> %s [%.1f s]\n",
                static_cast<long long>(candidates), hours, static_cast<long long>(fa),
                static_cast<long long>(late_evals), cfg.out_dir.c_str(), now_s() - t0);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"progressive voice trigger detection toolkit"};
    app.require_subcommand(1);

    // shared option state
    std::string config_path, corpus_dir, checkpoint, out_dir, resume_path, thresholds_path;
    std::string split = "test", aggregate;
    std::uint64_t seed = 0;
    int threads = 0, max_steps = 0, batch_size = 0, positives = 0, negatives = 0;
    double lr = 0.0, clip_norm = 0.0, lambda = 0.0, early_frr = 0.0, late_frr = 0.0;
    double timeline_hours = 0.0, confusable = 0.0, verbatim = 0.0, test_fraction = 0.0;
    std::int64_t fa_count = 0;
    double hours_per_fa = 0.0;
    std::vector<double> contexts;
    std::vector<std::int64_t> ids;
    bool include_timeline = false, no_timeline = false, late_deferred_only = false;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config_path, "JSON run config (flags override it)");
        c->add_option("--seed", seed, "master seed; module seeds derive from it by label");
        c->add_option("--threads", threads, "worker threads (0 = machine cores)");
    };

    auto* g = app.add_subcommand("gen-data", "synthesize the corpus and negative timeline");
    add_common(g);
    g->add_option("-o,--out", corpus_dir, "corpus output directory")->required();
    g->add_option("--positives", positives, "positive utterance count");
    g->add_option("--negatives", negatives, "negative utterance count");
    g->add_option("--timeline-hours", timeline_hours, "hours of trigger-free timeline");
    g->add_option("--confusable-fraction", confusable, "fraction of near-miss negatives");
    g->add_option("--verbatim-fraction", verbatim,
                  "of the confusables, fraction with an exact trigger prefix");
    g->add_option("--test-fraction", test_fraction, "held-out split fraction");

    auto* t = app.add_subcommand("train", "train the two-head biLSTM");
    add_common(t);
    t->add_option("--corpus", corpus_dir, "corpus directory");
    t->add_option("-o,--out", out_dir, "output directory for checkpoint + log");
    t->add_option("--max-steps", max_steps, "optimizer steps (paper trains to convergence)");
    t->add_option("--lr", lr, "Adam learning rate (paper: 0.0008)");
    t->add_option("--clip-norm", clip_norm, "global gradient norm clip (paper: 20)");
    t->add_option("--batch-size", batch_size, "items per step, half phonetic half discriminative");
    t->add_option("--lambda", lambda, "discriminative loss weight");
    t->add_option("--resume", resume_path, "checkpoint to continue from");

    auto* s = app.add_subcommand("score", "export per-context and early/late scores");
    add_common(s);
    s->add_option("--corpus", corpus_dir, "corpus directory");
    s->add_option("--checkpoint", checkpoint, "trained checkpoint");
    s->add_option("-o,--out", out_dir, "output directory");
    s->add_option("--contexts", contexts, "post-trigger contexts in seconds (paper: 0.3,0.5,1,1.5,2)")
        ->delimiter(',');
    s->add_option("--split", split, "manifest split: test, train, or all");
    s->add_option("--ids", ids, "only these utterance ids")->delimiter(',');
    s->add_option("--aggregate", aggregate, "frame aggregation: max or mean");
    s->add_flag("--include-timeline", include_timeline, "also score stub timeline candidates");

    auto* c = app.add_subcommand("calibrate-evaluate",
                                 "calibrate thresholds, run the policy, emit DET reports");
    add_common(c);
    c->add_option("--corpus", corpus_dir, "corpus directory");
    c->add_option("--checkpoint", checkpoint, "trained checkpoint");
    c->add_option("-o,--out", out_dir, "output directory");
    c->add_option("--contexts", contexts, "post-trigger contexts in seconds")->delimiter(',');
    c->add_option("--early-frr", early_frr, "early-stage deferral target (paper: 0.03)");
    c->add_option("--late-frr", late_frr, "late-stage reject target (paper: 0.01)");
    c->add_option("--fa-count", fa_count, "FA-count operating point for desk-scale reports");
    c->add_option("--hours-per-fa", hours_per_fa, "hours/FA operating point (paper: 100)");
    c->add_option("--aggregate", aggregate, "frame aggregation: max or mean");
    c->add_flag("--late-over-deferred-only", late_deferred_only,
                "calibrate the late threshold on deferred positives only");
    c->add_flag("--no-timeline", no_timeline, "skip stub timeline candidates");

    auto* m = app.add_subcommand("simulate-stream",
                                 "replay the negative timeline through the two-stage policy");
    add_common(m);
    m->add_option("--corpus", corpus_dir, "corpus directory");
    m->add_option("--checkpoint", checkpoint, "trained checkpoint");
    m->add_option("--thresholds", thresholds_path, "thresholds.json from calibrate-evaluate");
    m->add_option("-o,--out", out_dir, "output directory");
    m->add_option("--aggregate", aggregate, "frame aggregation: max or mean");

    try {
        app.parse(argc, argv);

        RunConfig cfg = load_or_default(config_path);
        auto chosen = app.get_subcommands().at(0);
        auto given = [&](const std::string& name) {
            const CLI::Option* o = chosen->get_option_no_throw(name);
            return o != nullptr && o->count() > 0;
        };
        if (given("--seed")) cfg.seed = seed;
        if (given("--threads")) set_max_threads(threads);
        if (given("--corpus")) cfg.corpus_dir = corpus_dir;
        if (given("--checkpoint")) cfg.checkpoint = checkpoint;
        if (given("--out")) {
            if (chosen == g)
                cfg.corpus_dir = corpus_dir;
            else
                cfg.out_dir = out_dir;
        }
        if (given("--contexts")) cfg.contexts = contexts;
        if (given("--aggregate")) cfg.aggregate = aggregate;

        if (chosen == g) {
            if (g->count("--positives")) cfg.gen.n_positive = positives;
            if (g->count("--negatives")) cfg.gen.n_negative = negatives;
            if (g->count("--timeline-hours")) cfg.gen.negative_timeline_hours = timeline_hours;
            if (g->count("--confusable-fraction")) cfg.gen.confusable_fraction = confusable;
            if (g->count("--verbatim-fraction")) cfg.gen.verbatim_fraction = verbatim;
            if (g->count("--test-fraction")) cfg.gen.test_fraction = test_fraction;
            cmd_gen_data(cfg);
        } else if (chosen == t) {
            if (t->count("--max-steps")) cfg.train.max_steps = max_steps;
            if (t->count("--lr")) cfg.train.learning_rate = lr;
            if (t->count("--clip-norm")) cfg.train.clip_norm = clip_norm;
            if (t->count("--batch-size")) cfg.train.batch_size = batch_size;
            if (t->count("--lambda")) cfg.train.lambda_disc = lambda;
            cmd_train(cfg, resume_path);
        } else if (chosen == s) {
            if (split != "test" && split != "train" && split != "all")
                throw DataError("--split must be test, train, or all");
            cmd_score(cfg, split, ids, include_timeline);
        } else if (chosen == c) {
            if (c->count("--early-frr")) cfg.early_frr_target = early_frr;
            if (c->count("--late-frr")) cfg.late_frr_target = late_frr;
            if (c->count("--fa-count")) cfg.operating_fa_count = fa_count;
            if (c->count("--hours-per-fa")) cfg.operating_hours_per_fa = hours_per_fa;
            if (late_deferred_only) cfg.late_over_deferred_only = true;
            cmd_calibrate_evaluate(cfg, no_timeline);
        } else if (chosen == m) {
            cmd_simulate_stream(cfg, thresholds_path);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
