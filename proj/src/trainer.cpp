#include "pvt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "pvt/error.hpp"
#include "pvt/parallel.hpp"
#include "pvt/rng.hpp"

namespace pvt {
namespace {

// Number of stacked feature rows that fit entirely inside [0, end_s].
int frames_for_prefix(const FrontendConfig& fe, double end_s) {
    return stacked_frames_in(fe, static_cast<std::int64_t>(std::llround(end_s * fe.sample_rate)));
}

int count_repeats(const std::vector<int>& symbols) {
    int r = 0;
    for (std::size_t i = 1; i < symbols.size(); ++i)
        if (symbols[i] == symbols[i - 1]) ++r;
    return r;
}

struct Item {
    int entry = 0;  // index into the train entry list
    int view = 0;   // index into that entry's views
};

// Deterministic Fisher-Yates.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
        std::swap(v[i], v[rng.uniform_int(0, i)]);
}

struct BatchGrads {
    NetParams<float> grads;
    double phon_loss = 0.0, disc_loss = 0.0;
};

}  // namespace

std::vector<ViewSpec> make_views(const ManifestEntry& entry, const FrontendConfig& fe,
                                 const std::vector<double>& offsets, int blank_index) {
    const double duration = entry.duration_s;
    // Views are anchored where the scorer anchors its segments, so training
    // inputs and candidate segments share one feature grid.
    const double anchor = std::clamp(entry.candidate_start, 0.0, duration);
    std::vector<double> ends;
    if (entry.positive) {
        if (entry.trigger_end <= 0.0)
            throw DataError("make_views: positive entry " + std::to_string(entry.id) +
                            " missing trigger_end");
        for (double off : offsets) ends.push_back(std::min(entry.trigger_end + off, duration));
    }
    ends.push_back(duration);  // the whole utterance
    std::sort(ends.begin(), ends.end());

    std::vector<ViewSpec> views;
    for (double end : ends) {
        const int frames = frames_for_prefix(fe, end - anchor);
        if (frames < 1) continue;
        if (!views.empty() && views.back().frames == frames) continue;  // dedupe
        ViewSpec v;
        v.end_s = end;
        v.frames = frames;
        v.is_whole = end >= duration;
        v.labels.blank_index = blank_index;
        for (std::size_t i = 0; i < entry.phones.size(); ++i)
            if (0.5 * (entry.phone_starts[i] + entry.phone_ends[i]) <= end + 1e-9)
                v.labels.symbols.push_back(entry.phones[i]);
        const int min_t = static_cast<int>(v.labels.symbols.size()) +
                          count_repeats(v.labels.symbols);
        v.phonetic_ok = !v.labels.symbols.empty() && frames >= min_t;
        views.push_back(std::move(v));
    }
    if (views.empty())
        throw DataError("make_views: utterance " + std::to_string(entry.id) +
                        " yields no usable view");
    return views;
}

double adam_step(NetParams<float>& params, const NetParams<float>& grads, NetParams<float>& m,
                 NetParams<float>& v, std::uint64_t t, const TrainConfig& cfg) {
    // global norm in a fixed traversal order, with finiteness check
    double sq = 0.0;
    grads.visit([&](const std::string& name, const Mat<float>& g) {
        double local = 0.0;
        for (float x : g.v) local += static_cast<double>(x) * x;
        if (!std::isfinite(local))
            throw NumericError("non-finite gradient in tensor " + name);
        sq += local;
    });
    const double norm = std::sqrt(sq);
    const float scale = norm > cfg.clip_norm ? static_cast<float>(cfg.clip_norm / norm) : 1.0f;

    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    const float b1 = static_cast<float>(cfg.beta1), b2 = static_cast<float>(cfg.beta2);
    const float lr = static_cast<float>(cfg.learning_rate);
    const float eps = static_cast<float>(cfg.adam_eps);

    std::vector<Mat<float>*> ps, ms, vs;
    params.visit([&](const std::string&, Mat<float>& x) { ps.push_back(&x); });
    m.visit([&](const std::string&, Mat<float>& x) { ms.push_back(&x); });
    v.visit([&](const std::string&, Mat<float>& x) { vs.push_back(&x); });
    std::vector<const Mat<float>*> gs;
    grads.visit([&](const std::string&, const Mat<float>& x) { gs.push_back(&x); });

    for (std::size_t i = 0; i < ps.size(); ++i) {
        float* p = ps[i]->data();
        float* mm = ms[i]->data();
        float* vv = vs[i]->data();
        const float* g = gs[i]->data();
        const std::size_t n = ps[i]->size();
        for (std::size_t k = 0; k < n; ++k) {
            const float gk = g[k] * scale;
            mm[k] = b1 * mm[k] + (1.0f - b1) * gk;
            vv[k] = b2 * vv[k] + (1.0f - b2) * gk * gk;
            const float mhat = mm[k] / static_cast<float>(bc1);
            const float vhat = vv[k] / static_cast<float>(bc2);
            p[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
    return norm;
}

TrainResult train(const CorpusManifest& manifest, const std::string& corpus_dir,
                  const ModelConfig& mcfg, const FrontendConfig& fecfg, const TrainConfig& tcfg,
                  const std::string& log_path, const Checkpoint* resume) {
    const int blank = mcfg.phonetic_classes - 1;

    std::vector<const ManifestEntry*> train_entries, test_entries;
    for (const auto& e : manifest.entries)
        (e.split == "train" ? train_entries : test_entries).push_back(&e);
    if (train_entries.empty()) throw DataError("train: dataset empty");

    // Candidate-anchored features per train entry; views slice row prefixes
    // of the same grid the scorer uses for candidate segments.
    const int n_train = static_cast<int>(train_entries.size());
    std::vector<Mat<float>> feats(n_train);
    std::vector<std::vector<ViewSpec>> views(n_train);
    parallel_for(n_train, [&](std::int64_t i) {
        const auto& e = *train_entries[i];
        const auto audio = read_wav(corpus_dir + "/" + e.wav);
        const double anchor = std::clamp(e.candidate_start, 0.0, e.duration_s);
        const auto seg = extract_segment(audio, anchor, audio.duration());
        feats[i] = compute_features(seg, fecfg).windows.cast<float>();
        views[i] = make_views(e, fecfg, tcfg.view_offsets, blank);
    });

    // Per-dim normalization stats over the train split, fixed order.
    Mat<double> mean(1, fecfg.feature_dim()), stdev(1, fecfg.feature_dim());
    {
        std::vector<double> s1(fecfg.feature_dim(), 0.0), s2(fecfg.feature_dim(), 0.0);
        std::int64_t rows = 0;
        for (int i = 0; i < n_train; ++i) {
            for (int t = 0; t < feats[i].rows; ++t) {
                const float* row = feats[i][t];
                for (int d = 0; d < feats[i].cols; ++d) {
                    s1[d] += row[d];
                    s2[d] += static_cast<double>(row[d]) * row[d];
                }
            }
            rows += feats[i].rows;
        }
        for (int d = 0; d < fecfg.feature_dim(); ++d) {
            mean[0][d] = s1[d] / rows;
            stdev[0][d] = std::max(std::sqrt(std::max(0.0, s2[d] / rows - mean[0][d] * mean[0][d])),
                                   1e-3);
        }
    }
    parallel_for(n_train, [&](std::int64_t i) { normalize_rows(feats[i], mean, stdev); });

    // Epoch item pools. Phonetic: every alignable view. Discriminative: one
    // view per positive per epoch (chosen below) plus each negative's whole.
    std::vector<Item> phon_pool;
    std::vector<int> pos_idx, neg_idx;
    for (int i = 0; i < n_train; ++i) {
        for (int v = 0; v < static_cast<int>(views[i].size()); ++v)
            if (views[i][v].phonetic_ok) phon_pool.push_back({i, v});
        (train_entries[i]->positive ? pos_idx : neg_idx).push_back(i);
    }
    if (phon_pool.empty()) throw DataError("train: no alignable phonetic views");
    const std::size_t disc_len = pos_idx.size() + neg_idx.size();

    // Stream item at global position p, regenerating the epoch order on
    // demand; a pure function of (seed, p) so resume replays exactly.
    std::vector<Item> phon_epoch, disc_epoch;
    std::uint64_t phon_epoch_id = ~0ull, disc_epoch_id = ~0ull;
    auto phon_at = [&](std::uint64_t p) {
        const std::uint64_t epoch = p / phon_pool.size();
        if (epoch != phon_epoch_id) {
            phon_epoch = phon_pool;
            Rng rng(derive_seed(tcfg.seed, "phon-epoch", epoch));
            shuffle(phon_epoch, rng);
            phon_epoch_id = epoch;
        }
        return phon_epoch[p % phon_pool.size()];
    };
    auto disc_at = [&](std::uint64_t p) {
        const std::uint64_t epoch = p / disc_len;
        if (epoch != disc_epoch_id) {
            disc_epoch.clear();
            Rng rng(derive_seed(tcfg.seed, "disc-epoch", epoch));
            for (int i : pos_idx)
                disc_epoch.push_back({i, rng.uniform_int(0, static_cast<int>(views[i].size()) - 1)});
            for (int i : neg_idx)
                disc_epoch.push_back({i, static_cast<int>(views[i].size()) - 1});
            shuffle(disc_epoch, rng);
            disc_epoch_id = epoch;
        }
        return disc_epoch[p % disc_len];
    };

    // Model and optimizer state.
    Checkpoint ckpt;
    if (resume) {
        ckpt = *resume;
        if (!ckpt.has_adam) {
            ckpt.adam_m = NetParams<float>::zeros(mcfg);
            ckpt.adam_v = NetParams<float>::zeros(mcfg);
            ckpt.has_adam = true;
        }
    } else {
        ckpt.model = mcfg;
        ckpt.frontend = fecfg;
        ckpt.params = init_params(mcfg, derive_seed(tcfg.seed, "init"));
        ckpt.adam_m = NetParams<float>::zeros(mcfg);
        ckpt.adam_v = NetParams<float>::zeros(mcfg);
        ckpt.has_adam = true;
        ckpt.step = 0;
    }
    ckpt.norm_mean = mean;
    ckpt.norm_std = stdev;

    std::FILE* log = nullptr;
    if (!log_path.empty()) {
        log = std::fopen(log_path.c_str(), ckpt.step == 0 ? "w" : "a");
        if (!log) throw DataError("cannot write training log: " + log_path);
        if (ckpt.step == 0) std::fprintf(log, "step,phonetic_loss,disc_loss,grad_norm_preclip\n");
    }

    const int half = std::max(1, tcfg.batch_size / 2);
    TrainResult result;

    for (std::uint64_t step = ckpt.step; step < static_cast<std::uint64_t>(tcfg.max_steps);
         ++step) {
        struct WorkItem {
            Item item;
            bool phonetic;
        };
        std::vector<WorkItem> work;
        for (int k = 0; k < half; ++k) work.push_back({phon_at(step * half + k), true});
        for (int k = 0; k < half; ++k) work.push_back({disc_at(step * half + k), false});

        std::vector<BatchGrads> partial(work.size());
        parallel_for(static_cast<std::int64_t>(work.size()), [&](std::int64_t w) {
            const auto& [item, phonetic] = work[w];
            const auto& view = views[item.entry][item.view];
            const Mat<float>& whole = feats[item.entry];
            Mat<float> x(view.frames, whole.cols);
            std::copy(whole[0], whole[0] + static_cast<std::size_t>(view.frames) * whole.cols,
                      x[0]);
            ForwardCache<float> cache;
            const auto post = forward(ckpt.params, x, &cache);
            Mat<double> dlp(view.frames, mcfg.phonetic_classes), dld(view.frames, 2);
            auto& out = partial[w];
            if (phonetic) {
                auto r = ctc_loss(post.log_phonetic, view.labels);
                out.phon_loss = r.loss / half;
                for (auto& g : r.dlogits.v) g /= half;
                dlp = std::move(r.dlogits);
            } else {
                auto r = train_entries[item.entry]->positive
                             ? discriminative_positive_loss(post.log_discriminative)
                             : discriminative_negative_loss(post.log_discriminative);
                out.disc_loss = r.loss / half;
                for (auto& g : r.dlogits.v) g *= tcfg.lambda_disc / half;
                dld = std::move(r.dlogits);
            }
            out.grads = backward(ckpt.params, cache, dlp, dld);
        });

        // fixed-order reduction keeps results identical for any thread count
        auto total = NetParams<float>::zeros(mcfg);
        double phon_loss = 0.0, disc_loss = 0.0;
        for (const auto& p : partial) {
            phon_loss += p.phon_loss;
            disc_loss += p.disc_loss;
            std::vector<const Mat<float>*> src;
            p.grads.visit([&](const std::string&, const Mat<float>& g) { src.push_back(&g); });
            std::size_t i = 0;
            total.visit([&](const std::string&, Mat<float>& g) {
                const Mat<float>& s = *src[i++];
                for (std::size_t k = 0; k < g.v.size(); ++k) g.v[k] += s.v[k];
            });
        }
        if (!std::isfinite(phon_loss) || !std::isfinite(disc_loss))
            throw NumericError("train: loss diverged (NaN) at step " + std::to_string(step + 1) +
                               "; last good step " + std::to_string(step));

        const double norm =
            adam_step(ckpt.params, total, ckpt.adam_m, ckpt.adam_v, step + 1, tcfg);
        ckpt.step = step + 1;
        result.final_phonetic_loss = phon_loss;
        result.final_disc_loss = disc_loss;
        if (log)
            std::fprintf(log, "%llu,%.9g,%.9g,%.9g\n",
                         static_cast<unsigned long long>(ckpt.step), phon_loss, disc_loss, norm);
    }
    if (log) std::fclose(log);

    // Held-out discriminative accuracy: max positive posterior over the
    // full candidate-anchored segment against 0.5.
    if (!test_entries.empty()) {
        const int n_test = static_cast<int>(test_entries.size());
        std::vector<int> correct(n_test, 0);
        parallel_for(n_test, [&](std::int64_t i) {
            const auto& e = *test_entries[i];
            const auto audio = read_wav(corpus_dir + "/" + e.wav);
            const double anchor = std::clamp(e.candidate_start, 0.0, e.duration_s);
            const auto seg = extract_segment(audio, anchor, audio.duration());
            auto x = compute_features(seg, fecfg).windows.cast<float>();
            normalize_rows(x, mean, stdev);
            const auto post = forward(ckpt.params, x);
            double score = 0.0;
            for (int t = 0; t < post.discriminative.rows; ++t)
                score = std::max(score, post.discriminative[t][1]);
            correct[i] = (score >= 0.5) == e.positive ? 1 : 0;
        });
        result.holdout_disc_accuracy =
            std::accumulate(correct.begin(), correct.end(), 0) / static_cast<double>(n_test);
    }

    const int start = resume ? static_cast<int>(resume->step) : 0;
    result.ckpt = std::move(ckpt);
    result.steps_run = std::max(0, tcfg.max_steps - start);
    return result;
}

}  // namespace pvt
