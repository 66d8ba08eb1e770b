#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pvt/checkpoint.hpp"
#include "pvt/corpus.hpp"
#include "pvt/frontend.hpp"
#include "pvt/losses.hpp"
#include "pvt/model.hpp"

namespace pvt {

struct TrainConfig {
    double learning_rate = 0.0008;
    double clip_norm = 20.0;
    int batch_size = 16;  // half phonetic items, half discriminative
    int max_steps = 1200;
    std::uint64_t seed = 1;
    double lambda_disc = 1.0;
    // post-trigger view lengths; the whole utterance is always added
    std::vector<double> view_offsets = {0.0, 0.5, 1.0, 1.5, 2.0};
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
};

// One truncation of an utterance: the first `frames` rows of its
// candidate-anchored features (the grid starts at candidate_start, exactly
// where the scorer anchors candidate segments).
struct ViewSpec {
    double end_s = 0.0;  // absolute end within the utterance
    int frames = 0;
    bool is_whole = false;
    bool phonetic_ok = false;  // long enough for a CTC alignment
    LabelSequence labels;
};

// Positives: offsets past trigger_end, clipped at the utterance end
// (over-long views collapse to the whole), duplicates removed. Negatives:
// the whole utterance only. Labels = phones whose midpoint lies in view.
std::vector<ViewSpec> make_views(const ManifestEntry& entry, const FrontendConfig& fe,
                                 const std::vector<double>& offsets, int blank_index);

// In-place Adam with global-norm clipping applied BEFORE the update.
// Returns the pre-clip gradient norm. t is 1-based.
double adam_step(NetParams<float>& params, const NetParams<float>& grads, NetParams<float>& m,
                 NetParams<float>& v, std::uint64_t t, const TrainConfig& cfg);

struct TrainResult {
    Checkpoint ckpt;
    int steps_run = 0;
    double final_phonetic_loss = 0.0;
    double final_disc_loss = 0.0;
    double holdout_disc_accuracy = 0.0;
};

// Trains on the manifest's train split; log CSV (step, phonetic_loss,
// disc_loss, grad_norm_preclip) goes to log_path when non-empty. Resume
// continues bit-exactly: the data stream is a pure function of (seed, step).
TrainResult train(const CorpusManifest& manifest, const std::string& corpus_dir,
                  const ModelConfig& mcfg, const FrontendConfig& fecfg, const TrainConfig& tcfg,
                  const std::string& log_path, const Checkpoint* resume = nullptr);

}  // namespace pvt
