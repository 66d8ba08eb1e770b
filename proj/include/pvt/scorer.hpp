#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pvt/audio.hpp"
#include "pvt/checkpoint.hpp"

namespace pvt {

enum class CandidateSource { annotation, stub_detector };

// A purported trigger occurrence inside one audio stream.
struct TriggerCandidate {
    std::int64_t utterance_id = -1;
    double trigger_start = 0.0;
    double trigger_end = 0.0;
    CandidateSource source = CandidateSource::annotation;
};

struct ScoreRequest {
    TriggerCandidate candidate;
    double post_context = 0.3;  // seconds of audio after trigger_end
};

enum class Aggregate { max, mean };

// Positive-class posterior aggregated over the segment
// [trigger_start, trigger_end + post_context], clipped to the audio end.
// Error "segment too short" when the clip yields no stacked frame.
double score_segment(const Checkpoint& ckpt, const AudioBuffer& audio, const ScoreRequest& req,
                     Aggregate agg = Aggregate::max);

// Same score from already normalized feature rows. Because prefix audio
// yields prefix rows, batch scorers featurize the longest segment once and
// call this on row prefixes; results are bit-identical to score_segment.
double score_frames(const Checkpoint& ckpt, const Mat<float>& x, Aggregate agg = Aggregate::max);

// Early (0.3 s) and late (2.0 s) scores, each recomputed from scratch.
std::pair<double, double> score_pair(const Checkpoint& ckpt, const AudioBuffer& audio,
                                     const TriggerCandidate& candidate,
                                     double early_context = 0.3, double late_context = 2.0,
                                     Aggregate agg = Aggregate::max);

// Energy segmenter standing in for a first-pass detector on continuous
// audio. Frame RMS above energy_threshold marks activity; active runs
// closer than min_gap_s merge; runs shorter than min_burst_s drop.
struct StubConfig {
    double frame_s = 0.01;
    double energy_threshold = 0.004;  // just above the -50 dBFS floor
    double min_gap_s = 0.5;
    double min_burst_s = 0.15;
    double nominal_trigger_s = 0.75;
    double max_overlap_s = 0.0;
};

std::vector<TriggerCandidate> stub_first_pass(const AudioBuffer& audio, const StubConfig& cfg);

}  // namespace pvt
