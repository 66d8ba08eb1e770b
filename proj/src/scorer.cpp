#include "pvt/scorer.hpp"

#include <algorithm>
#include <cmath>

#include "pvt/error.hpp"
#include "pvt/frontend.hpp"

namespace pvt {

double score_segment(const Checkpoint& ckpt, const AudioBuffer& audio, const ScoreRequest& req,
                     Aggregate agg) {
    const auto& c = req.candidate;
    if (c.trigger_start < 0.0 || c.trigger_start >= c.trigger_end)
        throw DataError("invalid candidate: start " + std::to_string(c.trigger_start) +
                        ", end " + std::to_string(c.trigger_end));
    if (req.post_context < 0.0) throw DataError("negative post_context");

    const double end = std::min(c.trigger_end + req.post_context, audio.duration());
    const auto& fe = ckpt.frontend;
    const auto n = static_cast<std::int64_t>(std::llround((end - c.trigger_start) * fe.sample_rate));
    if (n < fe.win_length() ||
        1 + (n - fe.win_length()) / fe.hop_length() < fe.stack_size)
        throw DataError("segment too short");

    const AudioBuffer seg = extract_segment(audio, c.trigger_start, end);
    auto x = compute_features(seg, fe).windows.cast<float>();
    normalize_rows(x, ckpt.norm_mean, ckpt.norm_std);
    return score_frames(ckpt, x, agg);
}

double score_frames(const Checkpoint& ckpt, const Mat<float>& x, Aggregate agg) {
    if (x.rows < 1) throw DataError("segment too short");
    const auto post = forward(ckpt.params, x);
    double score = 0.0;
    if (agg == Aggregate::max) {
        for (int t = 0; t < post.discriminative.rows; ++t)
            score = std::max(score, post.discriminative[t][1]);
    } else {
        for (int t = 0; t < post.discriminative.rows; ++t)
            score += post.discriminative[t][1];
        score /= post.discriminative.rows;
    }
    return score;
}

std::pair<double, double> score_pair(const Checkpoint& ckpt, const AudioBuffer& audio,
                                     const TriggerCandidate& candidate, double early_context,
                                     double late_context, Aggregate agg) {
    const double early = score_segment(ckpt, audio, {candidate, early_context}, agg);
    const double late = score_segment(ckpt, audio, {candidate, late_context}, agg);
    return {early, late};
}

std::vector<TriggerCandidate> stub_first_pass(const AudioBuffer& audio, const StubConfig& cfg) {
    const int frame = std::max(1, static_cast<int>(cfg.frame_s * audio.sample_rate + 0.5));
    const auto n_frames = static_cast<std::int64_t>(audio.samples.size()) / frame;

    // active regions in frame units
    struct Region {
        std::int64_t begin, end;
    };
    std::vector<Region> regions;
    const double thr_sq = cfg.energy_threshold * cfg.energy_threshold;
    const std::int64_t gap_frames = static_cast<std::int64_t>(cfg.min_gap_s / cfg.frame_s + 0.5);
    for (std::int64_t f = 0; f < n_frames; ++f) {
        double acc = 0.0;
        const std::int16_t* s = audio.samples.data() + f * frame;
        for (int i = 0; i < frame; ++i) {
            const double x = s[i] / 32768.0;
            acc += x * x;
        }
        if (acc / frame < thr_sq) continue;
        if (!regions.empty() && f - regions.back().end < gap_frames)
            regions.back().end = f + 1;
        else
            regions.push_back({f, f + 1});
    }

    std::vector<TriggerCandidate> out;
    const double duration = audio.duration();
    for (const auto& r : regions) {
        const double start = r.begin * cfg.frame_s;
        const double burst = (r.end - r.begin) * cfg.frame_s;
        if (burst < cfg.min_burst_s) continue;
        TriggerCandidate c;
        c.trigger_start = start;
        c.trigger_end = std::min(start + cfg.nominal_trigger_s, duration);
        c.source = CandidateSource::stub_detector;
        if (c.trigger_end > c.trigger_start) out.push_back(c);
    }
    // bound the overlap between consecutive candidates
    for (std::size_t i = 0; i + 1 < out.size(); ++i)
        out[i].trigger_end =
            std::min(out[i].trigger_end, out[i + 1].trigger_start + cfg.max_overlap_s);
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const TriggerCandidate& c) {
                                 return c.trigger_end <= c.trigger_start;
                             }),
              out.end());
    return out;
}

}  // namespace pvt
