#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pvt/decision.hpp"

namespace pvt {

struct DetPoint {
    double threshold = 0.0;
    double frr = 0.0;
    std::int64_t fa_count = 0;
    double hours_per_fa = 0.0;  // +inf when fa_count == 0
};

// Sweep over the observed scores. Thresholds strictly increase, frr is
// non-decreasing and fa_count non-increasing along the sweep.
struct DetCurve {
    std::vector<DetPoint> points;
    std::string context_label;  // e.g. "0.3" or "two-stage"
};

// frr(t) = fraction(pos < t), fa(t) = count(neg >= t), one point per
// distinct observed score.
DetCurve det_curve(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores,
                   double timeline_hours, const std::string& label = "");

// FRR at the smallest threshold with hours/FA >= target; no interpolation.
// Empty when even the top threshold false-alarms too often.
std::optional<double> frr_at_operating_point(const DetCurve& curve,
                                             double hours_per_fa_target = 100.0);

// Same step convention against an FA-count budget (desk-scale timelines are
// too short for the 100 h/FA convention to bite).
std::optional<double> frr_at_fa_count(const DetCurve& curve, std::int64_t max_fa);

// Late-threshold sweep with the early threshold pinned at t_early: each
// candidate contributes its early score when the early stage accepts it and
// its late score otherwise. t_early = 0 degenerates to the early-only curve.
DetCurve two_stage_det_at(const std::vector<PairScore>& pos_pairs,
                          const std::vector<PairScore>& neg_pairs, double timeline_hours,
                          double t_early);

// Pins t_early by calibrating the deferral target on the positive early
// scores, then sweeps.
DetCurve two_stage_det(const std::vector<PairScore>& pos_pairs,
                       const std::vector<PairScore>& neg_pairs, double timeline_hours,
                       double early_frr_target = 0.03);

// Writes det_<label>.csv per curve, scatter.csv over the pairs, and (when a
// policy report is supplied) latency.csv + policy.json, plus SVG renderings.
// Byte-deterministic; returns the paths written.
std::vector<std::string> emit_reports(const std::vector<DetCurve>& curves,
                                      const std::vector<PairScore>& pairs,
                                      const PolicyReport* policy, const std::string& out_dir);

}  // namespace pvt
