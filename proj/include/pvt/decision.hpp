#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pvt {

struct Thresholds {
    double early_accept = 1.0;
    double late_accept = 1.0;
    double early_context = 0.3;
    double late_context = 2.0;
};

enum class Outcome { accept_early, accept_late, reject };

struct ScoredDecision {
    std::int64_t utterance_id = -1;
    double early = 0.0;
    std::optional<double> late;
    Outcome outcome = Outcome::reject;
    double latency = 0.0;
};

// One labeled candidate with both scores materialized (offline evaluation).
struct PairScore {
    std::int64_t utterance_id = -1;
    bool positive = false;
    double early = 0.0;
    double late = 0.0;
};

// Accept immediately when early >= T_e; the late score is only computed
// (supplier invoked) on deferral. Comparisons are >= so ties accept.
ScoredDecision decide(double early, const std::function<double()>& late_supplier,
                      const Thresholds& th);

// Largest threshold theta from {scores} + {0} + {1 + eps} such that
// fraction(scores < theta) <= target_frr.
double calibrate_threshold(const std::vector<double>& true_scores, double target_frr);

// T_e from positive early scores at early_frr_target; T_l from positive late
// scores at late_frr_target. late_over_deferred_only restricts the late
// calibration to positives the early stage deferred.
Thresholds calibrate_two_stage(const std::vector<PairScore>& pairs,
                               double early_frr_target = 0.03, double late_frr_target = 0.01,
                               bool late_over_deferred_only = false);

struct PolicyReport {
    double frr = 0.0;             // positives rejected by both stages
    std::int64_t fa_count = 0;    // negatives accepted by either stage
    double hours_per_fa = 0.0;    // +inf when fa_count == 0
    double defer_fraction = 0.0;  // positives with early < T_e
    std::optional<double> mean_latency_s;  // absent when nothing accepted
    std::int64_t n_early = 0;     // positives accepted at the early stage
    std::int64_t n_late = 0;      // positives accepted after deferral
    double early_context_s = 0.3;  // carried for reporting, not serialized
    double late_context_s = 2.0;

    std::string to_json() const;
};

// Applies the policy to every candidate; latency statistics cover accepted
// positives only, matching the figure-of-merit.
PolicyReport run_policy(const std::vector<PairScore>& pairs, double timeline_hours,
                        const Thresholds& th);

}  // namespace pvt
