#include "pvt/decision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pvt/error.hpp"

#include <json.hpp>

namespace pvt {

ScoredDecision decide(double early, const std::function<double()>& late_supplier,
                      const Thresholds& th) {
    ScoredDecision d;
    d.early = early;
    if (early >= th.early_accept) {
        d.outcome = Outcome::accept_early;
        d.latency = th.early_context;
        return d;
    }
    d.late = late_supplier();
    d.latency = th.late_context;
    d.outcome = *d.late >= th.late_accept ? Outcome::accept_late : Outcome::reject;
    return d;
}

double calibrate_threshold(const std::vector<double>& true_scores, double target_frr) {
    if (true_scores.empty()) throw DataError("calibrate_threshold: empty score list");
    if (target_frr < 0.0 || target_frr >= 1.0)
        throw DataError("calibrate_threshold: target_frr out of range");

    std::vector<double> grid = true_scores;
    grid.push_back(0.0);
    grid.push_back(1.0 + 1e-9);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    const double n = static_cast<double>(true_scores.size());
    double best = 0.0;
    for (double theta : grid) {
        const auto below = std::count_if(true_scores.begin(), true_scores.end(),
                                         [theta](double s) { return s < theta; });
        if (below / n <= target_frr) best = std::max(best, theta);
    }
    return best;
}

Thresholds calibrate_two_stage(const std::vector<PairScore>& pairs, double early_frr_target,
                               double late_frr_target, bool late_over_deferred_only) {
    std::vector<double> early, late;
    for (const auto& p : pairs) {
        if (!p.positive) continue;
        early.push_back(p.early);
        late.push_back(p.late);
    }
    if (early.empty()) throw DataError("calibrate_two_stage: no positive pairs");

    Thresholds th;
    th.early_accept = calibrate_threshold(early, early_frr_target);
    if (late_over_deferred_only) {
        std::vector<double> deferred;
        for (const auto& p : pairs)
            if (p.positive && p.early < th.early_accept) deferred.push_back(p.late);
        th.late_accept =
            deferred.empty() ? 0.0 : calibrate_threshold(deferred, late_frr_target);
    } else {
        th.late_accept = calibrate_threshold(late, late_frr_target);
    }
    return th;
}

std::string PolicyReport::to_json() const {
    nlohmann::ordered_json j;
    j["frr"] = frr;
    j["fa_count"] = fa_count;
    if (std::isfinite(hours_per_fa))
        j["hours_per_fa"] = hours_per_fa;
    else
        j["hours_per_fa"] = nullptr;
    j["defer_fraction"] = defer_fraction;
    if (mean_latency_s)
        j["mean_latency_s"] = *mean_latency_s;
    else
        j["mean_latency_s"] = nullptr;
    j["n_early"] = n_early;
    j["n_late"] = n_late;
    return j.dump(2);
}

PolicyReport run_policy(const std::vector<PairScore>& pairs, double timeline_hours,
                        const Thresholds& th) {
    PolicyReport r;
    r.early_context_s = th.early_context;
    r.late_context_s = th.late_context;
    std::int64_t n_pos = 0, rejected_pos = 0, deferred_pos = 0;
    for (const auto& p : pairs) {
        const auto d = decide(p.early, [&p] { return p.late; }, th);
        if (p.positive) {
            ++n_pos;
            if (d.outcome == Outcome::accept_early) ++r.n_early;
            if (d.outcome == Outcome::accept_late) ++r.n_late;
            if (d.outcome == Outcome::reject) ++rejected_pos;
            if (d.outcome != Outcome::accept_early) ++deferred_pos;
        } else if (d.outcome != Outcome::reject) {
            ++r.fa_count;
        }
    }
    if (n_pos > 0) {
        r.frr = static_cast<double>(rejected_pos) / n_pos;
        r.defer_fraction = static_cast<double>(deferred_pos) / n_pos;
    }
    r.hours_per_fa = r.fa_count > 0 ? timeline_hours / r.fa_count
                                    : std::numeric_limits<double>::infinity();
    const std::int64_t accepted = r.n_early + r.n_late;
    if (accepted > 0)
        r.mean_latency_s =
            (r.n_early * th.early_context + r.n_late * th.late_context) / accepted;
    return r;
}

}  // namespace pvt
