#include <doctest.h>

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "pvt/decision.hpp"
#include "pvt/error.hpp"
#include "pvt/rng.hpp"

using namespace pvt;

namespace {

Thresholds thr(double te, double tl) {
    Thresholds t;
    t.early_accept = te;
    t.late_accept = tl;
    return t;
}

PairScore pair(bool positive, double early, double late) {
    PairScore p;
    p.positive = positive;
    p.early = early;
    p.late = late;
    return p;
}

std::vector<PairScore> random_pairs(int n_pos, int n_neg, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<PairScore> out;
    for (int i = 0; i < n_pos; ++i)
        out.push_back(pair(true, 0.3 + 0.7 * rng.uniform(), 0.4 + 0.6 * rng.uniform()));
    for (int i = 0; i < n_neg; ++i)
        out.push_back(pair(false, 0.6 * rng.uniform(), 0.5 * rng.uniform()));
    return out;
}

}  // namespace

TEST_CASE("decide accepts early without touching the late path") {
    int late_calls = 0;
    const auto supplier = [&]() {
        ++late_calls;
        return 0.99;
    };

    const auto a = decide(0.8, supplier, thr(0.5, 0.9));
    CHECK(a.outcome == Outcome::accept_early);
    CHECK(a.latency == doctest::Approx(0.3));
    CHECK_FALSE(a.late.has_value());
    CHECK(late_calls == 0);

    const auto b = decide(0.4, supplier, thr(0.5, 0.9));
    CHECK(b.outcome == Outcome::accept_late);
    CHECK(b.latency == doctest::Approx(2.0));
    CHECK(b.late.has_value());
    CHECK(late_calls == 1);

    const auto c = decide(0.4, [] { return 0.2; }, thr(0.5, 0.9));
    CHECK(c.outcome == Outcome::reject);
}

TEST_CASE("decide treats threshold ties as accepts") {
    const auto a = decide(0.5, [] { return 0.0; }, thr(0.5, 0.9));
    CHECK(a.outcome == Outcome::accept_early);
    const auto b = decide(0.4, [] { return 0.9; }, thr(0.5, 0.9));
    CHECK(b.outcome == Outcome::accept_late);
}

TEST_CASE("decide propagates supplier failures") {
    const auto boom = []() -> double { throw DataError("late scorer unavailable"); };
    CHECK_THROWS_AS(decide(0.1, boom, thr(0.5, 0.9)), DataError);
    CHECK_NOTHROW(decide(0.9, boom, thr(0.5, 0.9)));  // never invoked
}

TEST_CASE("calibrate_threshold picks the largest feasible cut") {
    // ten positives 0.1..1.0; 30% may fall below the threshold
    const std::vector<double> scores = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    CHECK(calibrate_threshold(scores, 0.30) == doctest::Approx(0.4));
    CHECK(calibrate_threshold(scores, 0.05) == doctest::Approx(0.1));
    // zero tolerance: nothing below, so the minimum score
    CHECK(calibrate_threshold(scores, 0.0) == doctest::Approx(0.1));
    // near-full tolerance: everything below the top score may miss
    CHECK(calibrate_threshold(scores, 0.99) == doctest::Approx(1.0));
}

TEST_CASE("calibrate_threshold handles ties") {
    const std::vector<double> same(8, 0.7);
    CHECK(calibrate_threshold(same, 0.5) == doctest::Approx(0.7));
    CHECK(calibrate_threshold(same, 0.0) == doctest::Approx(0.7));
}

TEST_CASE("calibrate_threshold validates inputs") {
    CHECK_THROWS_WITH_AS(calibrate_threshold({}, 0.1), doctest::Contains("empty"), DataError);
    CHECK_THROWS_AS(calibrate_threshold({0.5}, -0.1), DataError);
    CHECK_THROWS_AS(calibrate_threshold({0.5}, 1.0), DataError);  // a 100% miss target is a bug
    CHECK_THROWS_AS(calibrate_threshold({0.5}, 1.5), DataError);
}

TEST_CASE("calibrated FRR never exceeds its target") {
    Rng rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> scores;
        const int n = 20 + static_cast<int>(80 * rng.uniform());
        for (int i = 0; i < n; ++i) scores.push_back(rng.uniform());
        const double target = 0.01 + 0.2 * rng.uniform();
        const double t = calibrate_threshold(scores, target);
        int below = 0;
        for (double s : scores)
            if (s < t) ++below;
        CHECK(static_cast<double>(below) / n <= target);
    }
}

TEST_CASE("calibrate_two_stage meets both targets on the calibration set") {
    const auto pairs = random_pairs(200, 100, 34);
    const auto th = calibrate_two_stage(pairs, 0.03, 0.01);
    int pos = 0, early_miss = 0, late_miss = 0;
    for (const auto& p : pairs) {
        if (!p.positive) continue;
        ++pos;
        if (p.early < th.early_accept) ++early_miss;
        if (p.late < th.late_accept) ++late_miss;
    }
    CHECK(static_cast<double>(early_miss) / pos <= 0.03);
    CHECK(static_cast<double>(late_miss) / pos <= 0.01);
}

TEST_CASE("calibrate_two_stage deferred-only flag calibrates over deferrals") {
    // deferred positives (early < T_e) have distinctly lower late scores, so
    // the deferred-only threshold must sit below the all-positives one
    std::vector<PairScore> pairs;
    for (int i = 0; i < 60; ++i) pairs.push_back(pair(true, 0.9, 0.95));
    for (int i = 0; i < 6; ++i) pairs.push_back(pair(true, 0.1, 0.3 + 0.01 * i));
    // all positives: 3 of 66 may fall below -> T_l = 0.33
    // deferred only: 0 of 6 may fall below  -> T_l = 0.30
    const auto all = calibrate_two_stage(pairs, 0.10, 0.05, false);
    const auto deferred = calibrate_two_stage(pairs, 0.10, 0.05, true);
    CHECK(all.early_accept == doctest::Approx(0.9));
    CHECK(deferred.early_accept == all.early_accept);
    CHECK(all.late_accept == doctest::Approx(0.33));
    CHECK(deferred.late_accept == doctest::Approx(0.30));
}

TEST_CASE("calibrate_two_stage needs positives") {
    std::vector<PairScore> negs = {pair(false, 0.1, 0.2)};
    CHECK_THROWS_WITH_AS(calibrate_two_stage(negs, 0.03, 0.01),
                         doctest::Contains("no positive"), DataError);
}

TEST_CASE("run_policy reproduces the latency identity") {
    // 97% accepted early, 3% late: mean latency 0.97*0.3 + 0.03*2.0 = 0.351
    std::vector<PairScore> pairs;
    for (int i = 0; i < 97; ++i) pairs.push_back(pair(true, 0.9, 0.9));
    for (int i = 0; i < 3; ++i) pairs.push_back(pair(true, 0.1, 0.9));
    const auto rep = run_policy(pairs, 10.0, thr(0.5, 0.5));
    CHECK(rep.frr == 0.0);
    CHECK(rep.n_early == 97);
    CHECK(rep.n_late == 3);
    CHECK(rep.defer_fraction == doctest::Approx(0.03));
    REQUIRE(rep.mean_latency_s.has_value());
    CHECK(*rep.mean_latency_s == doctest::Approx(0.351).epsilon(1e-12));
    CHECK(*rep.mean_latency_s == doctest::Approx(1.17 * 0.3).epsilon(1e-12));
}

TEST_CASE("run_policy counts false accepts per hour") {
    std::vector<PairScore> pairs;
    for (int i = 0; i < 4; ++i) pairs.push_back(pair(false, 0.9, 0.0));  // early FAs
    for (int i = 0; i < 96; ++i) pairs.push_back(pair(false, 0.0, 0.0));
    pairs.push_back(pair(true, 0.9, 0.9));
    const auto rep = run_policy(pairs, 2000.0, thr(0.5, 0.5));
    CHECK(rep.fa_count == 4);
    CHECK(rep.hours_per_fa == doctest::Approx(500.0));
}

TEST_CASE("run_policy with no accepts reports no latency") {
    std::vector<PairScore> pairs = {pair(true, 0.1, 0.1), pair(false, 0.0, 0.0)};
    const auto rep = run_policy(pairs, 1.0, thr(0.5, 0.5));
    CHECK(rep.frr == 1.0);
    CHECK(rep.fa_count == 0);
    CHECK(std::isinf(rep.hours_per_fa));
    CHECK_FALSE(rep.mean_latency_s.has_value());
}

TEST_CASE("run_policy with T_e zero accepts everything early") {
    const auto pairs = random_pairs(50, 20, 35);
    const auto rep = run_policy(pairs, 5.0, thr(0.0, 0.9));
    CHECK(rep.n_early == 50);
    CHECK(rep.n_late == 0);
    CHECK(rep.defer_fraction == 0.0);
    REQUIRE(rep.mean_latency_s.has_value());
    CHECK(*rep.mean_latency_s == doctest::Approx(0.3));
    CHECK(rep.fa_count == 20);  // every negative also clears T_e = 0
}

TEST_CASE("two-stage accepts form a superset of single-stage accepts") {
    // for any positive: accepted iff early >= T_e or late >= T_l, so raising
    // the late stage on top of early-only can only add accepts
    const auto pairs = random_pairs(300, 150, 36);
    for (double te : {0.4, 0.6, 0.8}) {
        const auto early_only = run_policy(pairs, 10.0, thr(te, 2.0));  // late never fires
        const auto two_stage = run_policy(pairs, 10.0, thr(te, 0.7));
        const auto accepted = [](const PolicyReport& r) { return r.n_early + r.n_late; };
        CHECK(accepted(two_stage) >= accepted(early_only));
        CHECK(two_stage.n_early == early_only.n_early);
        CHECK(two_stage.frr <= early_only.frr);
    }
}

TEST_CASE("policy report serializes to well-formed json") {
    const auto pairs = random_pairs(40, 10, 37);
    const auto rep = run_policy(pairs, 3.0, thr(0.6, 0.6));
    const auto j = nlohmann::json::parse(rep.to_json());
    CHECK(j.at("frr").is_number());
    CHECK(j.at("fa_count").is_number_integer());
    CHECK(j.at("defer_fraction").is_number());
    CHECK(j.at("n_early").is_number_integer());
    CHECK(j.at("n_late").is_number_integer());
    CHECK((j.at("hours_per_fa").is_number() || j.at("hours_per_fa").is_null()));
    CHECK((j.at("mean_latency_s").is_number() || j.at("mean_latency_s").is_null()));

    // infinite hours/FA serializes as null
    std::vector<PairScore> quiet = {pair(true, 0.9, 0.9), pair(false, 0.0, 0.0)};
    const auto none = run_policy(quiet, 1.0, thr(0.5, 0.5));
    const auto jn = nlohmann::json::parse(none.to_json());
    CHECK(jn.at("hours_per_fa").is_null());
}
