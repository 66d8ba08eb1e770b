#include <doctest.h>

#include <cmath>
#include <cstring>

#include "pvt/error.hpp"
#include "pvt/rng.hpp"
#include "pvt/scorer.hpp"

using namespace pvt;

namespace {

// Zero weights everywhere except a disc-head bias, so the positive posterior
// is the same known constant at every frame.
Checkpoint rigged_checkpoint(double positive_posterior) {
    Checkpoint c;
    c.model.num_layers = 1;
    c.model.hidden = 4;
    c.model.input_dim = 6;
    c.frontend.mel_bins = 2;
    c.frontend.stack_size = 3;
    c.frontend.downsample = 1;
    c.params = NetParams<float>::zeros(c.model);
    // softmax([0, b])[1] = p  =>  b = log(p / (1-p))
    c.params.head_disc_b[1][0] =
        static_cast<float>(std::log(positive_posterior / (1.0 - positive_posterior)));
    return c;
}

Checkpoint random_checkpoint(std::uint64_t seed) {
    Checkpoint c;
    c.model.num_layers = 1;
    c.model.hidden = 6;
    c.model.input_dim = 6;
    c.frontend.mel_bins = 2;
    c.frontend.stack_size = 3;
    c.frontend.downsample = 1;
    c.params = init_params(c.model, seed);
    return c;
}

AudioBuffer noise_audio(double seconds, std::uint64_t seed, double amp = 0.1) {
    AudioBuffer a;
    a.samples.resize(static_cast<std::size_t>(seconds * a.sample_rate));
    Rng rng(seed);
    for (auto& s : a.samples)
        s = static_cast<std::int16_t>(amp * 32767.0 * (2.0 * rng.uniform() - 1.0));
    return a;
}

// Audio with given active spans (seconds) on silence.
AudioBuffer burst_audio(double seconds, const std::vector<std::pair<double, double>>& spans,
                        std::uint64_t seed) {
    AudioBuffer a;
    a.samples.assign(static_cast<std::size_t>(seconds * a.sample_rate), 0);
    Rng rng(seed);
    for (const auto& [s0, s1] : spans) {
        const auto i0 = static_cast<std::size_t>(s0 * a.sample_rate);
        const auto i1 = static_cast<std::size_t>(s1 * a.sample_rate);
        for (std::size_t i = i0; i < i1 && i < a.samples.size(); ++i)
            a.samples[i] = static_cast<std::int16_t>(0.2 * 32767.0 * (2.0 * rng.uniform() - 1.0));
    }
    return a;
}

TriggerCandidate cand(double start, double end) {
    TriggerCandidate c;
    c.trigger_start = start;
    c.trigger_end = end;
    return c;
}

}  // namespace

TEST_CASE("zero-weight checkpoint scores its bias posterior") {
    const auto ckpt = rigged_checkpoint(0.7);
    const auto audio = noise_audio(1.5, 10);
    ScoreRequest req;
    req.candidate = cand(0.1, 0.9);
    const double mx = score_segment(ckpt, audio, req, Aggregate::max);
    const double mn = score_segment(ckpt, audio, req, Aggregate::mean);
    CHECK(mx == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(mn == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(mx == doctest::Approx(mn).epsilon(1e-12));  // constant over frames
}

TEST_CASE("post context clips at the audio end") {
    const auto ckpt = random_checkpoint(11);
    const auto audio = noise_audio(2.0, 12);
    ScoreRequest a;
    a.candidate = cand(0.2, 1.0);
    a.post_context = 10.0;  // way past the end
    ScoreRequest b = a;
    b.post_context = 1.0;  // exactly the remaining audio
    CHECK(score_segment(ckpt, audio, a) == score_segment(ckpt, audio, b));
}

TEST_CASE("early equals late when no audio remains after the trigger") {
    const auto ckpt = random_checkpoint(13);
    const auto audio = noise_audio(1.0, 14);
    const auto [early, late] = score_pair(ckpt, audio, cand(0.0, 1.0));
    CHECK(early == late);
}

TEST_CASE("early and late differ when context differs") {
    const auto ckpt = random_checkpoint(15);
    const auto audio = noise_audio(3.5, 16);
    const auto [early, late] = score_pair(ckpt, audio, cand(0.1, 1.0));
    CHECK(early != late);
    CHECK(early > 0.0);
    CHECK(early < 1.0);
    CHECK(late > 0.0);
    CHECK(late < 1.0);
}

TEST_CASE("degenerate segments are rejected") {
    const auto ckpt = random_checkpoint(17);
    const auto audio = noise_audio(1.0, 18);
    ScoreRequest tiny;
    tiny.candidate = cand(0.5, 0.505);
    tiny.post_context = 0.0;
    CHECK_THROWS_WITH_AS(score_segment(ckpt, audio, tiny), doctest::Contains("too short"),
                         DataError);

    ScoreRequest inverted;
    inverted.candidate = cand(0.9, 0.2);
    CHECK_THROWS_WITH_AS(score_segment(ckpt, audio, inverted),
                         doctest::Contains("invalid candidate"), DataError);

    ScoreRequest negative_ctx;
    negative_ctx.candidate = cand(0.1, 0.6);
    negative_ctx.post_context = -0.5;
    CHECK_THROWS_WITH_AS(score_segment(ckpt, audio, negative_ctx),
                         doctest::Contains("post_context"), DataError);
}

TEST_CASE("scoring a feature prefix matches scoring the prefix audio") {
    // the batch-scoring shortcut: featurize once, slice rows
    const auto ckpt = random_checkpoint(19);
    const auto audio = noise_audio(2.5, 20);
    const auto c = cand(0.0, 0.8);

    ScoreRequest late;
    late.candidate = c;
    late.post_context = 1.2;
    ScoreRequest early;
    early.candidate = c;
    early.post_context = 0.3;

    const auto seg = extract_segment(audio, 0.0, 2.0);  // 0.8 + 1.2
    auto rows = compute_features(seg, ckpt.frontend).windows.cast<float>();
    const int early_frames = stacked_frames_in(
        ckpt.frontend, static_cast<std::int64_t>(std::llround(1.1 * audio.sample_rate)));
    Mat<float> prefix(early_frames, rows.cols);
    std::memcpy(prefix.data(), rows.data(), sizeof(float) * prefix.size());

    CHECK(score_frames(ckpt, rows) == score_segment(ckpt, audio, late));
    CHECK(score_frames(ckpt, prefix) == score_segment(ckpt, audio, early));
}

TEST_CASE("stub detector stays quiet on silence") {
    AudioBuffer silence;
    silence.samples.assign(16000 * 3, 0);
    CHECK(stub_first_pass(silence, StubConfig{}).empty());
}

TEST_CASE("stub detector finds separated bursts") {
    const auto audio = burst_audio(10.0, {{1.0, 2.0}, {4.0, 5.5}, {7.0, 8.0}}, 21);
    const auto cands = stub_first_pass(audio, StubConfig{});
    REQUIRE(cands.size() == 3);
    const double starts[] = {1.0, 4.0, 7.0};
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(cands[i].trigger_start == doctest::Approx(starts[i]).epsilon(0.05));
        CHECK(cands[i].trigger_end ==
              doctest::Approx(cands[i].trigger_start + 0.75).epsilon(1e-9));
        CHECK(cands[i].source == CandidateSource::stub_detector);
    }
}

TEST_CASE("stub detector merges bursts separated by less than min_gap") {
    const auto audio = burst_audio(6.0, {{1.0, 1.5}, {1.8, 2.4}}, 22);  // 0.3 s gap
    const auto cands = stub_first_pass(audio, StubConfig{});
    CHECK(cands.size() == 1);
}

TEST_CASE("stub detector drops blips shorter than min_burst") {
    const auto audio = burst_audio(6.0, {{1.0, 1.05}}, 23);  // 50 ms
    CHECK(stub_first_pass(audio, StubConfig{}).empty());
}

TEST_CASE("stub detector clamps nominal ends at the next burst") {
    StubConfig cfg;
    cfg.nominal_trigger_s = 3.0;  // long enough to overrun the next burst
    const auto audio = burst_audio(8.0, {{1.0, 1.4}, {2.2, 2.8}}, 24);
    const auto cands = stub_first_pass(audio, cfg);
    REQUIRE(cands.size() == 2);
    CHECK(cands[0].trigger_end <= cands[1].trigger_start + cfg.max_overlap_s + 1e-9);
}
