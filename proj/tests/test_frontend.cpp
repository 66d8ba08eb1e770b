#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pvt/error.hpp"
#include "pvt/frontend.hpp"
#include "pvt/reference.hpp"
#include "pvt/rng.hpp"

using namespace pvt;

namespace {
AudioBuffer sine(double freq, double seconds, double amp = 0.5) {
    AudioBuffer a;
    a.sample_rate = 16000;
    const auto n = static_cast<std::size_t>(seconds * a.sample_rate);
    a.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        a.samples[i] = static_cast<std::int16_t>(
            32767.0 * amp * std::sin(2.0 * std::numbers::pi * freq * i / a.sample_rate));
    return a;
}
}  // namespace

TEST_CASE("frame count for one second at 25ms/10ms is 98") {
    AudioBuffer a = sine(440.0, 1.0);
    FrontendConfig cfg;
    const auto mel = compute_mel_frames(a, cfg);
    CHECK(mel.rows == 98);  // 1 + (16000 - 400) / 160
    CHECK(mel.cols == 40);
}

TEST_CASE("all-zero audio hits the log floor everywhere") {
    AudioBuffer a;
    a.sample_rate = 16000;
    a.samples.resize(16000, 0);
    FrontendConfig cfg;
    const auto mel = compute_mel_frames(a, cfg);
    const double floor_val = std::log(cfg.log_floor);
    for (std::size_t i = 0; i < mel.v.size(); ++i) CHECK(mel.v[i] == doctest::Approx(floor_val));
}

TEST_CASE("pure tone peaks in the mel bin nearest its frequency") {
    FrontendConfig cfg;
    const auto centers = mel_center_frequencies(cfg);
    REQUIRE(centers.size() == 40);
    const auto mel = compute_mel_frames(sine(1000.0, 0.5), cfg);
    // argmax over bins of a middle frame
    const double* row = mel[mel.rows / 2];
    int arg = 0;
    for (int m = 1; m < 40; ++m)
        if (row[m] > row[arg]) arg = m;
    int nearest = 0;
    for (int m = 1; m < 40; ++m)
        if (std::abs(centers[m] - 1000.0) < std::abs(centers[nearest] - 1000.0)) nearest = m;
    CHECK(std::abs(arg - nearest) <= 1);
}

TEST_CASE("mel filterbank per-fft-bin weight never exceeds 1") {
    FrontendConfig cfg;
    const auto fb = mel_filterbank(cfg);
    CHECK(fb.rows == 40);
    CHECK(fb.cols == 257);
    for (int k = 0; k < fb.cols; ++k) {
        double total = 0.0;
        for (int m = 0; m < fb.rows; ++m) total += fb[m][k];
        CHECK(total <= 1.0 + 1e-6);
    }
}

TEST_CASE("fft power spectrum matches the quadratic DFT reference") {
    Rng rng(123);
    std::vector<double> frame(512);
    for (auto& v : frame) v = rng.uniform(-1.0, 1.0);
    const auto fast = power_spectrum(frame.data(), 512, 512);
    const auto slow = ref::power_spectrum_dft(frame.data(), 512, 512);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t k = 0; k < fast.size(); ++k)
        CHECK(fast[k] == doctest::Approx(slow[k]).epsilon(1e-9));
}

TEST_CASE("stacking 98 mel frames gives 31 windows of dim 280") {
    const auto mel = compute_mel_frames(sine(500.0, 1.0), FrontendConfig{});
    const auto feats = stack_and_downsample(mel, 7, 3);
    CHECK(feats.windows.rows == 31);  // (98 - 7) / 3 + 1
    CHECK(feats.windows.cols == 280);
    CHECK(feats.frame_shift_effective == doctest::Approx(0.03));
}

TEST_CASE("exactly stack_size frames give a single window") {
    Mat<double> mel(7, 40);
    mel.fill(1.0);
    const auto feats = stack_and_downsample(mel, 7, 3);
    CHECK(feats.windows.rows == 1);
}

TEST_CASE("stacked window rows pull the right source frames") {
    Mat<double> mel(13, 2);
    for (int t = 0; t < 13; ++t) {
        mel[t][0] = t;
        mel[t][1] = 100 + t;
    }
    const auto feats = stack_and_downsample(mel, 7, 3);
    REQUIRE(feats.windows.rows == 3);
    REQUIRE(feats.windows.cols == 14);
    // window 1 stacks source frames 3..9 in order
    for (int j = 0; j < 7; ++j) {
        CHECK(feats.windows[1][2 * j] == doctest::Approx(3.0 + j));
        CHECK(feats.windows[1][2 * j + 1] == doctest::Approx(103.0 + j));
    }
}

TEST_CASE("too-short input raises a data error") {
    AudioBuffer a;
    a.sample_rate = 16000;
    a.samples.resize(100, 1000);
    CHECK_THROWS_WITH_AS(compute_mel_frames(a, FrontendConfig{}), doctest::Contains("too short"),
                         DataError);
}

TEST_CASE("compute_features composes mel + stacking") {
    const auto feats = compute_features(sine(750.0, 1.0), FrontendConfig{});
    CHECK(feats.windows.rows == 31);
    CHECK(feats.dim() == 280);
}

TEST_CASE("hz/mel conversion round-trips") {
    for (double f : {0.0, 100.0, 1000.0, 4000.0, 7999.0})
        CHECK(mel_to_hz(hz_to_mel(f)) == doctest::Approx(f).epsilon(1e-9));
}
