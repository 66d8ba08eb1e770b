// Production kernels vs the serial references in pvt/reference.hpp.
#include <benchmark/benchmark.h>

#include <vector>

#include "pvt/corpus.hpp"
#include "pvt/evalkit.hpp"
#include "pvt/frontend.hpp"
#include "pvt/matrix.hpp"
#include "pvt/model.hpp"
#include "pvt/parallel.hpp"
#include "pvt/reference.hpp"
#include "pvt/rng.hpp"
#include "pvt/synth.hpp"

namespace {

using namespace pvt;

Mat<float> random_mat(int r, int c, std::uint64_t seed) {
    Mat<float> m(r, c);
    Rng rng(seed);
    for (auto& x : m.v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return m;
}

void BM_dot_kern(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto a = random_mat(1, n, 1), b = random_mat(1, n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(kern::dot(a[0], b[0], n));
}
BENCHMARK(BM_dot_kern)->Arg(256)->Arg(4096);

void BM_dot_serial(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto a = random_mat(1, n, 1), b = random_mat(1, n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(ref::dot_serial(a[0], b[0], n));
}
BENCHMARK(BM_dot_serial)->Arg(256)->Arg(4096);

void BM_matvec_kern(benchmark::State& state) {
    const auto w = random_mat(256, 280, 3), x = random_mat(1, 280, 4);
    std::vector<float> y(256, 0.0f);
    for (auto _ : state) {
        kern::matvec_acc(y.data(), w, x[0]);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_matvec_kern);

void BM_matvec_serial(benchmark::State& state) {
    const auto w = random_mat(256, 280, 3), x = random_mat(1, 280, 4);
    std::vector<float> y(256, 0.0f);
    for (auto _ : state) {
        ref::matvec_serial(y.data(), w, x[0]);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_matvec_serial);

void BM_power_spectrum_fft(benchmark::State& state) {
    Rng rng(5);
    std::vector<double> frame(400);
    for (auto& s : frame) s = rng.uniform(-1.0, 1.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(power_spectrum(frame.data(), 400, 512));
}
BENCHMARK(BM_power_spectrum_fft);

void BM_power_spectrum_dft(benchmark::State& state) {
    Rng rng(5);
    std::vector<double> frame(400);
    for (auto& s : frame) s = rng.uniform(-1.0, 1.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(ref::power_spectrum_dft(frame.data(), 400, 512));
}
BENCHMARK(BM_power_spectrum_dft);

void BM_det_curve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(6);
    std::vector<double> pos(n), neg(n);
    for (auto& s : pos) s = rng.uniform();
    for (auto& s : neg) s = rng.uniform();
    for (auto _ : state) benchmark::DoNotOptimize(det_curve(pos, neg, 2.0, "b"));
}
BENCHMARK(BM_det_curve)->Arg(200)->Arg(2000);

void BM_det_bruteforce(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(6);
    std::vector<double> pos(n), neg(n);
    for (auto& s : pos) s = rng.uniform();
    for (auto& s : neg) s = rng.uniform();
    for (auto _ : state) benchmark::DoNotOptimize(ref::det_sweep_bruteforce(pos, neg));
}
BENCHMARK(BM_det_bruteforce)->Arg(200)->Arg(2000);

// Whole-utterance featurization, parallel_for across utterances vs pinned
// to one worker.
void bench_featurize(benchmark::State& state, int threads) {
    const auto alphabet = PhoneAlphabet::default_alphabet();
    const auto trigger = trigger_sequence(alphabet);
    UtteranceSpec spec;
    spec.phone_sequence = trigger;
    spec.trigger_phone_count = static_cast<int>(trigger.size());
    spec.positive = true;
    std::vector<AudioBuffer> utts;
    for (int i = 0; i < 8; ++i)
        utts.push_back(synthesize_utterance(spec, alphabet, SynthConfig{}, 100 + i).audio);
    FrontendConfig fe;
    set_max_threads(threads);
    for (auto _ : state) {
        std::vector<Mat<double>> feats(utts.size());
        parallel_for(static_cast<std::int64_t>(utts.size()), [&](std::int64_t i) {
            feats[i] = compute_features(utts[i], fe).windows;
        });
        benchmark::DoNotOptimize(feats.data());
    }
    set_max_threads(0);
}

void BM_featurize_parallel(benchmark::State& state) { bench_featurize(state, 0); }
BENCHMARK(BM_featurize_parallel);

void BM_featurize_serial(benchmark::State& state) { bench_featurize(state, 1); }
BENCHMARK(BM_featurize_serial);

void BM_forward_32_frames(benchmark::State& state) {
    ModelConfig cfg;
    const auto params = init_params(cfg, 7);
    const auto x = random_mat(32, cfg.input_dim, 8);
    for (auto _ : state) benchmark::DoNotOptimize(forward(params, x));
}
BENCHMARK(BM_forward_32_frames);

}  // namespace

BENCHMARK_MAIN();
