#include <doctest.h>

#include <atomic>
#include <cmath>
#include <vector>

#include "pvt/frontend.hpp"
#include "pvt/matrix.hpp"
#include "pvt/parallel.hpp"
#include "pvt/reference.hpp"
#include "pvt/rng.hpp"
#include "pvt/synth.hpp"

using namespace pvt;

TEST_CASE("max_threads round-trips and zero resets") {
    const int before = max_threads();
    set_max_threads(3);
    CHECK(max_threads() == 3);
    set_max_threads(0);
    CHECK(max_threads() >= 1);
    set_max_threads(before);
}

TEST_CASE("parallel_for covers every index exactly once") {
    const int n = 1000;
    std::vector<std::atomic<int>> hits(n);
    parallel_for(n, [&](std::int64_t i) { hits[i].fetch_add(1); });
    for (int i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
    // empty ranges are fine
    parallel_for(0, [&](std::int64_t) { FAIL("must not run"); });
}

TEST_CASE("slot-writing plus ordered reduction is thread-count invariant") {
    // the project-wide parallel pattern, checked bitwise at 1 vs 4 workers
    const int n = 400;
    auto run = [&](int threads) {
        set_max_threads(threads);
        std::vector<double> slot(n);
        parallel_for(n, [&](std::int64_t i) {
            Rng rng(derive_seed(99, "slot", static_cast<std::uint64_t>(i)));
            double acc = 0.0;
            for (int k = 0; k < 50; ++k) acc += std::sin(rng.normal());
            slot[i] = acc;
        });
        double total = 0.0;
        for (double s : slot) total += s;  // fixed order
        return std::pair(slot, total);
    };
    const auto [s1, t1] = run(1);
    const auto [s4, t4] = run(4);
    set_max_threads(0);
    CHECK(s1 == s4);
    CHECK(t1 == t4);
}

TEST_CASE("feature extraction is thread-count invariant") {
    SynthConfig sc;
    const auto alphabet = PhoneAlphabet::default_alphabet();
    UtteranceSpec spec;
    spec.phone_sequence = {5, 3, 7, alphabet.word_boundary(), 9};
    const auto audio = synthesize_utterance(spec, alphabet, sc, 4242).audio;

    FrontendConfig fe;
    set_max_threads(1);
    const auto a = compute_features(audio, fe);
    set_max_threads(4);
    const auto b = compute_features(audio, fe);
    set_max_threads(0);
    CHECK(a.windows == b.windows);
}

TEST_CASE("kern::dot reassociation stays close to the serial sum") {
    Rng rng(7);
    for (int n : {1, 3, 16, 257, 1024}) {
        std::vector<float> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = static_cast<float>(rng.normal());
            b[i] = static_cast<float>(rng.normal());
        }
        const float fast = kern::dot(a.data(), b.data(), n);
        const float slow = ref::dot_serial(a.data(), b.data(), n);
        // reassociation error scales with the term magnitudes, not the sum
        CHECK(std::abs(fast - slow) < 1e-3f * std::max(1.0f, std::abs(slow)));
        // and in double the two orders agree far more tightly
        std::vector<double> ad(a.begin(), a.end()), bd(b.begin(), b.end());
        CHECK(kern::dot(ad.data(), bd.data(), n) ==
              doctest::Approx(ref::dot_serial(ad.data(), bd.data(), n)).epsilon(1e-12));
    }
}

TEST_CASE("kern::matvec_acc matches the serial reference") {
    Rng rng(8);
    Mat<float> w(13, 29);
    std::vector<float> x(29), y_fast(13, 0.5f), y_slow(13, 0.5f);
    for (auto& v : w.v) v = static_cast<float>(rng.normal());
    for (auto& v : x) v = static_cast<float>(rng.normal());
    kern::matvec_acc(y_fast.data(), w, x.data());
    ref::matvec_serial(y_slow.data(), w, x.data());
    for (int r = 0; r < 13; ++r) CHECK(y_fast[r] == doctest::Approx(y_slow[r]).epsilon(1e-4));
}

TEST_CASE("fft power spectrum matches the quadratic dft") {
    Rng rng(9);
    const int n = 400, fft = 512;
    std::vector<double> frame(n);
    for (auto& v : frame) v = rng.normal();
    const auto fast = power_spectrum(frame.data(), n, fft);
    const auto slow = ref::power_spectrum_dft(frame.data(), n, fft);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t i = 0; i < fast.size(); ++i)
        CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-9));
}
