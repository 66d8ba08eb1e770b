#pragma once

// Serial reference implementations. Tests compare the production kernels
// against these, and the benchmark tool reports the speed gap. Production
// code never calls into this header.

#include <algorithm>
#include <cmath>
#include <vector>

#include "pvt/matrix.hpp"

namespace pvt::ref {

// O(n^2) DFT power spectrum.
inline std::vector<double> power_spectrum_dft(const double* frame, int n, int fft_size) {
    std::vector<double> power(static_cast<std::size_t>(fft_size / 2 + 1));
    for (int k = 0; k <= fft_size / 2; ++k) {
        double re = 0.0, im = 0.0;
        for (int i = 0; i < n; ++i) {
            const double ang = -2.0 * 3.14159265358979323846 * k * i / fft_size;
            re += frame[i] * std::cos(ang);
            im += frame[i] * std::sin(ang);
        }
        power[k] = re * re + im * im;
    }
    return power;
}

// Single-accumulator dot product.
template <typename S>
inline S dot_serial(const S* a, const S* b, int n) {
    S acc = S(0);
    for (int i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <typename S>
inline void matvec_serial(S* y, const Mat<S>& W, const S* x) {
    for (int r = 0; r < W.rows; ++r) y[r] += dot_serial(W[r], x, W.cols);
}

// O(P*N) threshold sweep: for each threshold, recount both sides from
// scratch. Same point definitions as evalkit::det_curve.
struct RefDetPoint {
    double threshold;
    double frr;
    int fa_count;
};

inline std::vector<RefDetPoint> det_sweep_bruteforce(const std::vector<double>& pos,
                                                     const std::vector<double>& neg) {
    std::vector<double> grid = pos;
    grid.insert(grid.end(), neg.begin(), neg.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    std::vector<RefDetPoint> points;
    points.reserve(grid.size());
    for (double th : grid) {
        int below = 0;
        for (double s : pos)
            if (s < th) ++below;
        int fa = 0;
        for (double s : neg)
            if (s >= th) ++fa;
        points.push_back({th, static_cast<double>(below) / static_cast<double>(pos.size()), fa});
    }
    return points;
}

// Brute-force CTC: enumerate all K^T frame-label paths, keep those that
// collapse (merge repeats, drop blanks) to the target, and sum their
// probabilities. Only usable for tiny T and K.
inline double ctc_bruteforce_prob(const Mat<double>& log_posteriors,
                                  const std::vector<int>& labels, int blank) {
    const int t_len = log_posteriors.rows;
    const int k = log_posteriors.cols;
    std::vector<int> path(static_cast<std::size_t>(t_len), 0);
    double total = 0.0;
    while (true) {
        std::vector<int> collapsed;
        int prev = -1;
        for (int t = 0; t < t_len; ++t) {
            if (path[t] != blank && path[t] != prev) collapsed.push_back(path[t]);
            prev = path[t];
        }
        if (collapsed == labels) {
            double logp = 0.0;
            for (int t = 0; t < t_len; ++t) logp += log_posteriors[t][path[t]];
            total += std::exp(logp);
        }
        int pos = t_len - 1;
        while (pos >= 0 && path[pos] == k - 1) path[pos--] = 0;
        if (pos < 0) break;
        ++path[pos];
    }
    return total;
}

}  // namespace pvt::ref
