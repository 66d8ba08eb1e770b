#include "pvt/frontend.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "pvt/error.hpp"
#include "pvt/parallel.hpp"

namespace pvt {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 complex FFT, decimation in time.
void fft_inplace(std::vector<std::complex<double>>& a) {
    const int n = static_cast<int>(a.size());
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / len;
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_center_frequencies(const FrontendConfig& cfg) {
    const double mel_lo = hz_to_mel(cfg.fmin_hz);
    const double mel_hi = hz_to_mel(cfg.fmax_hz);
    const double step = (mel_hi - mel_lo) / (cfg.mel_bins + 1);
    std::vector<double> centers(cfg.mel_bins);
    for (int m = 0; m < cfg.mel_bins; ++m) centers[m] = mel_to_hz(mel_lo + (m + 1) * step);
    return centers;
}

Mat<double> mel_filterbank(const FrontendConfig& cfg) {
    const int bins = cfg.fft_size / 2 + 1;
    const double mel_lo = hz_to_mel(cfg.fmin_hz);
    const double mel_hi = hz_to_mel(cfg.fmax_hz);
    const double step = (mel_hi - mel_lo) / (cfg.mel_bins + 1);

    // Triangles are evaluated on the mel axis, so interior bins form a
    // partition of unity and no FFT bin collects total weight above one.
    Mat<double> fb(cfg.mel_bins, bins);
    for (int k = 0; k < bins; ++k) {
        const double hz = static_cast<double>(k) * cfg.sample_rate / cfg.fft_size;
        if (hz < cfg.fmin_hz || hz > cfg.fmax_hz) continue;
        const double mel = hz_to_mel(hz);
        for (int m = 0; m < cfg.mel_bins; ++m) {
            const double left = mel_lo + m * step;
            const double center = left + step;
            const double right = center + step;
            double w = 0.0;
            if (mel >= left && mel <= center && step > 0.0)
                w = (mel - left) / step;
            else if (mel > center && mel <= right && step > 0.0)
                w = (right - mel) / step;
            fb[m][k] = w;
        }
    }
    return fb;
}

std::vector<double> power_spectrum(const double* frame, int n, int fft_size) {
    std::vector<std::complex<double>> a(static_cast<std::size_t>(fft_size));
    for (int i = 0; i < n; ++i) a[i] = frame[i];
    fft_inplace(a);
    std::vector<double> power(static_cast<std::size_t>(fft_size / 2 + 1));
    for (int k = 0; k <= fft_size / 2; ++k) power[k] = std::norm(a[k]);
    return power;
}

Mat<double> compute_mel_frames(const AudioBuffer& audio, const FrontendConfig& cfg) {
    if (audio.samples.empty()) throw DataError("empty input");
    if (audio.sample_rate != cfg.sample_rate)
        throw DataError("rate mismatch: audio " + std::to_string(audio.sample_rate) +
                    " Hz, config " + std::to_string(cfg.sample_rate) + " Hz");
    const int win = cfg.win_length();
    const int hop = cfg.hop_length();
    if (win < hop) throw DataError("window shorter than hop");
    if (!is_pow2(cfg.fft_size) || cfg.fft_size < win)
        throw DataError("fft_size must be a power of two >= window length");
    const auto n = static_cast<std::int64_t>(audio.samples.size());
    if (n < win) throw DataError("segment too short: " + std::to_string(n) + " samples, window " +
                             std::to_string(win));

    const int t_total = 1 + static_cast<int>((n - win) / hop);

    // Symmetric Hann window over int16 samples scaled to [-1, 1).
    std::vector<double> window(static_cast<std::size_t>(win));
    for (int i = 0; i < win; ++i)
        window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (win - 1));

    const Mat<double> fb = mel_filterbank(cfg);
    Mat<double> out(t_total, cfg.mel_bins);

    parallel_for(t_total, [&](std::int64_t t) {
        std::vector<double> frame(static_cast<std::size_t>(win));
        const std::int16_t* src = audio.samples.data() + t * hop;
        for (int i = 0; i < win; ++i)
            frame[i] = window[i] * (static_cast<double>(src[i]) / 32768.0);
        const std::vector<double> power = power_spectrum(frame.data(), win, cfg.fft_size);
        double* row = out[static_cast<int>(t)];
        for (int m = 0; m < cfg.mel_bins; ++m)
            row[m] = std::log(kern::dot(fb[m], power.data(), static_cast<int>(power.size())) +
                              cfg.log_floor);
    });
    return out;
}

FeatureSequence stack_and_downsample(const Mat<double>& frames, int stack, int factor,
                                     double hop_s) {
    if (stack < 1 || factor < 1) throw DataError("invalid stack/downsample factors");
    if (frames.rows < stack)
        throw DataError("segment too short: " + std::to_string(frames.rows) + " frames, stack " +
                    std::to_string(stack));
    const int t_down = (frames.rows - stack) / factor + 1;
    FeatureSequence out;
    out.windows = Mat<double>(t_down, frames.cols * stack);
    out.frame_shift_effective = factor * hop_s;
    out.origin_offset = 0.0;
    for (int i = 0; i < t_down; ++i) {
        double* dst = out.windows[i];
        for (int s = 0; s < stack; ++s) {
            const double* src = frames[i * factor + s];
            for (int c = 0; c < frames.cols; ++c) dst[s * frames.cols + c] = src[c];
        }
    }
    return out;
}

FeatureSequence compute_features(const AudioBuffer& audio, const FrontendConfig& cfg) {
    const Mat<double> frames = compute_mel_frames(audio, cfg);
    return stack_and_downsample(frames, cfg.stack_size, cfg.downsample, cfg.hop_ms / 1000.0);
}

int stacked_frames_in(const FrontendConfig& cfg, std::int64_t samples) {
    if (samples < cfg.win_length()) return 0;
    const auto mel = 1 + (samples - cfg.win_length()) / cfg.hop_length();
    if (mel < cfg.stack_size) return 0;
    return static_cast<int>((mel - cfg.stack_size) / cfg.downsample + 1);
}

void normalize_rows(Mat<float>& x, const Mat<double>& mean, const Mat<double>& stdev) {
    if (mean.empty()) return;
    if (mean.cols != x.cols || stdev.cols != x.cols)
        throw DataError("normalization stats dim mismatch: stats " + std::to_string(mean.cols) +
                        ", features " + std::to_string(x.cols));
    for (int t = 0; t < x.rows; ++t)
        for (int d = 0; d < x.cols; ++d)
            x[t][d] = static_cast<float>((x[t][d] - mean[0][d]) / stdev[0][d]);
}

}  // namespace pvt
