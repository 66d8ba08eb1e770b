#pragma once

#include <vector>

#include "pvt/audio.hpp"
#include "pvt/matrix.hpp"

namespace pvt {

// Framing and filterbank geometry. Serialized inside checkpoints so scoring
// always reproduces the features the model was trained on.
struct FrontendConfig {
    int sample_rate = 16000;
    double window_ms = 25.0;
    double hop_ms = 10.0;
    int fft_size = 512;
    int mel_bins = 40;
    double fmin_hz = 0.0;
    double fmax_hz = 8000.0;
    double log_floor = 1e-10;
    int stack_size = 7;
    int downsample = 3;

    int win_length() const { return static_cast<int>(sample_rate * window_ms / 1000.0 + 0.5); }
    int hop_length() const { return static_cast<int>(sample_rate * hop_ms / 1000.0 + 0.5); }
    int feature_dim() const { return mel_bins * stack_size; }
    double frame_shift_effective() const { return downsample * hop_ms / 1000.0; }
};

// Stacked, downsampled log-Mel windows for one audio segment.
// Row i covers source time origin_offset + i * frame_shift_effective.
struct FeatureSequence {
    Mat<double> windows;  // [T_down x (mel_bins * stack_size)]
    double frame_shift_effective = 0.03;
    double origin_offset = 0.0;

    int frames() const { return windows.rows; }
    int dim() const { return windows.cols; }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters laid out uniformly on the mel scale over
// [fmin_hz, fmax_hz]; [mel_bins x (fft_size/2 + 1)].
Mat<double> mel_filterbank(const FrontendConfig& cfg);

// Filter center frequencies in Hz, one per mel bin.
std::vector<double> mel_center_frequencies(const FrontendConfig& cfg);

// Power spectrum |X_k|^2, k = 0..fft_size/2, of a zero-padded frame.
// frame values are windowed samples; n <= fft_size.
std::vector<double> power_spectrum(const double* frame, int n, int fft_size);

// Log-Mel energies, [T x mel_bins], T = 1 + floor((N - win) / hop).
// Errors: empty audio, sample-rate mismatch, audio shorter than one window.
Mat<double> compute_mel_frames(const AudioBuffer& audio, const FrontendConfig& cfg);

// Row i = concat(frames[i*factor .. i*factor + stack)); trailing frames that
// cannot fill a stack are dropped. T_down = floor((T - stack)/factor) + 1.
FeatureSequence stack_and_downsample(const Mat<double>& frames, int stack, int factor,
                                     double hop_s = 0.01);

// compute_mel_frames + stack_and_downsample with cfg geometry.
FeatureSequence compute_features(const AudioBuffer& audio, const FrontendConfig& cfg);

// In-place per-dimension (x - mean) / std, computed in double. Empty stats
// are a no-op so un-normalized checkpoints still score.
void normalize_rows(Mat<float>& x, const Mat<double>& mean, const Mat<double>& stdev);

// Stacked rows produced by `samples` audio samples (0 when too short).
// Features of an audio prefix are a row prefix of the whole's features, so
// callers can featurize once and slice.
int stacked_frames_in(const FrontendConfig& cfg, std::int64_t samples);

}  // namespace pvt
