#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pvt/audio.hpp"

namespace pvt {

// One synthesizable symbol. Boundary symbols are silent gaps; they are real
// output classes, only the CTC blank stays outside the alphabet.
struct Phone {
    std::string name;
    struct Formant {
        double freq_hz;
        double bandwidth_hz;
        double gain;
    };
    std::vector<Formant> formants;  // empty for silent symbols
    double dur_min_s = 0.05;
    double dur_max_s = 0.12;
    bool voiced = false;
    bool silent = false;
};

struct PhoneAlphabet {
    std::vector<Phone> phones;  // speech phones followed by the two boundaries

    // 20 spectrally spread phones + word/sentence boundary gaps.
    static PhoneAlphabet default_alphabet();

    int size() const { return static_cast<int>(phones.size()); }
    int blank_index() const { return size(); }       // CTC output layer only
    int output_classes() const { return size() + 1; }
    int word_boundary() const;
    int sentence_boundary() const;
    int find(const std::string& name) const;  // -1 when unknown
};

// What to synthesize. For positives the first trigger_phone_count symbols
// are the canonical trigger sequence; trigger_end is filled in from the
// realized phone timing after synthesis.
struct UtteranceSpec {
    std::vector<int> phone_sequence;
    int trigger_phone_count = 0;
    bool positive = false;
    std::vector<int> payload_words;
    double snr_db = 20.0;
    double trigger_end = -1.0;  // < 0 = absent
};

struct SynthConfig {
    int sample_rate = 16000;
    double f0_hz = 118.0;
    double f0_jitter = 0.12;       // relative per-utterance pitch spread
    double formant_jitter = 0.05;  // relative per-utterance formant spread
    double lead_pad_min_s = 0.05;
    double lead_pad_max_s = 0.15;
    double tail_pad_s = 0.06;
    double edge_ms = 8.0;       // per-phone raised-cosine edges
    double speech_rms = 0.085;  // target RMS relative to full scale
};

// Audio plus the exact realized timing of every symbol.
struct SynthResult {
    AudioBuffer audio;
    std::vector<double> phone_starts;  // seconds, one per sequence symbol
    std::vector<double> phone_ends;
    std::vector<std::int64_t> phone_samples;  // sampled duration per symbol
    std::int64_t lead_pad_samples = 0;
    double trigger_end = -1.0;  // positives only
};

// Deterministic in (spec, seed): same inputs give identical samples.
SynthResult synthesize_utterance(const UtteranceSpec& spec, const PhoneAlphabet& alphabet,
                                 const SynthConfig& cfg, std::uint64_t seed);

// Payload word ids: 4..7 draws from a Zipf(zipf_s) over the vocabulary.
// The first draw carries the mass concentration checked by tests.
std::vector<int> sample_payload(std::uint64_t rng_seed, double zipf_s, int vocab_size);

// Zipf probabilities p(k) ~ (k+1)^-s, k = 0..vocab_size-1.
std::vector<double> zipf_distribution(double zipf_s, int vocab_size);

}  // namespace pvt
