#include "pvt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pvt/error.hpp"
#include "pvt/rng.hpp"

namespace pvt {
namespace {

// Second-order resonator (digital formant): y[n] = 2 r cos(th) y[n-1] - r^2 y[n-2] + g x[n].
struct Resonator {
    double a1 = 0.0, a2 = 0.0, g = 1.0;
    double y1 = 0.0, y2 = 0.0;

    void configure(double freq_hz, double bandwidth_hz, double gain, int sample_rate) {
        const double r = std::exp(-std::numbers::pi * bandwidth_hz / sample_rate);
        const double theta = 2.0 * std::numbers::pi * freq_hz / sample_rate;
        a1 = 2.0 * r * std::cos(theta);
        a2 = -r * r;
        // Unity response at the resonance peak, scaled by the phone gain.
        g = gain * (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * theta) + r * r);
    }
    double step(double x) {
        const double y = a1 * y1 + a2 * y2 + g * x;
        y2 = y1;
        y1 = y;
        return y;
    }
};

Phone make_phone(const std::string& name, bool voiced,
                 std::initializer_list<Phone::Formant> formants, double dmin, double dmax) {
    Phone p;
    p.name = name;
    p.voiced = voiced;
    p.formants = formants;
    p.dur_min_s = dmin;
    p.dur_max_s = dmax;
    return p;
}

}  // namespace

PhoneAlphabet PhoneAlphabet::default_alphabet() {
    PhoneAlphabet a;
    auto& P = a.phones;
    // Vowel-like voiced phones: formant pairs spread over the F1/F2 plane.
    P.push_back(make_phone("aa", true, {{730, 90, 1.0}, {1090, 110, 0.60}, {2440, 160, 0.22}}, 0.07, 0.14));
    P.push_back(make_phone("iy", true, {{270, 60, 1.0}, {2290, 150, 0.45}, {3010, 200, 0.18}}, 0.07, 0.14));
    P.push_back(make_phone("uw", true, {{300, 65, 1.0}, {870, 100, 0.55}, {2240, 160, 0.15}}, 0.07, 0.14));
    P.push_back(make_phone("eh", true, {{530, 80, 1.0}, {1840, 130, 0.50}, {2480, 170, 0.20}}, 0.06, 0.12));
    P.push_back(make_phone("ao", true, {{570, 85, 1.0}, {840, 100, 0.62}, {2410, 170, 0.14}}, 0.06, 0.12));
    P.push_back(make_phone("ae", true, {{660, 90, 1.0}, {1720, 130, 0.52}, {2410, 170, 0.20}}, 0.06, 0.12));
    P.push_back(make_phone("ih", true, {{390, 70, 1.0}, {1990, 140, 0.46}, {2550, 180, 0.18}}, 0.05, 0.10));
    P.push_back(make_phone("ah", true, {{640, 90, 1.0}, {1190, 110, 0.58}, {2390, 170, 0.18}}, 0.05, 0.10));
    // Sonorants: voiced, darker spectra.
    P.push_back(make_phone("m", true, {{280, 60, 1.0}, {900, 140, 0.25}, {2200, 220, 0.08}}, 0.05, 0.09));
    P.push_back(make_phone("n", true, {{320, 65, 1.0}, {1400, 160, 0.22}, {2500, 240, 0.08}}, 0.05, 0.09));
    P.push_back(make_phone("l", true, {{360, 70, 1.0}, {1100, 130, 0.40}, {2600, 200, 0.12}}, 0.05, 0.09));
    P.push_back(make_phone("r", true, {{420, 75, 1.0}, {1300, 130, 0.42}, {1690, 150, 0.30}}, 0.05, 0.09));
    P.push_back(make_phone("w", true, {{310, 65, 1.0}, {700, 95, 0.55}, {2300, 180, 0.10}}, 0.04, 0.08));
    P.push_back(make_phone("y", true, {{290, 60, 1.0}, {2100, 150, 0.40}, {2950, 210, 0.14}}, 0.04, 0.08));
    // Fricatives: unvoiced noise shaped by high resonances.
    P.push_back(make_phone("s", false, {{5200, 900, 1.0}, {6800, 1100, 0.55}}, 0.06, 0.11));
    P.push_back(make_phone("sh", false, {{2600, 500, 1.0}, {4200, 800, 0.60}}, 0.06, 0.11));
    P.push_back(make_phone("f", false, {{1400, 900, 0.65}, {4600, 1400, 0.80}}, 0.05, 0.09));
    P.push_back(make_phone("hh", false, {{900, 500, 0.70}, {2200, 700, 0.50}}, 0.04, 0.08));
    // Stops: short noise bursts after a near-silent closure (modeled as short span).
    P.push_back(make_phone("t", false, {{3800, 900, 1.0}, {5600, 1300, 0.50}}, 0.03, 0.06));
    P.push_back(make_phone("k", false, {{1800, 600, 1.0}, {3400, 900, 0.45}}, 0.03, 0.06));
    // Boundary gaps. wb is a short silence between words, sb a longer one.
    Phone wb;
    wb.name = "wb";
    wb.silent = true;
    wb.dur_min_s = 0.03;
    wb.dur_max_s = 0.07;
    P.push_back(wb);
    Phone sb;
    sb.name = "sb";
    sb.silent = true;
    sb.dur_min_s = 0.10;
    sb.dur_max_s = 0.20;
    P.push_back(sb);
    return a;
}

int PhoneAlphabet::word_boundary() const { return find("wb"); }
int PhoneAlphabet::sentence_boundary() const { return find("sb"); }

int PhoneAlphabet::find(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
        if (phones[i].name == name) return i;
    return -1;
}

SynthResult synthesize_utterance(const UtteranceSpec& spec, const PhoneAlphabet& alphabet,
                                 const SynthConfig& cfg, std::uint64_t seed) {
    if (spec.phone_sequence.empty()) throw DataError("synthesize_utterance: empty phone sequence");
    for (int p : spec.phone_sequence)
        if (p < 0 || p >= alphabet.size())
            throw DataError("synthesize_utterance: phone id out of range: " + std::to_string(p));

    Rng rng(seed);
    const int rate = cfg.sample_rate;
    const double f0 = cfg.f0_hz * (1.0 + cfg.f0_jitter * (2.0 * rng.uniform() - 1.0));
    const double fjit = 1.0 + cfg.formant_jitter * (2.0 * rng.uniform() - 1.0);

    SynthResult out;
    out.lead_pad_samples =
        std::llround(rng.uniform(cfg.lead_pad_min_s, cfg.lead_pad_max_s) * rate);

    // Sample every phone duration up front; ground-truth timing comes from
    // these exact sample counts, not from float second arithmetic.
    const int n_ph = static_cast<int>(spec.phone_sequence.size());
    out.phone_samples.resize(n_ph);
    std::int64_t total = out.lead_pad_samples;
    out.phone_starts.resize(n_ph);
    out.phone_ends.resize(n_ph);
    for (int i = 0; i < n_ph; ++i) {
        const Phone& ph = alphabet.phones[spec.phone_sequence[i]];
        const std::int64_t len =
            std::max<std::int64_t>(8, std::llround(rng.uniform(ph.dur_min_s, ph.dur_max_s) * rate));
        out.phone_samples[i] = len;
        out.phone_starts[i] = static_cast<double>(total) / rate;
        total += len;
        out.phone_ends[i] = static_cast<double>(total) / rate;
    }
    total += std::llround(cfg.tail_pad_s * rate);

    std::vector<double> wave(static_cast<std::size_t>(total), 0.0);
    const int edge = std::max(1, static_cast<int>(std::lround(cfg.edge_ms * 1e-3 * rate)));

    std::int64_t cursor = out.lead_pad_samples;
    double glottal_phase = 0.0;
    for (int i = 0; i < n_ph; ++i) {
        const Phone& ph = alphabet.phones[spec.phone_sequence[i]];
        const std::int64_t len = out.phone_samples[i];
        if (!ph.silent) {
            std::vector<Resonator> bank(ph.formants.size());
            for (std::size_t f = 0; f < ph.formants.size(); ++f)
                bank[f].configure(ph.formants[f].freq_hz * fjit, ph.formants[f].bandwidth_hz,
                                  ph.formants[f].gain, rate);
            const double period = rate / f0;
            for (std::int64_t n = 0; n < len; ++n) {
                double x;
                if (ph.voiced) {
                    // Impulse train excitation with a little shimmer.
                    glottal_phase += 1.0;
                    if (glottal_phase >= period) {
                        glottal_phase -= period;
                        x = 1.0 + 0.1 * (2.0 * rng.uniform() - 1.0);
                    } else {
                        x = 0.0;
                    }
                    x += 0.01 * (2.0 * rng.uniform() - 1.0);  // aspiration floor
                } else {
                    x = 2.0 * rng.uniform() - 1.0;
                }
                double y = 0.0;
                for (auto& res : bank) y += res.step(x);
                // Raised-cosine attack/decay so phone joins don't click.
                double env = 1.0;
                if (n < edge) env = 0.5 - 0.5 * std::cos(std::numbers::pi * (n + 0.5) / edge);
                const std::int64_t from_end = len - 1 - n;
                if (from_end < edge)
                    env = std::min(env, 0.5 - 0.5 * std::cos(std::numbers::pi * (from_end + 0.5) / edge));
                wave[static_cast<std::size_t>(cursor + n)] = y * env;
            }
        }
        cursor += len;
    }

    // Normalize speech RMS, then add white noise for the requested SNR.
    double sumsq = 0.0;
    std::int64_t active = 0;
    for (double v : wave) {
        if (v != 0.0) {
            sumsq += v * v;
            ++active;
        }
    }
    const double rms = active > 0 ? std::sqrt(sumsq / active) : 0.0;
    const double gain = rms > 1e-12 ? cfg.speech_rms / rms : 0.0;
    const double noise_rms = cfg.speech_rms * std::pow(10.0, -spec.snr_db / 20.0);
    for (auto& v : wave) {
        v = v * gain + noise_rms * rng.normal();
        v = std::clamp(v, -0.999, 0.999);
    }

    out.audio.sample_rate = rate;
    out.audio.samples.resize(wave.size());
    for (std::size_t n = 0; n < wave.size(); ++n)
        out.audio.samples[n] = static_cast<std::int16_t>(std::lround(wave[n] * 32767.0));

    if (spec.positive && spec.trigger_phone_count > 0) {
        const int last = std::min(spec.trigger_phone_count, n_ph) - 1;
        out.trigger_end = out.phone_ends[last];
    }
    return out;
}

std::vector<double> zipf_distribution(double zipf_s, int vocab_size) {
    if (vocab_size <= 0) throw DataError("zipf_distribution: vocab_size must be positive");
    std::vector<double> p(vocab_size);
    double z = 0.0;
    for (int k = 0; k < vocab_size; ++k) {
        p[k] = std::pow(static_cast<double>(k + 1), -zipf_s);
        z += p[k];
    }
    for (auto& v : p) v /= z;
    return p;
}

std::vector<int> sample_payload(std::uint64_t rng_seed, double zipf_s, int vocab_size) {
    if (vocab_size < 20)
        throw DataError("sample_payload: vocab too small (" + std::to_string(vocab_size) +
                        " < 20)");
    Rng rng(rng_seed);
    const auto p = zipf_distribution(zipf_s, vocab_size);
    const int n_words = rng.uniform_int(4, 7);
    std::vector<int> words(n_words);
    for (int w = 0; w < n_words; ++w) {
        const double u = rng.uniform();
        double acc = 0.0;
        int k = vocab_size - 1;
        for (int i = 0; i < vocab_size; ++i) {
            acc += p[i];
            if (u < acc) {
                k = i;
                break;
            }
        }
        words[w] = k;
    }
    return words;
}

}  // namespace pvt
