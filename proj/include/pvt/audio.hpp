#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pvt {

// Mono 16-bit PCM audio.
struct AudioBuffer {
    std::vector<std::int16_t> samples;
    int sample_rate = 16000;

    double duration() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

// RIFF/WAVE, PCM 16-bit mono only. Anything else is rejected with the path
// in the message.
AudioBuffer read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioBuffer& audio);

// Samples in [start, end) seconds; length = round((end-start) * rate).
// Bounds are validated against the buffer and the offending bound is named.
AudioBuffer extract_segment(const AudioBuffer& audio, double start, double end);

}  // namespace pvt
