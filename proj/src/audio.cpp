#include "pvt/audio.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "pvt/error.hpp"

namespace pvt {

namespace {

void put_u32(std::string& s, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    s.append(b, 4);
}

void put_u16(std::string& s, std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    s.append(b, 2);
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

AudioBuffer read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open wav file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t n = bytes.size();
    if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
        throw DataError("not a RIFF/WAVE file: " + path);

    AudioBuffer out;
    bool have_fmt = false, have_data = false;
    std::size_t pos = 12;
    while (pos + 8 <= n) {
        const char* id = bytes.data() + pos;
        const std::uint32_t sz = get_u32(p + pos + 4);
        pos += 8;
        if (pos + sz > n) throw DataError("truncated wav chunk in: " + path);
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (sz < 16) throw DataError("short fmt chunk in: " + path);
            const std::uint16_t format = get_u16(p + pos);
            const std::uint16_t channels = get_u16(p + pos + 2);
            const std::uint32_t rate = get_u32(p + pos + 4);
            const std::uint16_t bits = get_u16(p + pos + 14);
            if (format != 1) throw DataError("wav is not PCM: " + path);
            if (channels != 1) throw DataError("wav is not mono: " + path);
            if (bits != 16) throw DataError("wav is not 16-bit: " + path);
            out.sample_rate = static_cast<int>(rate);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            out.samples.resize(sz / 2);
            std::memcpy(out.samples.data(), bytes.data() + pos, out.samples.size() * 2);
            have_data = true;
        }
        pos += sz + (sz & 1);
    }
    if (!have_fmt || !have_data) throw DataError("missing fmt/data chunk in: " + path);
    if (out.sample_rate <= 0) throw DataError("invalid sample rate in: " + path);
    return out;
}

void write_wav(const std::string& path, const AudioBuffer& audio) {
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
    std::string s;
    s.reserve(44 + data_bytes);
    s.append("RIFF");
    put_u32(s, 36 + data_bytes);
    s.append("WAVE");
    s.append("fmt ");
    put_u32(s, 16);
    put_u16(s, 1);  // PCM
    put_u16(s, 1);  // mono
    put_u32(s, static_cast<std::uint32_t>(audio.sample_rate));
    put_u32(s, static_cast<std::uint32_t>(audio.sample_rate) * 2);
    put_u16(s, 2);
    put_u16(s, 16);
    s.append("data");
    put_u32(s, data_bytes);
    s.append(reinterpret_cast<const char*>(audio.samples.data()), data_bytes);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write wav file: " + path);
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!f) throw DataError("wav write failed: " + path);
}

AudioBuffer extract_segment(const AudioBuffer& audio, double start, double end) {
    const double dur = audio.duration();
    if (start < 0.0) throw DataError("start out of range: " + std::to_string(start));
    if (end > dur + 1e-9) throw DataError("end out of range: " + std::to_string(end));
    if (!(start < end)) throw DataError("empty segment: start " + std::to_string(start) +
                                    " >= end " + std::to_string(end));
    const auto n = static_cast<std::int64_t>(audio.samples.size());
    std::int64_t first = std::llround(start * audio.sample_rate);
    std::int64_t len = std::llround((end - start) * audio.sample_rate);
    if (first > n) first = n;
    if (first + len > n) len = n - first;
    AudioBuffer out;
    out.sample_rate = audio.sample_rate;
    out.samples.assign(audio.samples.begin() + first, audio.samples.begin() + first + len);
    return out;
}

}  // namespace pvt
