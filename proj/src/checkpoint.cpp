#include "pvt/checkpoint.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <map>
#include <vector>

#include <json.hpp>

#include "pvt/error.hpp"

namespace pvt {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'P', 'V', 'T', 'C'};
constexpr std::uint32_t kVersion = 1;

json model_to_json(const ModelConfig& m) {
    return json{{"num_layers", m.num_layers},
                {"hidden", m.hidden},
                {"input_dim", m.input_dim},
                {"phonetic_classes", m.phonetic_classes},
                {"discriminative_classes", m.discriminative_classes}};
}

ModelConfig model_from_json(const json& j) {
    ModelConfig m;
    m.num_layers = j.at("num_layers");
    m.hidden = j.at("hidden");
    m.input_dim = j.at("input_dim");
    m.phonetic_classes = j.at("phonetic_classes");
    m.discriminative_classes = j.at("discriminative_classes");
    return m;
}

json frontend_to_json(const FrontendConfig& f) {
    return json{{"sample_rate", f.sample_rate}, {"window_ms", f.window_ms},
                {"hop_ms", f.hop_ms},           {"fft_size", f.fft_size},
                {"mel_bins", f.mel_bins},       {"fmin_hz", f.fmin_hz},
                {"fmax_hz", f.fmax_hz},         {"log_floor", f.log_floor},
                {"stack_size", f.stack_size},   {"downsample", f.downsample}};
}

FrontendConfig frontend_from_json(const json& j) {
    FrontendConfig f;
    f.sample_rate = j.at("sample_rate");
    f.window_ms = j.at("window_ms");
    f.hop_ms = j.at("hop_ms");
    f.fft_size = j.at("fft_size");
    f.mel_bins = j.at("mel_bins");
    f.fmin_hz = j.at("fmin_hz");
    f.fmax_hz = j.at("fmax_hz");
    f.log_floor = j.at("log_floor");
    f.stack_size = j.at("stack_size");
    f.downsample = j.at("downsample");
    return f;
}

struct NamedTensor {
    std::string name;
    const void* data;
    int rows, cols;
    const char* dtype;  // "f32" or "f64"
    std::size_t nbytes;
};

template <typename S>
void collect(const NetParams<S>& p, const std::string& prefix, std::vector<NamedTensor>& out) {
    const char* dt = sizeof(S) == 4 ? "f32" : "f64";
    p.visit([&](const std::string& name, const Mat<S>& m) {
        out.push_back({prefix + name, m.v.data(), m.rows, m.cols, dt, m.v.size() * sizeof(S)});
    });
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::vector<NamedTensor> tensors;
    collect(ckpt.params, "", tensors);
    if (ckpt.has_adam) {
        collect(ckpt.adam_m, "adam.m.", tensors);
        collect(ckpt.adam_v, "adam.v.", tensors);
    }
    if (!ckpt.norm_mean.empty()) {
        tensors.push_back({"norm.mean", ckpt.norm_mean.v.data(), ckpt.norm_mean.rows,
                           ckpt.norm_mean.cols, "f64", ckpt.norm_mean.v.size() * sizeof(double)});
        tensors.push_back({"norm.std", ckpt.norm_std.v.data(), ckpt.norm_std.rows,
                           ckpt.norm_std.cols, "f64", ckpt.norm_std.v.size() * sizeof(double)});
    }
    std::sort(tensors.begin(), tensors.end(),
              [](const NamedTensor& a, const NamedTensor& b) { return a.name < b.name; });

    json dir = json::array();
    std::size_t offset = 0;
    for (const auto& t : tensors) {
        dir.push_back(json{{"name", t.name},
                           {"rows", t.rows},
                           {"cols", t.cols},
                           {"dtype", t.dtype},
                           {"offset", offset},
                           {"nbytes", t.nbytes}});
        offset += t.nbytes;
    }
    const json header{{"format", "pvtc"},
                      {"step", ckpt.step},
                      {"has_adam", ckpt.has_adam},
                      {"model", model_to_json(ckpt.model)},
                      {"frontend", frontend_to_json(ckpt.frontend)},
                      {"tensors", dir}};
    const std::string hs = header.dump();

    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DataError("cannot write checkpoint: " + path);
    bool ok = std::fwrite(kMagic, 1, 4, f) == 4;
    const std::uint32_t ver = kVersion;
    const std::uint64_t hlen = hs.size();
    ok = ok && std::fwrite(&ver, sizeof(ver), 1, f) == 1;
    ok = ok && std::fwrite(&hlen, sizeof(hlen), 1, f) == 1;
    ok = ok && std::fwrite(hs.data(), 1, hs.size(), f) == hs.size();
    for (const auto& t : tensors)
        ok = ok && std::fwrite(t.data, 1, t.nbytes, f) == t.nbytes;
    ok = std::fclose(f) == 0 && ok;
    if (!ok) throw DataError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw DataError("cannot open checkpoint: " + path);
    char magic[4];
    std::uint32_t ver = 0;
    std::uint64_t hlen = 0;
    if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        std::fclose(f);
        throw DataError("not a checkpoint file: " + path);
    }
    if (std::fread(&ver, sizeof(ver), 1, f) != 1 || ver != kVersion) {
        std::fclose(f);
        throw DataError("unsupported checkpoint version in: " + path);
    }
    if (std::fread(&hlen, sizeof(hlen), 1, f) != 1 || hlen > (1u << 26)) {
        std::fclose(f);
        throw DataError("corrupt checkpoint header in: " + path);
    }
    std::string hs(hlen, '\0');
    if (std::fread(hs.data(), 1, hlen, f) != hlen) {
        std::fclose(f);
        throw DataError("truncated checkpoint header in: " + path);
    }
    json header;
    try {
        header = json::parse(hs);
    } catch (const json::exception& e) {
        std::fclose(f);
        throw DataError("bad checkpoint header json in " + path + ": " + e.what());
    }

    Checkpoint ckpt;
    ckpt.model = model_from_json(header.at("model"));
    ckpt.frontend = frontend_from_json(header.at("frontend"));
    ckpt.step = header.at("step");
    ckpt.has_adam = header.value("has_adam", false);
    ckpt.params = NetParams<float>::zeros(ckpt.model);
    if (ckpt.has_adam) {
        ckpt.adam_m = NetParams<float>::zeros(ckpt.model);
        ckpt.adam_v = NetParams<float>::zeros(ckpt.model);
    }

    std::map<std::string, Mat<float>*> f32;
    auto index32 = [&](NetParams<float>& p, const std::string& prefix) {
        p.visit([&](const std::string& name, Mat<float>& m) { f32[prefix + name] = &m; });
    };
    index32(ckpt.params, "");
    if (ckpt.has_adam) {
        index32(ckpt.adam_m, "adam.m.");
        index32(ckpt.adam_v, "adam.v.");
    }

    const long blob_start = std::ftell(f);
    bool ok = blob_start >= 0;
    for (const auto& t : header.at("tensors")) {
        const std::string name = t.at("name");
        const std::string dtype = t.at("dtype");
        const int rows = t.at("rows"), cols = t.at("cols");
        const std::size_t off = t.at("offset"), nbytes = t.at("nbytes");
        ok = ok && std::fseek(f, blob_start + static_cast<long>(off), SEEK_SET) == 0;
        if (dtype == "f32" && f32.count(name)) {
            Mat<float>* m = f32[name];
            if (m->rows != rows || m->cols != cols || m->v.size() * 4 != nbytes) {
                std::fclose(f);
                throw DataError("checkpoint tensor shape mismatch: " + name);
            }
            ok = ok && std::fread(m->data(), 1, nbytes, f) == nbytes;
        } else if (dtype == "f64" && (name == "norm.mean" || name == "norm.std")) {
            Mat<double>& m = name == "norm.mean" ? ckpt.norm_mean : ckpt.norm_std;
            m = Mat<double>(rows, cols);
            ok = ok && std::fread(m.data(), 1, nbytes, f) == nbytes;
        } else {
            std::fclose(f);
            throw DataError("unknown checkpoint tensor: " + name);
        }
    }
    std::fclose(f);
    if (!ok) throw DataError("truncated checkpoint blob in: " + path);
    return ckpt;
}

}  // namespace pvt
