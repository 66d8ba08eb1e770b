#pragma once

#include <cstdint>
#include <string>

#include "pvt/frontend.hpp"
#include "pvt/matrix.hpp"
#include "pvt/model.hpp"

namespace pvt {

// Everything needed to score audio: weights, frontend geometry, feature
// normalization, and (while training) optimizer state for exact resume.
struct Checkpoint {
    ModelConfig model;
    FrontendConfig frontend;
    std::uint64_t step = 0;
    NetParams<float> params;
    bool has_adam = false;
    NetParams<float> adam_m, adam_v;
    Mat<double> norm_mean, norm_std;  // [1 x input_dim]; empty = no normalization
};

// Container layout: "PVTC" magic, u32 format version, u64 JSON header length,
// JSON header (configs, step, tensor directory with name/shape/dtype/offset),
// then raw little-endian tensor bytes in directory order (sorted by name).
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pvt
