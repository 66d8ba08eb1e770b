#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pvt/matrix.hpp"

namespace pvt {

struct ModelConfig {
    int num_layers = 2;       // paper-scale runs use 4
    int hidden = 64;          // per direction; paper-scale 256
    int input_dim = 280;      // 40 mel x 7 stacked frames
    int phonetic_classes = 23;
    int discriminative_classes = 2;
};

// Gate packing inside every [4H x *] LSTM matrix: rows [0,H) input gate,
// [H,2H) forget gate, [2H,3H) cell candidate, [3H,4H) output gate.
template <typename S>
struct DirParams {
    Mat<S> wx;  // [4H x D_in]
    Mat<S> wh;  // [4H x H]
    Mat<S> b;   // [4H x 1]
};

template <typename S>
struct LayerParams {
    DirParams<S> fwd, bwd;
};

// Full parameter set. visit() enumerates tensors in a fixed order; that order
// is the contract for init, Adam state, and the checkpoint tensor directory.
template <typename S>
struct NetParams {
    ModelConfig cfg;
    std::vector<LayerParams<S>> layers;
    Mat<S> head_phon_w, head_phon_b;  // [Kp x 2H], [Kp x 1]
    Mat<S> head_disc_w, head_disc_b;  // [2 x 2H],  [2 x 1]

    template <typename Fn>
    void visit(Fn&& fn) {
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const std::string base = "layer" + std::to_string(l) + ".";
            fn(base + "fwd.wx", layers[l].fwd.wx);
            fn(base + "fwd.wh", layers[l].fwd.wh);
            fn(base + "fwd.b", layers[l].fwd.b);
            fn(base + "bwd.wx", layers[l].bwd.wx);
            fn(base + "bwd.wh", layers[l].bwd.wh);
            fn(base + "bwd.b", layers[l].bwd.b);
        }
        fn(std::string("head.phonetic.w"), head_phon_w);
        fn(std::string("head.phonetic.b"), head_phon_b);
        fn(std::string("head.disc.w"), head_disc_w);
        fn(std::string("head.disc.b"), head_disc_b);
    }
    template <typename Fn>
    void visit(Fn&& fn) const {
        const_cast<NetParams*>(this)->visit(
            [&](const std::string& name, Mat<S>& m) { fn(name, static_cast<const Mat<S>&>(m)); });
    }

    template <typename T>
    NetParams<T> cast() const {
        NetParams<T> out = NetParams<T>::zeros(cfg);
        std::vector<const Mat<S>*> src;
        visit([&](const std::string&, const Mat<S>& m) { src.push_back(&m); });
        std::size_t i = 0;
        out.visit([&](const std::string&, Mat<T>& m) { m = src[i++]->template cast<T>(); });
        return out;
    }

    static NetParams zeros(const ModelConfig& cfg);
};

// Per-frame class posteriors (each row sums to 1) plus their logs for losses.
struct FramePosteriors {
    Mat<double> phonetic;            // [T x Kp]
    Mat<double> discriminative;      // [T x 2]; col 0 negative, col 1 positive
    Mat<double> log_phonetic;
    Mat<double> log_discriminative;
};

// Activations kept from a training-mode forward pass for BPTT.
template <typename S>
struct ForwardCache {
    struct DirCache {
        Mat<S> i, f, g, o, c, tc, h;  // each [T x H]; tc = tanh(c)
    };
    struct LayerCache {
        Mat<S> input;  // [T x D_in]
        DirCache fwd, bwd;
    };
    std::vector<LayerCache> layers;
    Mat<S> top;  // [T x 2H] concat of final-layer fwd/bwd h
};

// Deterministic Glorot-uniform init, forget-gate biases at 1.0.
NetParams<float> init_params(const ModelConfig& cfg, std::uint64_t seed);

// x is [T x input_dim]. Pass cache to keep activations for backward().
template <typename S>
FramePosteriors forward(const NetParams<S>& p, const Mat<S>& x, ForwardCache<S>* cache = nullptr);

// Gradients w.r.t. PRE-SOFTMAX logits of each head (the softmax Jacobian is
// folded into the loss gradients). Returns parameter gradients.
template <typename S>
NetParams<S> backward(const NetParams<S>& p, const ForwardCache<S>& cache,
                      const Mat<double>& dlogits_phon, const Mat<double>& dlogits_disc);

}  // namespace pvt
