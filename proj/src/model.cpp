#include "pvt/model.hpp"

#include <cmath>
#include <string>

#include "pvt/error.hpp"
#include "pvt/rng.hpp"

namespace pvt {
namespace {

template <typename S>
inline S sigmoid(S x) {
    return S(1) / (S(1) + std::exp(-x));
}

// Row-wise log-softmax in double regardless of the compute scalar.
template <typename S>
void head_posteriors(const Mat<S>& top, const Mat<S>& w, const Mat<S>& b, Mat<double>& probs,
                     Mat<double>& logp) {
    const int T = top.rows, K = w.rows;
    probs = Mat<double>(T, K);
    logp = Mat<double>(T, K);
    std::vector<S> logits(K);
    for (int t = 0; t < T; ++t) {
        for (int k = 0; k < K; ++k) logits[k] = b[k][0];
        kern::matvec_acc(logits.data(), w, top[t]);
        double mx = static_cast<double>(logits[0]);
        for (int k = 1; k < K; ++k) mx = std::max(mx, static_cast<double>(logits[k]));
        double z = 0.0;
        for (int k = 0; k < K; ++k) z += std::exp(static_cast<double>(logits[k]) - mx);
        const double log_z = mx + std::log(z);
        for (int k = 0; k < K; ++k) {
            logp[t][k] = static_cast<double>(logits[k]) - log_z;
            probs[t][k] = std::exp(logp[t][k]);
        }
    }
}

}  // namespace

template <typename S>
NetParams<S> NetParams<S>::zeros(const ModelConfig& cfg) {
    NetParams<S> p;
    p.cfg = cfg;
    const int H = cfg.hidden;
    p.layers.resize(cfg.num_layers);
    for (int l = 0; l < cfg.num_layers; ++l) {
        const int d_in = l == 0 ? cfg.input_dim : 2 * H;
        for (DirParams<S>* dir : {&p.layers[l].fwd, &p.layers[l].bwd}) {
            dir->wx = Mat<S>(4 * H, d_in);
            dir->wh = Mat<S>(4 * H, H);
            dir->b = Mat<S>(4 * H, 1);
        }
    }
    p.head_phon_w = Mat<S>(cfg.phonetic_classes, 2 * H);
    p.head_phon_b = Mat<S>(cfg.phonetic_classes, 1);
    p.head_disc_w = Mat<S>(cfg.discriminative_classes, 2 * H);
    p.head_disc_b = Mat<S>(cfg.discriminative_classes, 1);
    return p;
}

NetParams<float> init_params(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.num_layers <= 0 || cfg.hidden <= 0 || cfg.input_dim <= 0 ||
        cfg.phonetic_classes <= 0 || cfg.discriminative_classes != 2)
        throw DataError("init_params: invalid model config");
    auto p = NetParams<float>::zeros(cfg);
    Rng rng(derive_seed(seed, "model-init"));
    const int H = cfg.hidden;
    p.visit([&](const std::string& name, Mat<float>& m) {
        const bool is_bias = name.ends_with(".b");
        if (is_bias) {
            m.fill(0.0f);
            if (name.find("head.") == std::string::npos)
                for (int r = H; r < 2 * H; ++r) m[r][0] = 1.0f;  // forget gate
            return;
        }
        const double r = std::sqrt(6.0 / (m.rows + m.cols));
        for (auto& v : m.v) v = static_cast<float>(rng.uniform(-r, r));
    });
    return p;
}

template <typename S>
FramePosteriors forward(const NetParams<S>& p, const Mat<S>& x, ForwardCache<S>* cache) {
    const ModelConfig& cfg = p.cfg;
    if (x.cols != cfg.input_dim)
        throw DataError("forward: input dim mismatch: expected " + std::to_string(cfg.input_dim) +
                        ", got " + std::to_string(x.cols));
    if (x.rows < 1) throw DataError("forward: empty input sequence");
    const int T = x.rows, H = cfg.hidden;

    ForwardCache<S> local;
    ForwardCache<S>& cc = cache ? *cache : local;
    cc.layers.assign(cfg.num_layers, {});

    Mat<S> input = x;
    for (int l = 0; l < cfg.num_layers; ++l) {
        auto& lc = cc.layers[l];
        lc.input = input;
        Mat<S> output(T, 2 * H);
        for (int d = 0; d < 2; ++d) {
            const DirParams<S>& dp = d == 0 ? p.layers[l].fwd : p.layers[l].bwd;
            auto& dc = d == 0 ? lc.fwd : lc.bwd;
            for (Mat<S>* m : {&dc.i, &dc.f, &dc.g, &dc.o, &dc.c, &dc.tc, &dc.h})
                *m = Mat<S>(T, H);
            std::vector<S> z(4 * H);
            const S* h_prev = nullptr;
            const S* c_prev = nullptr;
            for (int step = 0; step < T; ++step) {
                const int t = d == 0 ? step : T - 1 - step;
                for (int r = 0; r < 4 * H; ++r) z[r] = dp.b[r][0];
                kern::matvec_acc(z.data(), dp.wx, lc.input[t]);
                if (h_prev) kern::matvec_acc(z.data(), dp.wh, h_prev);
                for (int j = 0; j < H; ++j) {
                    const S iv = sigmoid(z[j]);
                    const S fv = sigmoid(z[H + j]);
                    const S gv = std::tanh(z[2 * H + j]);
                    const S ov = sigmoid(z[3 * H + j]);
                    const S cv = (c_prev ? fv * c_prev[j] : S(0)) + iv * gv;
                    const S tcv = std::tanh(cv);
                    dc.i[t][j] = iv;
                    dc.f[t][j] = fv;
                    dc.g[t][j] = gv;
                    dc.o[t][j] = ov;
                    dc.c[t][j] = cv;
                    dc.tc[t][j] = tcv;
                    dc.h[t][j] = ov * tcv;
                }
                h_prev = dc.h[t];
                c_prev = dc.c[t];
            }
            for (int t = 0; t < T; ++t)
                for (int j = 0; j < H; ++j) output[t][d * H + j] = dc.h[t][j];
        }
        input = std::move(output);
    }
    cc.top = std::move(input);

    FramePosteriors out;
    head_posteriors(cc.top, p.head_phon_w, p.head_phon_b, out.phonetic, out.log_phonetic);
    head_posteriors(cc.top, p.head_disc_w, p.head_disc_b, out.discriminative,
                    out.log_discriminative);
    return out;
}

template <typename S>
NetParams<S> backward(const NetParams<S>& p, const ForwardCache<S>& cache,
                      const Mat<double>& dlogits_phon, const Mat<double>& dlogits_disc) {
    const ModelConfig& cfg = p.cfg;
    const int T = cache.top.rows, H = cfg.hidden;
    if (dlogits_phon.rows != T || dlogits_phon.cols != cfg.phonetic_classes ||
        dlogits_disc.rows != T || dlogits_disc.cols != cfg.discriminative_classes)
        throw DataError("backward: gradient shape mismatch");

    auto grads = NetParams<S>::zeros(cfg);

    // Head gradients and the combined gradient flowing into the trunk.
    Mat<S> dtop(T, 2 * H);
    std::vector<S> dl(std::max(cfg.phonetic_classes, 2));
    for (int t = 0; t < T; ++t) {
        for (int k = 0; k < cfg.phonetic_classes; ++k) dl[k] = static_cast<S>(dlogits_phon[t][k]);
        kern::outer_acc(grads.head_phon_w, dl.data(), cache.top[t]);
        for (int k = 0; k < cfg.phonetic_classes; ++k) grads.head_phon_b[k][0] += dl[k];
        kern::matvec_t_acc(dtop[t], p.head_phon_w, dl.data());
        for (int k = 0; k < 2; ++k) dl[k] = static_cast<S>(dlogits_disc[t][k]);
        kern::outer_acc(grads.head_disc_w, dl.data(), cache.top[t]);
        for (int k = 0; k < 2; ++k) grads.head_disc_b[k][0] += dl[k];
        kern::matvec_t_acc(dtop[t], p.head_disc_w, dl.data());
    }

    Mat<S> dout = std::move(dtop);  // gradient w.r.t. the current layer's output
    for (int l = cfg.num_layers - 1; l >= 0; --l) {
        const auto& lc = cache.layers[l];
        Mat<S> dinput(T, lc.input.cols);
        std::vector<S> dz(4 * H), dh(H), dc(H), dc_next(H), dh_next(H);
        for (int d = 0; d < 2; ++d) {
            const DirParams<S>& dp = d == 0 ? p.layers[l].fwd : p.layers[l].bwd;
            DirParams<S>& dg = d == 0 ? grads.layers[l].fwd : grads.layers[l].bwd;
            const auto& dcch = d == 0 ? lc.fwd : lc.bwd;
            std::fill(dc_next.begin(), dc_next.end(), S(0));
            std::fill(dh_next.begin(), dh_next.end(), S(0));
            for (int step = T - 1; step >= 0; --step) {
                // walk time in reverse of this direction's forward order
                const int t = d == 0 ? step : T - 1 - step;
                const int t_prev = d == 0 ? t - 1 : t + 1;
                const bool has_prev = d == 0 ? t > 0 : t < T - 1;
                const S* c_prev = has_prev ? dcch.c[t_prev] : nullptr;
                for (int j = 0; j < H; ++j) {
                    dh[j] = dout[t][d * H + j] + dh_next[j];
                    const S tcv = dcch.tc[t][j];
                    const S dov = dh[j] * tcv;
                    dc[j] = dc_next[j] + dh[j] * dcch.o[t][j] * (S(1) - tcv * tcv);
                    const S iv = dcch.i[t][j], fv = dcch.f[t][j], gv = dcch.g[t][j],
                            ov = dcch.o[t][j];
                    dz[j] = dc[j] * gv * iv * (S(1) - iv);
                    dz[H + j] = (c_prev ? dc[j] * c_prev[j] : S(0)) * fv * (S(1) - fv);
                    dz[2 * H + j] = dc[j] * iv * (S(1) - gv * gv);
                    dz[3 * H + j] = dov * ov * (S(1) - ov);
                    dc_next[j] = dc[j] * fv;
                }
                for (int r = 0; r < 4 * H; ++r) dg.b[r][0] += dz[r];
                kern::outer_acc(dg.wx, dz.data(), lc.input[t]);
                kern::matvec_t_acc(dinput[t], dp.wx, dz.data());
                std::fill(dh_next.begin(), dh_next.end(), S(0));
                if (has_prev) {
                    kern::outer_acc(dg.wh, dz.data(), dcch.h[t_prev]);
                    kern::matvec_t_acc(dh_next.data(), dp.wh, dz.data());
                }
            }
        }
        dout = std::move(dinput);  // for l>0 this is [T x 2H]: fwd/bwd halves of the layer below
    }
    return grads;
}

template struct NetParams<float>;
template struct NetParams<double>;
template FramePosteriors forward<float>(const NetParams<float>&, const Mat<float>&,
                                        ForwardCache<float>*);
template FramePosteriors forward<double>(const NetParams<double>&, const Mat<double>&,
                                         ForwardCache<double>*);
template NetParams<float> backward<float>(const NetParams<float>&, const ForwardCache<float>&,
                                          const Mat<double>&, const Mat<double>&);
template NetParams<double> backward<double>(const NetParams<double>&, const ForwardCache<double>&,
                                            const Mat<double>&, const Mat<double>&);

}  // namespace pvt
