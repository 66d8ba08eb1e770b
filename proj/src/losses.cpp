#include "pvt/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pvt/error.hpp"

namespace pvt {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double logsumexp2(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double logsumexp3(double a, double b, double c) { return logsumexp2(logsumexp2(a, b), c); }

}  // namespace

LossResult ctc_loss(const Mat<double>& log_posteriors, const LabelSequence& labels) {
    const int T = log_posteriors.rows, K = log_posteriors.cols;
    const int L = static_cast<int>(labels.symbols.size());
    const int blank = labels.blank_index;
    if (T < 1 || K < 2) throw DataError("ctc_loss: posterior matrix too small");
    if (L < 1) throw DataError("ctc_loss: empty label sequence");
    if (blank < 0 || blank >= K) throw DataError("ctc_loss: blank index out of range");
    int repeats = 0;
    for (int i = 0; i < L; ++i) {
        if (labels.symbols[i] < 0 || labels.symbols[i] >= K || labels.symbols[i] == blank)
            throw DataError("ctc_loss: invalid label symbol " + std::to_string(labels.symbols[i]));
        if (i > 0 && labels.symbols[i] == labels.symbols[i - 1]) ++repeats;
    }
    if (T < L + repeats)
        throw DataError("ctc_loss: alignment impossible: T=" + std::to_string(T) + " < minimum " +
                        std::to_string(L + repeats));

    // Blank-augmented sequence: blank, s1, blank, s2, ..., blank.
    const int S = 2 * L + 1;
    std::vector<int> sym(S, blank);
    for (int i = 0; i < L; ++i) sym[2 * i + 1] = labels.symbols[i];
    auto allows_skip = [&](int s) { return s >= 2 && sym[s] != blank && sym[s] != sym[s - 2]; };

    Mat<double> alpha(T, S), beta(T, S);
    alpha.fill(kNegInf);
    beta.fill(kNegInf);
    alpha[0][0] = log_posteriors[0][sym[0]];
    if (S > 1) alpha[0][1] = log_posteriors[0][sym[1]];
    for (int t = 1; t < T; ++t)
        for (int s = 0; s < S; ++s) {
            double acc = alpha[t - 1][s];
            if (s >= 1) acc = logsumexp2(acc, alpha[t - 1][s - 1]);
            if (allows_skip(s)) acc = logsumexp2(acc, alpha[t - 1][s - 2]);
            alpha[t][s] = acc == kNegInf ? kNegInf : acc + log_posteriors[t][sym[s]];
        }

    const double log_p = S > 1 ? logsumexp2(alpha[T - 1][S - 1], alpha[T - 1][S - 2])
                               : alpha[T - 1][S - 1];
    if (log_p == kNegInf) throw NumericError("ctc_loss: zero-probability alignment");

    beta[T - 1][S - 1] = 0.0;
    if (S > 1) beta[T - 1][S - 2] = 0.0;
    for (int t = T - 2; t >= 0; --t)
        for (int s = 0; s < S; ++s) {
            double acc = beta[t + 1][s] == kNegInf
                             ? kNegInf
                             : beta[t + 1][s] + log_posteriors[t + 1][sym[s]];
            if (s + 1 < S && beta[t + 1][s + 1] != kNegInf)
                acc = logsumexp2(acc, beta[t + 1][s + 1] + log_posteriors[t + 1][sym[s + 1]]);
            if (s + 2 < S && allows_skip(s + 2) && beta[t + 1][s + 2] != kNegInf)
                acc = logsumexp2(acc, beta[t + 1][s + 2] + log_posteriors[t + 1][sym[s + 2]]);
            beta[t][s] = acc;
        }

    // grad w.r.t. logits: softmax - state occupancy.
    LossResult out;
    out.loss = -log_p;
    out.dlogits = Mat<double>(T, K);
    std::vector<double> occ(K);
    for (int t = 0; t < T; ++t) {
        std::fill(occ.begin(), occ.end(), kNegInf);
        for (int s = 0; s < S; ++s)
            if (alpha[t][s] != kNegInf && beta[t][s] != kNegInf)
                occ[sym[s]] = logsumexp2(occ[sym[s]], alpha[t][s] + beta[t][s]);
        for (int k = 0; k < K; ++k) {
            const double gamma = occ[k] == kNegInf ? 0.0 : std::exp(occ[k] - log_p);
            out.dlogits[t][k] = std::exp(log_posteriors[t][k]) - gamma;
        }
    }
    return out;
}

LossResult discriminative_positive_loss(const Mat<double>& disc_log_posteriors) {
    if (disc_log_posteriors.cols != 2)
        throw DataError("discriminative_positive_loss: expected 2 columns");
    LabelSequence labels;
    labels.symbols = {1};
    labels.blank_index = 0;
    return ctc_loss(disc_log_posteriors, labels);
}

LossResult discriminative_negative_loss(const Mat<double>& disc_log_posteriors) {
    const int T = disc_log_posteriors.rows;
    if (disc_log_posteriors.cols != 2)
        throw DataError("discriminative_negative_loss: expected 2 columns");
    if (T < 1) throw DataError("discriminative_negative_loss: empty input");
    double mean = 0.0;
    for (int t = 0; t < T; ++t) mean += std::exp(disc_log_posteriors[t][0]);
    mean /= T;
    const double clamped = std::max(mean, 1e-12);

    LossResult out;
    out.loss = -std::log(clamped);
    out.dlogits = Mat<double>(T, 2);
    const double dmean = -1.0 / (T * clamped);  // dL/dy_t^n
    for (int t = 0; t < T; ++t) {
        const double yn = std::exp(disc_log_posteriors[t][0]);
        const double yp = std::exp(disc_log_posteriors[t][1]);
        out.dlogits[t][0] = dmean * yn * (1.0 - yn);
        out.dlogits[t][1] = -dmean * yn * yp;
    }
    return out;
}

MtlResult mtl_loss(const std::vector<const Mat<double>*>& phonetic_log_posteriors,
                   const std::vector<LabelSequence>& phonetic_labels,
                   const std::vector<const Mat<double>*>& disc_log_posteriors,
                   const std::vector<int>& disc_positive, double lambda) {
    const std::size_t np = phonetic_log_posteriors.size(), nd = disc_log_posteriors.size();
    if (np != phonetic_labels.size() || nd != disc_positive.size())
        throw DataError("mtl_loss: item/label count mismatch");
    if (np == 0 && nd == 0) throw DataError("mtl_loss: empty batch");

    MtlResult out;
    for (std::size_t i = 0; i < np; ++i) {
        auto r = ctc_loss(*phonetic_log_posteriors[i], phonetic_labels[i]);
        out.phonetic_mean += r.loss / np;
        for (auto& v : r.dlogits.v) v /= static_cast<double>(np);
        out.grads.phonetic.push_back(std::move(r.dlogits));
    }
    for (std::size_t i = 0; i < nd; ++i) {
        auto r = disc_positive[i] ? discriminative_positive_loss(*disc_log_posteriors[i])
                                  : discriminative_negative_loss(*disc_log_posteriors[i]);
        out.disc_mean += r.loss / nd;
        for (auto& v : r.dlogits.v) v *= lambda / static_cast<double>(nd);
        out.grads.discriminative.push_back(std::move(r.dlogits));
    }
    out.total = out.phonetic_mean + lambda * out.disc_mean;
    return out;
}

}  // namespace pvt
