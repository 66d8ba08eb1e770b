#pragma once

#include <vector>

#include "pvt/matrix.hpp"

namespace pvt {

struct LabelSequence {
    std::vector<int> symbols;  // class indices, blank excluded
    int blank_index = 0;
};

// All loss gradients are w.r.t. PRE-SOFTMAX logits (softmax Jacobian folded
// in), matching the convention backward() expects.
struct LossResult {
    double loss = 0.0;
    Mat<double> dlogits;  // [T x K]
};

// -log P(labels | posteriors) via the forward-backward recursion in log
// space. log_posteriors rows are log-probabilities. Throws DataError
// "alignment impossible" when T is too short for the label sequence.
LossResult ctc_loss(const Mat<double>& log_posteriors, const LabelSequence& labels);

// CTC over the 2-class discriminative head with labels=[positive]; the
// negative class plays the blank role. Column 0 = negative, 1 = positive.
LossResult discriminative_positive_loss(const Mat<double>& disc_log_posteriors);

// Mean form: -log((1/T) sum_t y_t^n), clamped at 1e-12.
LossResult discriminative_negative_loss(const Mat<double>& disc_log_posteriors);

struct MtlItemGrads {
    std::vector<Mat<double>> phonetic;        // one per phonetic item
    std::vector<Mat<double>> discriminative;  // one per discriminative item
};

struct MtlResult {
    double total = 0.0;
    double phonetic_mean = 0.0;
    double disc_mean = 0.0;
    MtlItemGrads grads;
};

// total = mean phonetic CTC + lambda * mean discriminative loss. Item grads
// come back scaled by 1/N (and lambda) so they sum to the total's gradient.
MtlResult mtl_loss(const std::vector<const Mat<double>*>& phonetic_log_posteriors,
                   const std::vector<LabelSequence>& phonetic_labels,
                   const std::vector<const Mat<double>*>& disc_log_posteriors,
                   const std::vector<int>& disc_positive, double lambda);

}  // namespace pvt
