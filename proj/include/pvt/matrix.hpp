#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace pvt {

// Dense row-major matrix. Plain storage; the hot paths below are hand-rolled
// so numeric order is fixed and results do not depend on thread count.
template <typename S>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<S> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, S(0)) {}

    S* operator[](int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
    const S* operator[](int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }

    S* data() { return v.data(); }
    const S* data() const { return v.data(); }
    std::size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }

    void fill(S x) { std::fill(v.begin(), v.end(), x); }

    bool operator==(const Mat& o) const {
        return rows == o.rows && cols == o.cols && v == o.v;
    }

    template <typename T>
    Mat<T> cast() const {
        Mat<T> out(rows, cols);
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<T>(v[i]);
        return out;
    }
};

namespace kern {

// Dot product with four fixed accumulators. The explicit reassociation lets
// the compiler vectorize while keeping one deterministic summation order.
template <typename S>
inline S dot(const S* a, const S* b, int n) {
    S acc0 = S(0), acc1 = S(0), acc2 = S(0), acc3 = S(0);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 += a[i] * b[i];
        acc1 += a[i + 1] * b[i + 1];
        acc2 += a[i + 2] * b[i + 2];
        acc3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) acc0 += a[i] * b[i];
    return ((acc0 + acc1) + (acc2 + acc3));
}

// y += W x, W is [m x n] row-major.
template <typename S>
inline void matvec_acc(S* y, const Mat<S>& W, const S* x) {
    const int m = W.rows, n = W.cols;
    for (int r = 0; r < m; ++r) y[r] += dot(W[r], x, n);
}

// x += W^T g.
template <typename S>
inline void matvec_t_acc(S* x, const Mat<S>& W, const S* g) {
    const int m = W.rows, n = W.cols;
    for (int r = 0; r < m; ++r) {
        const S gr = g[r];
        if (gr == S(0)) continue;
        const S* wr = W[r];
        for (int c = 0; c < n; ++c) x[c] += gr * wr[c];
    }
}

// dW += g x^T.
template <typename S>
inline void outer_acc(Mat<S>& dW, const S* g, const S* x) {
    const int m = dW.rows, n = dW.cols;
    for (int r = 0; r < m; ++r) {
        const S gr = g[r];
        if (gr == S(0)) continue;
        S* dr = dW[r];
        for (int c = 0; c < n; ++c) dr[c] += gr * x[c];
    }
}

template <typename S>
inline void axpy(S* y, S a, const S* x, int n) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace kern
}  // namespace pvt
