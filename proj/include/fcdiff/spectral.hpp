#pragma once

#include <cmath>
#include <vector>

#include "fcdiff/tensor.hpp"

namespace fcdiff::spectral {

// Orthonormal DCT-II basis for one dimension. basis[u*n + i] is
// sqrt(2/n) * m(u) * cos((2i+1) u pi / (2n)) with m(0) = 1/sqrt(2),
// m(g) = 1 otherwise. Row 0 is the constant vector 1/sqrt(n).
template <typename T>
struct DctPlan {
    int n = 0;
    std::vector<T> basis;  // n x n, row-major

    T at(int u, int i) const { return basis[(size_t)u * n + i]; }
};

template <typename T = float>
DctPlan<T> dct_matrix(int n) {
    if (n < 1) throw std::invalid_argument("dct_matrix: n must be >= 1");
    DctPlan<T> p;
    p.n = n;
    p.basis.resize((size_t)n * n);
    const double pi = 3.14159265358979323846;
    for (int u = 0; u < n; ++u) {
        double m = (u == 0) ? 1.0 / std::sqrt(2.0) : 1.0;
        double scale = std::sqrt(2.0 / n) * m;
        for (int i = 0; i < n; ++i)
            p.basis[(size_t)u * n + i] = (T)(scale * std::cos((2 * i + 1) * u * pi / (2.0 * n)));
    }
    return p;
}

namespace detail {

// plane = h x w contiguous, out = B_h * plane * B_w^T (forward)
// or B_h^T * plane * B_w (inverse), selected by transposing the factors.
// Accumulation is always in double so 32-bit tensors keep energy to ~1e-8
// relative even at 64x64; outputs are rounded once at the end.
inline void transform_plane(const DctPlan<double>& bh, const DctPlan<double>& bw,
                            const double* in, double* out, int h, int w, bool inverse) {
    std::vector<double> tmp((size_t)h * w);
    // tmp = (inverse ? Bh^T : Bh) * in
    for (int u = 0; u < h; ++u) {
        for (int j = 0; j < w; ++j) tmp[(size_t)u * w + j] = 0;
        for (int i = 0; i < h; ++i) {
            double b = inverse ? bh.at(i, u) : bh.at(u, i);
            const double* row = in + (size_t)i * w;
            double* trow = tmp.data() + (size_t)u * w;
            for (int j = 0; j < w; ++j) trow[j] += b * row[j];
        }
    }
    // out = tmp * (inverse ? Bw : Bw^T)
    for (int u = 0; u < h; ++u) {
        const double* trow = tmp.data() + (size_t)u * w;
        double* orow = out + (size_t)u * w;
        for (int v = 0; v < w; ++v) orow[v] = 0;
        for (int j = 0; j < w; ++j) {
            double x = trow[j];
            for (int v = 0; v < w; ++v) orow[v] += x * (inverse ? bw.at(j, v) : bw.at(v, j));
        }
    }
}

template <typename T>
Tensor<T> transform(const Tensor<T>& x, bool inverse) {
    require_finite(x, inverse ? "idct2 input" : "dct2 input");
    DctPlan<double> bh = dct_matrix<double>(x.h);
    DctPlan<double> bw = (x.w == x.h) ? bh : dct_matrix<double>(x.w);
    Tensor<T> out(x.h, x.w, x.c);
    std::vector<double> plane((size_t)x.h * x.w), res((size_t)x.h * x.w);
    for (int k = 0; k < x.c; ++k) {
        for (int i = 0; i < x.h; ++i)
            for (int j = 0; j < x.w; ++j) plane[(size_t)i * x.w + j] = (double)x.at(i, j, k);
        transform_plane(bh, bw, plane.data(), res.data(), x.h, x.w, inverse);
        for (int i = 0; i < x.h; ++i)
            for (int j = 0; j < x.w; ++j) out.at(i, j, k) = (T)res[(size_t)i * x.w + j];
    }
    return out;
}

}  // namespace detail

// Channel-wise 2D DCT-II; (0,0) is the DC coefficient at top-left.
template <typename T>
Tensor<T> dct2(const Tensor<T>& x) {
    return detail::transform(x, false);
}

// Exact inverse of dct2.
template <typename T>
Tensor<T> idct2(const Tensor<T>& f) {
    return detail::transform(f, true);
}

}  // namespace fcdiff::spectral
