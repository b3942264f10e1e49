#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcdiff {

// Error taxonomy mapped to CLI exit codes: usage=1, data/format=2, numeric=3.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// h x w x c grid, row-major with interleaved channels:
// data[(i*w + j)*c + k]. Holds both spatial latents and DCT spectra.
template <typename T>
struct Tensor {
    int h = 0, w = 0, c = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int h_, int w_, int c_) : h(h_), w(w_), c(c_), data((size_t)h_ * w_ * c_, T(0)) {
        if (h_ < 1 || w_ < 1 || c_ < 1)
            throw ShapeError("tensor dims must be >= 1");
    }

    T& at(int i, int j, int k) { return data[((size_t)i * w + j) * c + k]; }
    const T& at(int i, int j, int k) const { return data[((size_t)i * w + j) * c + k]; }

    size_t size() const { return data.size(); }

    bool same_shape(const Tensor& o) const { return h == o.h && w == o.w && c == o.c; }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite((double)v)) return false;
        return true;
    }

    double sq_norm() const {
        double s = 0;
        for (T v : data) s += (double)v * v;
        return s;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> r(h, w, c);
        for (size_t i = 0; i < data.size(); ++i) r.data[i] = (U)data[i];
        return r;
    }
};

using SpatialTensor = Tensor<float>;
using SpectralTensor = Tensor<float>;

template <typename T>
void require_finite(const Tensor<T>& t, const char* what) {
    if (!t.all_finite()) throw NumericError(std::string("non-finite values in ") + what);
}

}  // namespace fcdiff
