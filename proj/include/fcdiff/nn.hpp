#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fcdiff/rng.hpp"
#include "fcdiff/tensor.hpp"

namespace fcdiff::nn {

// kernel layout: k[((di*kw + dj)*cin + ci)*cout + co], channel-last to keep
// the co accumulation contiguous for vectorization.
template <typename T>
struct ConvLayer {
    int kh = 0, kw = 0, cin = 0, cout = 0, stride = 1;
    std::vector<T> k;
    std::vector<T> b;

    void init(int kh_, int kw_, int cin_, int cout_, int stride_ = 1) {
        kh = kh_;
        kw = kw_;
        cin = cin_;
        cout = cout_;
        stride = stride_;
        k.assign((size_t)kh * kw * cin * cout, T(0));
        b.assign(cout, T(0));
    }

    void kaiming(Rng& rng) {
        double std = std::sqrt(2.0 / ((double)kh * kw * cin));
        for (auto& v : k) v = (T)(rng.next_gaussian() * std);
        std::fill(b.begin(), b.end(), T(0));
    }

    void zero() {
        std::fill(k.begin(), k.end(), T(0));
        std::fill(b.begin(), b.end(), T(0));
    }
};

template <typename T>
struct Linear {
    int in = 0, out = 0;
    std::vector<T> w;  // w[i*out + o]
    std::vector<T> b;

    void init(int in_, int out_) {
        in = in_;
        out = out_;
        w.assign((size_t)in * out, T(0));
        b.assign(out, T(0));
    }

    void kaiming(Rng& rng) {
        double std = std::sqrt(2.0 / in);
        for (auto& v : w) v = (T)(rng.next_gaussian() * std);
        std::fill(b.begin(), b.end(), T(0));
    }

    std::vector<T> forward(const std::vector<T>& x) const {
        std::vector<T> y(b.begin(), b.end());
        for (int i = 0; i < in; ++i) {
            T xv = x[i];
            const T* wr = w.data() + (size_t)i * out;
            for (int o = 0; o < out; ++o) y[o] += xv * wr[o];
        }
        return y;
    }

    // accumulates dW/db when given; returns dx
    std::vector<T> backward(const std::vector<T>& x, const std::vector<T>& dy, Linear* grad) const {
        std::vector<T> dx(in, T(0));
        for (int i = 0; i < in; ++i) {
            const T* wr = w.data() + (size_t)i * out;
            T acc = 0;
            for (int o = 0; o < out; ++o) acc += wr[o] * dy[o];
            dx[i] = acc;
        }
        if (grad) {
            for (int i = 0; i < in; ++i) {
                T xv = x[i];
                T* gr = grad->w.data() + (size_t)i * out;
                for (int o = 0; o < out; ++o) gr[o] += xv * dy[o];
            }
            for (int o = 0; o < out; ++o) grad->b[o] += dy[o];
        }
        return dx;
    }
};

inline int conv_out_dim(int n, int k, int pad, int stride) { return (n - k + 2 * pad) / stride + 1; }

// same-padding conv, pad = (kh-1)/2; for 3x3 stride 2 on even n this halves
// the resolution, for 1x1 it is a pointwise channel mix.
template <typename T>
Tensor<T> conv_forward(const ConvLayer<T>& L, const Tensor<T>& x) {
    if (x.c != L.cin) throw ShapeError("conv_forward: channel mismatch");
    int pad = (L.kh - 1) / 2;
    int oh = conv_out_dim(x.h, L.kh, pad, L.stride);
    int ow = conv_out_dim(x.w, L.kw, pad, L.stride);
    Tensor<T> y(oh, ow, L.cout);
    for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
            T* yo = &y.at(i, j, 0);
            for (int co = 0; co < L.cout; ++co) yo[co] = L.b[co];
            for (int di = 0; di < L.kh; ++di) {
                int ii = i * L.stride + di - pad;
                if (ii < 0 || ii >= x.h) continue;
                for (int dj = 0; dj < L.kw; ++dj) {
                    int jj = j * L.stride + dj - pad;
                    if (jj < 0 || jj >= x.w) continue;
                    const T* xr = &x.at(ii, jj, 0);
                    const T* kr = L.k.data() + (size_t)((di * L.kw + dj) * L.cin) * L.cout;
                    for (int ci = 0; ci < L.cin; ++ci) {
                        T xv = xr[ci];
                        const T* kc = kr + (size_t)ci * L.cout;
                        for (int co = 0; co < L.cout; ++co) yo[co] += xv * kc[co];
                    }
                }
            }
        }
    }
    return y;
}

// dy -> dx; accumulates kernel/bias grads into *grad when given (pass
// nullptr for frozen layers where only the input gradient is needed).
template <typename T>
Tensor<T> conv_backward(const ConvLayer<T>& L, const Tensor<T>& x, const Tensor<T>& dy,
                        ConvLayer<T>* grad) {
    int pad = (L.kh - 1) / 2;
    Tensor<T> dx(x.h, x.w, x.c);
    for (int i = 0; i < dy.h; ++i) {
        for (int j = 0; j < dy.w; ++j) {
            const T* dyo = &dy.at(i, j, 0);
            for (int di = 0; di < L.kh; ++di) {
                int ii = i * L.stride + di - pad;
                if (ii < 0 || ii >= x.h) continue;
                for (int dj = 0; dj < L.kw; ++dj) {
                    int jj = j * L.stride + dj - pad;
                    if (jj < 0 || jj >= x.w) continue;
                    T* dxr = &dx.at(ii, jj, 0);
                    const T* xr = &x.at(ii, jj, 0);
                    const T* kr = L.k.data() + (size_t)((di * L.kw + dj) * L.cin) * L.cout;
                    T* gr = grad ? grad->k.data() + (size_t)((di * L.kw + dj) * L.cin) * L.cout
                                 : nullptr;
                    for (int ci = 0; ci < L.cin; ++ci) {
                        const T* kc = kr + (size_t)ci * L.cout;
                        T acc = 0;
                        for (int co = 0; co < L.cout; ++co) acc += kc[co] * dyo[co];
                        dxr[ci] += acc;
                        if (gr) {
                            T xv = xr[ci];
                            T* gc = gr + (size_t)ci * L.cout;
                            for (int co = 0; co < L.cout; ++co) gc[co] += xv * dyo[co];
                        }
                    }
                }
            }
            if (grad)
                for (int co = 0; co < L.cout; ++co) grad->b[co] += dyo[co];
        }
    }
    return dx;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> y(x.h, x.w, x.c);
    for (size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > 0 ? x.data[i] : T(0);
    return y;
}

// dx = dy where pre-activation > 0
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& pre, const Tensor<T>& dy) {
    Tensor<T> dx(pre.h, pre.w, pre.c);
    for (size_t i = 0; i < pre.data.size(); ++i)
        dx.data[i] = pre.data[i] > 0 ? dy.data[i] : T(0);
    return dx;
}

template <typename T>
Tensor<T> upsample_nearest2x(const Tensor<T>& x) {
    Tensor<T> y(x.h * 2, x.w * 2, x.c);
    for (int i = 0; i < y.h; ++i)
        for (int j = 0; j < y.w; ++j)
            for (int k = 0; k < x.c; ++k) y.at(i, j, k) = x.at(i / 2, j / 2, k);
    return y;
}

template <typename T>
Tensor<T> upsample_nearest2x_backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.h / 2, dy.w / 2, dy.c);
    for (int i = 0; i < dy.h; ++i)
        for (int j = 0; j < dy.w; ++j)
            for (int k = 0; k < dy.c; ++k) dx.at(i / 2, j / 2, k) += dy.at(i, j, k);
    return dx;
}

// y(i,j,c) += bias[c]
template <typename T>
void add_channel_bias(Tensor<T>& y, const std::vector<T>& bias) {
    for (int i = 0; i < y.h; ++i)
        for (int j = 0; j < y.w; ++j) {
            T* r = &y.at(i, j, 0);
            for (int k = 0; k < y.c; ++k) r[k] += bias[k];
        }
}

template <typename T>
std::vector<T> channel_bias_grad(const Tensor<T>& dy) {
    std::vector<T> g(dy.c, T(0));
    for (int i = 0; i < dy.h; ++i)
        for (int j = 0; j < dy.w; ++j) {
            const T* r = &dy.at(i, j, 0);
            for (int k = 0; k < dy.c; ++k) g[k] += r[k];
        }
    return g;
}

}  // namespace fcdiff::nn
