#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fcdiff/rng.hpp"
#include "fcdiff/spectral.hpp"
#include "fcdiff/tensor.hpp"

namespace fcdiff::filters {

enum class BandKind { Mini, Low, Mid, High, Custom };

inline const char* band_name(BandKind k) {
    switch (k) {
        case BandKind::Mini: return "mini";
        case BandKind::Low: return "low";
        case BandKind::Mid: return "mid";
        case BandKind::High: return "high";
        case BandKind::Custom: return "custom";
    }
    return "?";
}

// Binary DCT-domain mask selecting anti-diagonal frequency levels u+v.
// At 64x64 the four named kinds reproduce the reference thresholds
// (mini: <=10, low: <=20, mid: (20,40], high: >=50); other shapes scale
// the thresholds in normalized level lambda = (u+v)/(h+w-2).
struct BandMask {
    int h = 0, w = 0;
    BandKind kind = BandKind::Custom;
    std::vector<uint8_t> bits;  // h x w

    uint8_t at(int u, int v) const { return bits[(size_t)u * w + v]; }
};

inline BandMask make_mask(BandKind kind, int h, int w, int custom_lo = 0, int custom_hi = -1) {
    if (h < 1 || w < 1) throw std::invalid_argument("make_mask: dims must be >= 1");
    BandMask m;
    m.h = h;
    m.w = w;
    m.kind = kind;
    m.bits.assign((size_t)h * w, 0);
    int max_level = h + w - 2;
    if (kind == BandKind::Custom) {
        if (custom_hi < 0) custom_hi = max_level;
        if (custom_lo > custom_hi) throw std::invalid_argument("make_mask: custom lo > hi");
    }
    // Thresholds in normalized level lambda = lvl/max_level against the 64x64
    // anchors a/126; compared exactly via lvl*126 <=> a*max_level.
    auto le = [&](int lvl, int a) { return lvl * 126 <= a * max_level; };
    auto ge = [&](int lvl, int a) { return lvl * 126 >= a * max_level; };
    for (int u = 0; u < h; ++u) {
        for (int v = 0; v < w; ++v) {
            int lvl = u + v;
            bool in = false;
            switch (kind) {
                case BandKind::Mini: in = le(lvl, 10); break;
                case BandKind::Low: in = le(lvl, 20); break;
                case BandKind::Mid: in = !le(lvl, 20) && le(lvl, 40); break;
                case BandKind::High: in = ge(lvl, 50); break;
                case BandKind::Custom: in = lvl >= custom_lo && lvl <= custom_hi; break;
            }
            m.bits[(size_t)u * w + v] = in ? 1 : 0;
        }
    }
    return m;
}

inline BandMask full_mask(int h, int w) { return make_mask(BandKind::Custom, h, w, 0, h + w - 2); }

template <typename T>
Tensor<T> apply_mask(const Tensor<T>& f, const BandMask& m) {
    if (f.h != m.h || f.w != m.w) throw ShapeError("apply_mask: shape mismatch");
    Tensor<T> out(f.h, f.w, f.c);
    for (int u = 0; u < f.h; ++u)
        for (int v = 0; v < f.w; ++v) {
            if (!m.at(u, v)) continue;
            for (int k = 0; k < f.c; ++k) out.at(u, v, k) = f.at(u, v, k);
        }
    return out;
}

// Seeded permutation of coefficients within each frequency level u+v.
// Per-level multisets (and thus per-level energy) are preserved exactly.
// Channels get independent permutation streams unless shared_channels.
template <typename T>
Tensor<T> equifrequency_shuffle(const Tensor<T>& f, uint64_t seed, bool shared_channels = false) {
    require_finite(f, "equifrequency_shuffle input");
    Tensor<T> out = f;
    int max_level = f.h + f.w - 2;
    std::vector<std::pair<int, int>> pos;
    for (int lvl = 0; lvl <= max_level; ++lvl) {
        pos.clear();
        for (int u = std::max(0, lvl - (f.w - 1)); u <= std::min(f.h - 1, lvl); ++u)
            pos.emplace_back(u, lvl - u);
        if (pos.size() < 2) continue;
        for (int k = 0; k < f.c; ++k) {
            Rng rng(mix_seed(mix_seed(seed, (uint64_t)lvl), shared_channels ? 0 : (uint64_t)(k + 1)));
            // Fisher-Yates over the level's anti-diagonal
            std::vector<int> perm(pos.size());
            for (size_t i = 0; i < perm.size(); ++i) perm[i] = (int)i;
            for (size_t i = perm.size() - 1; i > 0; --i)
                std::swap(perm[i], perm[rng.next_below(i + 1)]);
            std::vector<T> vals(pos.size());
            for (size_t i = 0; i < pos.size(); ++i) vals[i] = f.at(pos[i].first, pos[i].second, k);
            for (size_t i = 0; i < pos.size(); ++i)
                out.at(pos[i].first, pos[i].second, k) = vals[perm[i]];
        }
    }
    return out;
}

// FFM: dct -> mask -> (optional shuffle) -> idct; output is the control signal.
template <typename T>
Tensor<T> ffm(const Tensor<T>& z0, const BandMask& m, std::optional<uint64_t> shuffle_seed = {},
              bool shared_channels = false) {
    require_finite(z0, "ffm input");
    if (z0.h != m.h || z0.w != m.w) throw ShapeError("ffm: mask/input shape mismatch");
    Tensor<T> f = apply_mask(spectral::dct2(z0), m);
    if (shuffle_seed) f = equifrequency_shuffle(f, *shuffle_seed, shared_channels);
    return spectral::idct2(f);
}

// energy(lvl) = sum over channels and u+v=lvl of F(u,v)^2, ascending level.
template <typename T>
std::vector<std::pair<int, double>> band_energy_profile(const Tensor<T>& f) {
    require_finite(f, "band_energy_profile input");
    std::vector<std::pair<int, double>> out;
    int max_level = f.h + f.w - 2;
    out.reserve(max_level + 1);
    std::vector<double> e(max_level + 1, 0.0);
    for (int u = 0; u < f.h; ++u)
        for (int v = 0; v < f.w; ++v)
            for (int k = 0; k < f.c; ++k) e[u + v] += (double)f.at(u, v, k) * f.at(u, v, k);
    for (int lvl = 0; lvl <= max_level; ++lvl) out.emplace_back(lvl, e[lvl]);
    return out;
}

// 1 - |M(Fx - Fy)| / |M Fx| with Frobenius norms over the masked spectra.
template <typename T>
double band_consistency(const Tensor<T>& x, const Tensor<T>& y, const BandMask& m) {
    if (!x.same_shape(y) || x.h != m.h || x.w != m.w)
        throw ShapeError("band_consistency: shape mismatch");
    Tensor<T> fx = apply_mask(spectral::dct2(x), m);
    Tensor<T> fy = apply_mask(spectral::dct2(y), m);
    double ref = 0, diff = 0;
    for (size_t i = 0; i < fx.data.size(); ++i) {
        double r = fx.data[i];
        double d = r - (double)fy.data[i];
        ref += r * r;
        diff += d * d;
    }
    if (ref == 0) throw NumericError("band_consistency: zero masked reference spectrum");
    return 1.0 - std::sqrt(diff) / std::sqrt(ref);
}

}  // namespace fcdiff::filters
