#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "fcdiff/rng.hpp"
#include "fcdiff/tensor.hpp"

namespace fcdiff::diffusion {

// beta/alpha/alpha_bar tables indexed 1..T; index 0 holds the t=0
// convention alpha_bar[0] = 1 used by the DDIM final step.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta, alpha, alpha_bar;
};

inline NoiseSchedule make_schedule(int T, double beta_min, double beta_max) {
    if (T < 1 || beta_min <= 0 || beta_max >= 1 || beta_min > beta_max)
        throw std::invalid_argument("make_schedule: need T >= 1 and 0 < beta_min <= beta_max < 1");
    NoiseSchedule s;
    s.T = T;
    s.beta.resize(T + 1);
    s.alpha.resize(T + 1);
    s.alpha_bar.resize(T + 1);
    s.beta[0] = 0;
    s.alpha[0] = 1;
    s.alpha_bar[0] = 1;
    double prod = 1;
    for (int t = 1; t <= T; ++t) {
        double frac = (T == 1) ? 0.0 : (double)(t - 1) / (T - 1);
        s.beta[t] = beta_min + (beta_max - beta_min) * frac;
        s.alpha[t] = 1.0 - s.beta[t];
        prod *= s.alpha[t];
        s.alpha_bar[t] = prod;
    }
    return s;
}

struct SamplerConfig {
    int num_steps = 50;
    double eta = 0.0;
};

template <typename T>
Tensor<T> gaussian_like(int h, int w, int c, Rng& rng) {
    Tensor<T> t(h, w, c);
    for (auto& v : t.data) v = (T)rng.next_gaussian();
    return t;
}

// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps
template <typename T>
Tensor<T> q_sample(const Tensor<T>& z0, int t, const Tensor<T>& eps, const NoiseSchedule& sched) {
    if (t < 1 || t > sched.T) throw std::out_of_range("q_sample: t out of schedule range");
    if (!z0.same_shape(eps)) throw ShapeError("q_sample: z0/eps shape mismatch");
    double a = std::sqrt(sched.alpha_bar[t]);
    double b = std::sqrt(1.0 - sched.alpha_bar[t]);
    Tensor<T> out(z0.h, z0.w, z0.c);
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = (T)(a * z0.data[i] + b * eps.data[i]);
    return out;
}

// Single DDIM update from t to t_prev (t_prev = 0 returns the z0 estimate).
// Deterministic at eta = 0; rng is consulted only when eta > 0.
template <typename T>
Tensor<T> ddim_step(const Tensor<T>& z_t, int t, int t_prev, const Tensor<T>& eps_hat,
                    const NoiseSchedule& sched, double eta = 0.0, Rng* rng = nullptr) {
    if (!(t > t_prev && t_prev >= 0 && t <= sched.T))
        throw std::invalid_argument("ddim_step: need T >= t > t_prev >= 0");
    if (!z_t.same_shape(eps_hat)) throw ShapeError("ddim_step: shape mismatch");
    double ab_t = sched.alpha_bar[t];
    double ab_p = sched.alpha_bar[t_prev];
    double sigma = 0.0;
    if (eta > 0.0)
        sigma = eta * std::sqrt((1.0 - ab_p) / (1.0 - ab_t)) * std::sqrt(1.0 - ab_t / ab_p);
    double dir = std::sqrt(std::max(0.0, 1.0 - ab_p - sigma * sigma));
    double inv_sa = 1.0 / std::sqrt(ab_t);
    double sb = std::sqrt(1.0 - ab_t);
    double sap = std::sqrt(ab_p);
    Tensor<T> out(z_t.h, z_t.w, z_t.c);
    for (size_t i = 0; i < out.data.size(); ++i) {
        double z0_hat = (z_t.data[i] - sb * eps_hat.data[i]) * inv_sa;
        double v = sap * z0_hat + dir * eps_hat.data[i];
        if (sigma > 0.0 && rng) v += sigma * rng->next_gaussian();
        out.data[i] = (T)v;
    }
    return out;
}

// Strictly decreasing uniform-stride timestep subsequence T, T-s, ..., down
// to the smallest positive multiple, followed by an implicit final jump to 0.
inline std::vector<int> ddim_timesteps(int T, int num_steps) {
    if (num_steps < 1 || num_steps > T)
        throw std::invalid_argument("ddim_timesteps: need 1 <= num_steps <= T");
    int stride = T / num_steps;
    std::vector<int> ts(num_steps);
    for (int i = 0; i < num_steps; ++i) ts[i] = T - i * stride;
    return ts;
}

// Iterates ddim_step from seeded pure noise; denoise(z_t, t) -> eps_hat.
template <typename T>
Tensor<T> ddim_sample(const std::function<Tensor<T>(const Tensor<T>&, int)>& denoise, int h, int w,
                      int c, const SamplerConfig& cfg, const NoiseSchedule& sched, uint64_t seed) {
    Rng rng(seed);
    Tensor<T> z = gaussian_like<T>(h, w, c, rng);
    std::vector<int> ts = ddim_timesteps(sched.T, cfg.num_steps);
    for (size_t i = 0; i < ts.size(); ++i) {
        int t = ts[i];
        int t_prev = (i + 1 < ts.size()) ? ts[i + 1] : 0;
        Tensor<T> eps_hat = denoise(z, t);
        z = ddim_step(z, t, t_prev, eps_hat, sched, cfg.eta, &rng);
    }
    return z;
}

}  // namespace fcdiff::diffusion
