#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fcdiff/data.hpp"
#include "fcdiff/diffusion.hpp"
#include "fcdiff/filters.hpp"
#include "fcdiff/model.hpp"

namespace fcdiff::training {

using filters::BandKind;

struct TrainConfig {
    std::optional<BandKind> branch;  // unset = pretrain stage
    int steps = 2000;
    int batch_size = 8;
    double lr = 1e-4;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    uint64_t seed = 1;
    int schedule_T = 1000;
    double beta_min = 1e-4, beta_max = 0.02;
};

struct TrainReport {
    std::vector<double> loss_log;  // one entry per step
    double wall_seconds = 0;
};

// latent-space dataset: encoded images + their label tokens, split 9:1
struct LatentDataset {
    std::vector<model::Sample<float>> train;  // z0 + cond (t/eps filled per step)
    std::vector<std::pair<SpatialTensor, int>> held_out;
};

LatentDataset build_dataset(const data::DatasetSpec& spec);

// Adaptive-moment optimizer with bias correction over a fixed parameter set.
class Adam {
  public:
    Adam(std::vector<model::ParamRef<float>> params, double lr, double b1, double b2, double eps)
        : params_(std::move(params)), lr_(lr), b1_(b1), b2_(b2), eps_(eps) {
        for (auto& p : params_) {
            m_.emplace_back(p.vals->size(), 0.0f);
            v_.emplace_back(p.vals->size(), 0.0f);
        }
    }

    void step(const std::vector<model::ParamRef<float>>& grads) {
        ++t_;
        double bc1 = 1.0 - std::pow(b1_, t_);
        double bc2 = 1.0 - std::pow(b2_, t_);
        for (size_t i = 0; i < params_.size(); ++i) {
            auto& w = *params_[i].vals;
            auto& g = *grads[i].vals;
            auto& m = m_[i];
            auto& v = v_[i];
            for (size_t j = 0; j < w.size(); ++j) {
                m[j] = (float)(b1_ * m[j] + (1 - b1_) * g[j]);
                v[j] = (float)(b2_ * v[j] + (1 - b2_) * (double)g[j] * g[j]);
                double mh = m[j] / bc1, vh = v[j] / bc2;
                w[j] -= (float)(lr_ * mh / (std::sqrt(vh) + eps_));
            }
        }
    }

  private:
    std::vector<model::ParamRef<float>> params_;
    std::vector<std::vector<float>> m_, v_;
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
};

// Stage 1: optimize base + embeddings against the noise regression loss.
TrainReport pretrain(model::ModelParams<float>& p, const TrainConfig& cfg,
                     const LatentDataset& ds);

// Stage 2: freeze base, attach (if absent) and train one control branch;
// C = ffm(z0, Mask_branch) per sample, no shuffle during training.
TrainReport train_branch(model::ModelParams<float>& p, const TrainConfig& cfg,
                         const LatentDataset& ds);

struct TranslateOptions {
    BandKind branch = BandKind::Low;
    int target_token = 0;
    diffusion::SamplerConfig sampler;
    uint64_t seed = 0;
    bool shuffle = false;
    uint64_t shuffle_seed = 0;
    bool shuffle_shared_channels = false;
    bool allow_shuffle_any_branch = false;  // shuffle is mini-only unless overridden
};

// Translation inference: encode, filter, sample with the control branch,
// decode. Deterministic in (weights, options).
data::Image translate(const model::ModelParams<float>& p, const diffusion::NoiseSchedule& sched,
                      const data::Image& source, const TranslateOptions& opt);

// uncontrolled sample from the base model, decoded to an image
data::Image sample_base(const model::ModelParams<float>& p, const diffusion::NoiseSchedule& sched,
                        int h, int w, int token, const diffusion::SamplerConfig& cfg,
                        uint64_t seed);

struct EvalRow {
    double band_consistency = 0;       // over the branch's mask
    double complement_consistency = 0;  // over the complement band
    double mean_color_dist = 0;         // |mean RGB(source) - mean RGB(output)|
};

struct EvalSummary {
    std::vector<EvalRow> rows;
    double mean_band = 0, std_band = 0;
    double mean_complement = 0, std_complement = 0;
    double mean_color = 0, std_color = 0;
};

EvalSummary evaluate(const model::ModelParams<float>& p, const diffusion::NoiseSchedule& sched,
                     const std::vector<std::pair<SpatialTensor, int>>& eval_set, BandKind branch,
                     const diffusion::SamplerConfig& cfg, uint64_t seed);

// helpers shared with the CLI and tests
std::array<double, 3> mean_color(const data::Image& img);
double color_distance(const data::Image& a, const data::Image& b);
double pixel_correlation(const data::Image& a, const data::Image& b);

}  // namespace fcdiff::training
