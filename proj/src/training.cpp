#include "fcdiff/training.hpp"

#include <array>
#include <chrono>

namespace fcdiff::training {

using model::ModelParams;
using model::ParamRef;
using model::Sample;

LatentDataset build_dataset(const data::DatasetSpec& spec) {
    if (spec.num_images < 1) throw std::invalid_argument("build_dataset: empty dataset spec");
    LatentDataset ds;
    for (int i = 0; i < spec.num_images; ++i) {
        auto [img, tok] = data::generate(spec, i);
        SpatialTensor z0 = data::encode(img);
        if (data::is_held_out(spec, i)) {
            ds.held_out.emplace_back(std::move(z0), tok);
        } else {
            Sample<float> s;
            s.z0 = std::move(z0);
            s.cond = tok;
            ds.train.push_back(std::move(s));
        }
    }
    return ds;
}

namespace {

std::vector<ParamRef<float>> trainable_refs(ModelParams<float>& p,
                                            std::optional<BandKind> branch) {
    std::vector<ParamRef<float>> all, out;
    model::collect_params(p, all);
    for (auto& r : all)
        if (model::is_trainable(r.name, branch)) out.push_back(r);
    return out;
}

TrainReport run_training(ModelParams<float>& p, const TrainConfig& cfg, const LatentDataset& ds) {
    if (ds.train.empty()) throw std::invalid_argument("training: empty dataset");
    auto t0 = std::chrono::steady_clock::now();
    diffusion::NoiseSchedule sched =
        diffusion::make_schedule(cfg.schedule_T, cfg.beta_min, cfg.beta_max);
    std::optional<filters::BandMask> mask;
    if (cfg.branch) {
        const auto& z0 = ds.train.front().z0;
        mask = filters::make_mask(*cfg.branch, z0.h, z0.w);
    }

    ModelParams<float> grads = model::make_grads(p);
    std::vector<ParamRef<float>> train_p = trainable_refs(p, cfg.branch);
    std::vector<ParamRef<float>> train_g;
    {
        std::vector<ParamRef<float>> all_g;
        model::collect_params(grads, all_g);
        for (auto& r : all_g)
            if (model::is_trainable(r.name, cfg.branch)) train_g.push_back(r);
    }
    Adam opt(train_p, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);

    TrainReport report;
    Rng rng(mix_seed(cfg.seed, 0x747261696eULL));
    std::vector<Sample<float>> batch(cfg.batch_size);
    for (int step = 0; step < cfg.steps; ++step) {
        for (int b = 0; b < cfg.batch_size; ++b) {
            const Sample<float>& src = ds.train[rng.next_below(ds.train.size())];
            batch[b].z0 = src.z0;
            batch[b].cond = src.cond;
            batch[b].t = 1 + (int)rng.next_below((uint64_t)sched.T);
            Tensor<float>& eps = batch[b].eps;
            eps = Tensor<float>(src.z0.h, src.z0.w, src.z0.c);
            for (auto& v : eps.data) v = (float)rng.next_gaussian();
        }
        model::zero_params(grads);
        double loss = model::loss_and_grads(p, cfg.branch, batch, sched,
                                            mask ? &*mask : nullptr, grads);
        opt.step(train_g);
        report.loss_log.push_back(loss);
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace

TrainReport pretrain(ModelParams<float>& p, const TrainConfig& cfg, const LatentDataset& ds) {
    TrainConfig c = cfg;
    c.branch.reset();
    return run_training(p, c, ds);
}

TrainReport train_branch(ModelParams<float>& p, const TrainConfig& cfg, const LatentDataset& ds) {
    if (!cfg.branch) throw std::invalid_argument("train_branch: config names no branch");
    if (!p.has_branch(*cfg.branch)) model::attach_branch(p, *cfg.branch, cfg.seed);
    return run_training(p, cfg, ds);
}

data::Image translate(const ModelParams<float>& p, const diffusion::NoiseSchedule& sched,
                      const data::Image& source, const TranslateOptions& opt) {
    if (!p.has_branch(opt.branch))
        throw std::invalid_argument(std::string("translate: branch '") +
                                    filters::band_name(opt.branch) + "' not in checkpoint");
    if (opt.shuffle && opt.branch != BandKind::Mini && !opt.allow_shuffle_any_branch)
        throw std::invalid_argument("translate: shuffle is restricted to the mini branch");
    if (opt.target_token < 0 || opt.target_token >= p.V)
        throw std::invalid_argument("translate: target token out of range");
    SpatialTensor z0 = data::encode(source);
    filters::BandMask mask = filters::make_mask(opt.branch, z0.h, z0.w);
    std::optional<uint64_t> shuffle_seed;
    if (opt.shuffle) shuffle_seed = opt.shuffle_seed;
    SpatialTensor C = filters::ffm(z0, mask, shuffle_seed, opt.shuffle_shared_channels);
    auto denoise = [&](const SpatialTensor& z_t, int t) {
        return model::forward_controlled(p, opt.branch, z_t, t, opt.target_token, C);
    };
    SpatialTensor z = diffusion::ddim_sample<float>(denoise, z0.h, z0.w, z0.c, opt.sampler, sched,
                                                    opt.seed);
    return data::decode(z);
}

data::Image sample_base(const ModelParams<float>& p, const diffusion::NoiseSchedule& sched, int h,
                        int w, int token, const diffusion::SamplerConfig& cfg, uint64_t seed) {
    auto denoise = [&](const SpatialTensor& z_t, int t) {
        return model::forward_base(p, z_t, t, token);
    };
    SpatialTensor z = diffusion::ddim_sample<float>(denoise, h, w, p.c, cfg, sched, seed);
    return data::decode(z);
}

std::array<double, 3> mean_color(const data::Image& img) {
    std::array<double, 3> m = {0, 0, 0};
    for (int i = 0; i < img.h; ++i)
        for (int j = 0; j < img.w; ++j)
            for (int ch = 0; ch < 3; ++ch) m[ch] += img.at(i, j, ch);
    double n = (double)img.h * img.w;
    for (auto& v : m) v /= n;
    return m;
}

double color_distance(const data::Image& a, const data::Image& b) {
    auto ma = mean_color(a), mb = mean_color(b);
    double d = 0;
    for (int ch = 0; ch < 3; ++ch) d += (ma[ch] - mb[ch]) * (ma[ch] - mb[ch]);
    return std::sqrt(d);
}

double pixel_correlation(const data::Image& a, const data::Image& b) {
    if (a.h != b.h || a.w != b.w) throw ShapeError("pixel_correlation: size mismatch");
    size_t n = a.pix.size();
    double ma = 0, mb = 0;
    for (size_t i = 0; i < n; ++i) {
        ma += a.pix[i];
        mb += b.pix[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (size_t i = 0; i < n; ++i) {
        double da = a.pix[i] - ma, db = b.pix[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0 || vb == 0) return 0;
    return cov / std::sqrt(va * vb);
}

EvalSummary evaluate(const ModelParams<float>& p, const diffusion::NoiseSchedule& sched,
                     const std::vector<std::pair<SpatialTensor, int>>& eval_set, BandKind branch,
                     const diffusion::SamplerConfig& cfg, uint64_t seed) {
    if (eval_set.empty()) throw std::invalid_argument("evaluate: empty eval set");
    EvalSummary sum;
    const auto& [z0_0, tok0] = eval_set.front();
    filters::BandMask mask = filters::make_mask(branch, z0_0.h, z0_0.w);
    filters::BandMask comp = mask;
    for (auto& b : comp.bits) b = b ? 0 : 1;
    comp.kind = filters::BandKind::Custom;
    for (size_t i = 0; i < eval_set.size(); ++i) {
        const auto& [z0, tok] = eval_set[i];
        data::Image source = data::decode(z0);
        TranslateOptions opt;
        opt.branch = branch;
        opt.target_token = tok;
        opt.sampler = cfg;
        opt.seed = mix_seed(seed, (uint64_t)i);
        data::Image out = translate(p, sched, source, opt);
        SpatialTensor zo = data::encode(out);
        EvalRow row;
        row.band_consistency = filters::band_consistency(z0, zo, mask);
        row.complement_consistency = filters::band_consistency(z0, zo, comp);
        row.mean_color_dist = color_distance(source, out);
        sum.rows.push_back(row);
    }
    auto stats = [&](auto get, double& mean, double& sd) {
        double m = 0;
        for (auto& r : sum.rows) m += get(r);
        m /= sum.rows.size();
        double v = 0;
        for (auto& r : sum.rows) v += (get(r) - m) * (get(r) - m);
        mean = m;
        sd = std::sqrt(v / sum.rows.size());
    };
    stats([](const EvalRow& r) { return r.band_consistency; }, sum.mean_band, sum.std_band);
    stats([](const EvalRow& r) { return r.complement_consistency; }, sum.mean_complement,
          sum.std_complement);
    stats([](const EvalRow& r) { return r.mean_color_dist; }, sum.mean_color, sum.std_color);
    return sum;
}

}  // namespace fcdiff::training
