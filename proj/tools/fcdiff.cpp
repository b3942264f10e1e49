// fcdiff: frequency-controlled diffusion toolkit.
//
// Subcommands: filter, shuffle, spectrum, gen-data, pretrain, train-branch,
// translate, eval, selftest. Exit codes: 0 success, 1 usage error,
// 2 data/format error, 3 numeric failure. Diagnostics go to stderr, data to
// files or stdout.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "fcdiff/config.hpp"
#include "fcdiff/data.hpp"
#include "fcdiff/diffusion.hpp"
#include "fcdiff/filters.hpp"
#include "fcdiff/model.hpp"
#include "fcdiff/training.hpp"

using namespace fcdiff;
using filters::BandKind;

namespace {

struct BandArg {
    BandKind kind = BandKind::Low;
    int lo = 0, hi = -1;  // custom range
    bool full = false;
};

BandArg parse_band(const std::string& s) {
    BandArg b;
    if (s == "mini") b.kind = BandKind::Mini;
    else if (s == "low") b.kind = BandKind::Low;
    else if (s == "mid") b.kind = BandKind::Mid;
    else if (s == "high") b.kind = BandKind::High;
    else if (s == "full") { b.kind = BandKind::Custom; b.full = true; }
    else if (s.rfind("custom:", 0) == 0) {
        b.kind = BandKind::Custom;
        size_t colon = s.find(':', 7);
        if (colon == std::string::npos)
            throw CLI::ValidationError("--band", "custom band needs custom:LO:HI");
        b.lo = std::stoi(s.substr(7, colon - 7));
        b.hi = std::stoi(s.substr(colon + 1));
    } else {
        throw CLI::ValidationError("--band", "unknown band '" + s + "'");
    }
    return b;
}

BandKind parse_branch(const std::string& s) {
    BandArg b = parse_band(s);
    if (b.kind == BandKind::Custom)
        throw CLI::ValidationError("--branch", "branches are mini/low/mid/high");
    return b.kind;
}

filters::BandMask mask_for(const BandArg& b, int h, int w) {
    if (b.kind != BandKind::Custom) return filters::make_mask(b.kind, h, w);
    if (b.full) return filters::full_mask(h, w);
    return filters::make_mask(BandKind::Custom, h, w, b.lo, b.hi);
}

void log_config(const config::Config& cfg) {
    std::cerr << "resolved config:\n" << cfg.resolved();
}

void write_loss_log(const std::string& path, const training::TrainReport& report) {
    std::ofstream f(path);
    if (!f) throw FormatError("cannot open loss log " + path);
    for (size_t i = 0; i < report.loss_log.size(); ++i)
        f << (i + 1) << "\t" << report.loss_log[i] << "\n";
}

int run_selftest();

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"frequency-controlled diffusion toolkit"};
    app.require_subcommand(1);

    config::Config cfg;
    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "key=value config file");
    app.add_option("--set", overrides, "config override KEY=VALUE (repeatable)");

    std::string band_str = "low", branch_str = "low";
    std::string in_path, out_path, ckpt_path, base_ckpt_path, loss_path;
    uint64_t seed = 0;
    int steps = -1;
    int token = 0;
    bool shuffle = false, allow_shuffle_any = false;

    auto* c_filter = app.add_subcommand("filter", "band-filter an image through the latent FFM");
    c_filter->add_option("--band", band_str, "mini|low|mid|high|full|custom:LO:HI");
    c_filter->add_option("--in", in_path, "input PPM")->required();
    c_filter->add_option("--out", out_path, "output PPM")->required();
    c_filter->add_flag("--shuffle", shuffle, "apply equifrequency shuffle");
    c_filter->add_option("--seed", seed, "shuffle seed");

    auto* c_shuffle = app.add_subcommand("shuffle", "equifrequency-shuffle an image's latent spectrum");
    c_shuffle->add_option("--in", in_path, "input PPM")->required();
    c_shuffle->add_option("--out", out_path, "output PPM")->required();
    c_shuffle->add_option("--seed", seed, "shuffle seed");

    auto* c_spec = app.add_subcommand("spectrum", "emit level<TAB>energy of an image's latent DCT");
    c_spec->add_option("--in", in_path, "input PPM")->required();

    auto* c_gen = app.add_subcommand("gen-data", "write the synthetic dataset as PPM files");
    std::string out_dir = ".";
    c_gen->add_option("--out-dir", out_dir, "output directory");

    auto* c_pre = app.add_subcommand("pretrain", "pretrain the base denoiser");
    c_pre->add_option("--out", ckpt_path, "output checkpoint")->required();
    c_pre->add_option("--loss-log", loss_path, "loss log path (step<TAB>loss)");
    c_pre->add_option("--steps", steps, "override config steps");

    auto* c_tb = app.add_subcommand("train-branch", "train one frequency control branch");
    c_tb->add_option("--branch", branch_str, "mini|low|mid|high")->required();
    c_tb->add_option("--base", base_ckpt_path, "base checkpoint")->required();
    c_tb->add_option("--out", ckpt_path, "output checkpoint")->required();
    c_tb->add_option("--loss-log", loss_path, "loss log path");
    c_tb->add_option("--steps", steps, "override config steps");

    auto* c_tr = app.add_subcommand("translate", "image-to-image translation");
    c_tr->add_option("--ckpt", ckpt_path, "checkpoint with the branch")->required();
    c_tr->add_option("--branch", branch_str, "mini|low|mid|high")->required();
    c_tr->add_option("--in", in_path, "source PPM")->required();
    c_tr->add_option("--out", out_path, "output PPM")->required();
    c_tr->add_option("--token", token, "target label token");
    c_tr->add_option("--seed", seed, "sampling seed");
    c_tr->add_flag("--shuffle", shuffle, "equifrequency shuffle (mini branch)");
    c_tr->add_flag("--allow-shuffle-any-branch", allow_shuffle_any,
                   "override the mini-only shuffle restriction");

    auto* c_ev = app.add_subcommand("eval", "metrics over the held-out set");
    c_ev->add_option("--ckpt", ckpt_path, "checkpoint")->required();
    c_ev->add_option("--branch", branch_str, "mini|low|mid|high")->required();
    c_ev->add_option("--seed", seed, "sampling seed");

    auto* c_st = app.add_subcommand("selftest", "run transform/mask/gradient invariant suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (!config_path.empty()) cfg.load_file(config_path);
        for (const std::string& o : overrides) {
            size_t eq = o.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("--set needs KEY=VALUE");
            cfg.set(o.substr(0, eq), o.substr(eq + 1));
        }
        if (steps > 0) cfg.steps = steps;
        log_config(cfg);

        diffusion::NoiseSchedule sched =
            diffusion::make_schedule(cfg.schedule_T, cfg.beta_min, cfg.beta_max);
        diffusion::SamplerConfig scfg;
        scfg.num_steps = cfg.sampler_steps;
        scfg.eta = cfg.sampler_eta;

        if (*c_filter) {
            data::Image img = data::read_ppm(in_path);
            SpatialTensor z0 = data::encode(img);
            BandArg band = parse_band(band_str);
            filters::BandMask m = mask_for(band, z0.h, z0.w);
            std::optional<uint64_t> shuffle_seed;
            if (shuffle) shuffle_seed = seed;
            SpatialTensor c = filters::ffm(z0, m, shuffle_seed, cfg.shuffle_shared_channels);
            data::write_ppm(out_path, data::decode(c));
        } else if (*c_shuffle) {
            data::Image img = data::read_ppm(in_path);
            SpatialTensor z0 = data::encode(img);
            SpectralTensor f = filters::equifrequency_shuffle(spectral::dct2(z0), seed,
                                                              cfg.shuffle_shared_channels);
            data::write_ppm(out_path, data::decode(spectral::idct2(f)));
        } else if (*c_spec) {
            data::Image img = data::read_ppm(in_path);
            auto prof = filters::band_energy_profile(spectral::dct2(data::encode(img)));
            for (auto& [lvl, e] : prof) std::cout << lvl << "\t" << e << "\n";
        } else if (*c_gen) {
            data::DatasetSpec spec;
            spec.num_images = cfg.num_images;
            spec.image_size = cfg.image_size;
            spec.seed = cfg.seed;
            for (int i = 0; i < spec.num_images; ++i) {
                auto [img, tok] = data::generate(spec, i);
                char name[64];
                std::snprintf(name, sizeof(name), "/img_%05d_tok%02d.ppm", i, tok);
                data::write_ppm(out_dir + name, img);
            }
        } else if (*c_pre) {
            data::DatasetSpec spec;
            spec.num_images = cfg.num_images;
            spec.image_size = cfg.image_size;
            spec.seed = cfg.seed;
            auto ds = training::build_dataset(spec);
            auto p = model::init_params<float>(cfg.seed, 12, data::kVocab);
            training::TrainConfig tc;
            tc.steps = cfg.steps;
            tc.batch_size = cfg.batch_size;
            tc.lr = cfg.lr;
            tc.beta1 = cfg.adam_beta1;
            tc.beta2 = cfg.adam_beta2;
            tc.adam_eps = cfg.adam_eps;
            tc.seed = cfg.seed;
            tc.schedule_T = cfg.schedule_T;
            tc.beta_min = cfg.beta_min;
            tc.beta_max = cfg.beta_max;
            auto report = training::pretrain(p, tc, ds);
            model::save_checkpoint(ckpt_path, p);
            if (!loss_path.empty()) write_loss_log(loss_path, report);
            std::cerr << "pretrain: " << report.loss_log.size() << " steps, first loss "
                      << report.loss_log.front() << ", final loss " << report.loss_log.back()
                      << ", " << report.wall_seconds << "s\n";
        } else if (*c_tb) {
            data::DatasetSpec spec;
            spec.num_images = cfg.num_images;
            spec.image_size = cfg.image_size;
            spec.seed = cfg.seed;
            auto ds = training::build_dataset(spec);
            auto p = model::load_checkpoint(base_ckpt_path);
            training::TrainConfig tc;
            tc.branch = parse_branch(branch_str);
            tc.steps = cfg.steps;
            tc.batch_size = cfg.batch_size;
            tc.lr = cfg.lr;
            tc.beta1 = cfg.adam_beta1;
            tc.beta2 = cfg.adam_beta2;
            tc.adam_eps = cfg.adam_eps;
            tc.seed = cfg.seed;
            tc.schedule_T = cfg.schedule_T;
            tc.beta_min = cfg.beta_min;
            tc.beta_max = cfg.beta_max;
            auto report = training::train_branch(p, tc, ds);
            model::save_checkpoint(ckpt_path, p);
            if (!loss_path.empty()) write_loss_log(loss_path, report);
            std::cerr << "train-branch " << branch_str << ": final loss "
                      << report.loss_log.back() << ", " << report.wall_seconds << "s\n";
        } else if (*c_tr) {
            auto p = model::load_checkpoint(ckpt_path);
            data::Image src = data::read_ppm(in_path);
            training::TranslateOptions opt;
            opt.branch = parse_branch(branch_str);
            opt.target_token = token;
            opt.sampler = scfg;
            opt.seed = seed;
            opt.shuffle = shuffle;
            opt.shuffle_seed = seed;
            opt.shuffle_shared_channels = cfg.shuffle_shared_channels;
            opt.allow_shuffle_any_branch = allow_shuffle_any;
            data::write_ppm(out_path, training::translate(p, sched, src, opt));
        } else if (*c_ev) {
            auto p = model::load_checkpoint(ckpt_path);
            data::DatasetSpec spec;
            spec.num_images = cfg.num_images;
            spec.image_size = cfg.image_size;
            spec.seed = cfg.seed;
            auto ds = training::build_dataset(spec);
            auto sum = training::evaluate(p, sched, ds.held_out, parse_branch(branch_str), scfg,
                                          seed);
            std::cout << "band_consistency\t" << sum.mean_band << "\t+-\t" << sum.std_band << "\n"
                      << "complement_consistency\t" << sum.mean_complement << "\t+-\t"
                      << sum.std_complement << "\n"
                      << "mean_color_dist\t" << sum.mean_color << "\t+-\t" << sum.std_color
                      << "\n";
        } else if (*c_st) {
            return run_selftest();
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::out_of_range& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const FormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

namespace {

// compact invariant suites mirroring the unit tests; exit 0 iff all pass
int run_selftest() {
    int failures = 0;
    auto check = [&](bool ok, const char* what) {
        std::cerr << (ok ? "[ok]   " : "[FAIL] ") << what << "\n";
        if (!ok) ++failures;
    };
    Rng rng(1);

    // transform round trip + Parseval
    {
        Tensor<float> x(16, 12, 3);
        for (auto& v : x.data) v = (float)rng.next_gaussian();
        auto f = spectral::dct2(x);
        auto y = spectral::idct2(f);
        float maxerr = 0;
        for (size_t i = 0; i < x.data.size(); ++i)
            maxerr = std::max(maxerr, std::abs(y.data[i] - x.data[i]));
        check(maxerr < 1e-5f, "dct/idct round trip");
        double ex = x.sq_norm(), ef = f.sq_norm();
        check(std::abs(ef - ex) / ex < 1e-6, "Parseval");
    }
    // mask membership at 64x64
    {
        auto mini = filters::make_mask(BandKind::Mini, 64, 64);
        auto low = filters::make_mask(BandKind::Low, 64, 64);
        auto mid = filters::make_mask(BandKind::Mid, 64, 64);
        auto high = filters::make_mask(BandKind::High, 64, 64);
        bool ok = true;
        for (int u = 0; u < 64 && ok; ++u)
            for (int v = 0; v < 64 && ok; ++v) {
                int l = u + v;
                ok = mini.at(u, v) == (l <= 10) && low.at(u, v) == (l <= 20) &&
                     mid.at(u, v) == (l > 20 && l <= 40) && high.at(u, v) == (l >= 50);
            }
        check(ok, "64x64 mask membership");
    }
    // shuffle preserves per-level energy
    {
        Tensor<float> f(16, 16, 2);
        for (auto& v : f.data) v = (float)rng.next_gaussian();
        auto s = filters::equifrequency_shuffle(f, 3);
        auto p1 = filters::band_energy_profile(f);
        auto p2 = filters::band_energy_profile(s);
        bool ok = true;
        for (size_t i = 0; i < p1.size(); ++i)
            if (p1[i].second != p2[i].second) ok = false;
        check(ok, "equifrequency shuffle per-level energy");
    }
    // zero-init equivalence
    {
        auto p = model::init_params<float>(3, 12, data::kVocab);
        model::attach_branch(p, BandKind::Low, 4);
        Tensor<float> z(8, 8, 12), C(8, 8, 12);
        for (auto& v : z.data) v = (float)rng.next_gaussian();
        for (auto& v : C.data) v = (float)rng.next_gaussian();
        auto a = model::forward_base(p, z, 5, 1);
        auto b = model::forward_controlled(p, BandKind::Low, z, 5, 1, C);
        check(a.data == b.data, "zero-init controlled == base");
    }
    // gradient spot check (64-bit)
    {
        auto p = model::init_params<double>(5, 12, data::kVocab);
        auto sched = diffusion::make_schedule(50, 1e-3, 0.05);
        std::vector<model::Sample<double>> batch(1);
        batch[0].z0 = Tensor<double>(8, 8, 12);
        batch[0].eps = Tensor<double>(8, 8, 12);
        for (auto& v : batch[0].z0.data) v = rng.next_gaussian();
        for (auto& v : batch[0].eps.data) v = rng.next_gaussian();
        batch[0].t = 10;
        batch[0].cond = 2;
        auto g = model::make_grads(p);
        (void)model::loss_and_grads(p, std::nullopt, batch, sched, nullptr, g);
        bool ok = true;
        double delta = 1e-3;
        for (int s = 0; s < 10; ++s) {
            size_t j = rng.next_below(p.block2.k.size());
            double saved = p.block2.k[j];
            auto dummy = model::make_grads(p);
            p.block2.k[j] = saved + delta;
            double lp = model::loss_and_grads(p, std::nullopt, batch, sched, nullptr, dummy);
            model::zero_params(dummy);
            p.block2.k[j] = saved - delta;
            double lm = model::loss_and_grads(p, std::nullopt, batch, sched, nullptr, dummy);
            p.block2.k[j] = saved;
            double fd = (lp - lm) / (2 * delta);
            double an = g.block2.k[j];
            if (std::abs(an - fd) / std::max(1e-6, std::abs(an)) > 1e-3) ok = false;
        }
        check(ok, "analytic vs finite-difference gradients");
    }
    std::cerr << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
    return failures == 0 ? 0 : 3;
}

}  // namespace
