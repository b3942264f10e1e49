#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fcdiff/diffusion.hpp"
#include "fcdiff/filters.hpp"
#include "fcdiff/nn.hpp"
#include "fcdiff/rng.hpp"
#include "fcdiff/tensor.hpp"

namespace fcdiff::model {

using filters::BandKind;

constexpr int kC1 = 32;       // full-resolution feature width
constexpr int kC2 = 64;       // half-resolution feature width
constexpr int kTimeDim = 32;  // sinusoidal time embedding size
constexpr int kEmbDim = 32;   // label embedding size

// 16 sin / 16 cos pairs with geometric frequencies 1 .. 1/10^4.
template <typename T = float>
std::vector<T> time_embed(int t) {
    if (t < 0) throw std::invalid_argument("time_embed: t must be >= 0");
    std::vector<T> e(kTimeDim);
    int half = kTimeDim / 2;
    for (int k = 0; k < half; ++k) {
        double w = std::pow(10000.0, -(double)k / (half - 1));
        e[k] = (T)std::sin(t * w);
        e[half + k] = (T)std::cos(t * w);
    }
    return e;
}

// Per-band trainable group: hint encoder for the control signal, private
// copies of the base encoder convs, and the two zero-initialized 1x1
// injection convs (full and half resolution).
template <typename T>
struct ControlBranch {
    nn::ConvLayer<T> hint;    // 3x3, c -> 32
    nn::ConvLayer<T> stem;    // copies of the base encoder
    nn::ConvLayer<T> block1;
    nn::ConvLayer<T> down;
    nn::ConvLayer<T> block2;
    nn::ConvLayer<T> zero0;  // 1x1, 32 -> 32, zero init
    nn::ConvLayer<T> zero1;  // 1x1, 64 -> 64, zero init
};

template <typename T>
struct ModelParams {
    int c = 0;  // latent channels
    int V = 0;  // label vocabulary size

    nn::ConvLayer<T> stem;    // 3x3, c -> 32
    nn::ConvLayer<T> block1;  // 3x3, 32 -> 32
    nn::ConvLayer<T> down;    // 3x3 stride 2, 32 -> 64
    nn::ConvLayer<T> block2;  // 3x3, 64 -> 64
    nn::ConvLayer<T> up;      // 3x3, 64 -> 32, after nearest 2x upsample
    nn::ConvLayer<T> block3;  // 3x3, 32 -> 32
    nn::ConvLayer<T> head;    // 3x3, 32 -> c

    nn::Linear<T> time_proj1, time_proj2, time_proj3;  // 32 -> 32/64/32
    std::vector<T> cond_table;                          // V x kEmbDim
    nn::Linear<T> cond_proj1, cond_proj2, cond_proj3;

    std::map<BandKind, ControlBranch<T>> branches;

    bool has_branch(BandKind k) const { return branches.count(k) != 0; }
};

template <typename T>
void init_structure(ModelParams<T>& p, int c, int V) {
    p.c = c;
    p.V = V;
    p.stem.init(3, 3, c, kC1);
    p.block1.init(3, 3, kC1, kC1);
    p.down.init(3, 3, kC1, kC2, 2);
    p.block2.init(3, 3, kC2, kC2);
    p.up.init(3, 3, kC2, kC1);
    p.block3.init(3, 3, kC1, kC1);
    p.head.init(3, 3, kC1, c);
    p.time_proj1.init(kTimeDim, kC1);
    p.time_proj2.init(kTimeDim, kC2);
    p.time_proj3.init(kTimeDim, kC1);
    p.cond_table.assign((size_t)V * kEmbDim, T(0));
    p.cond_proj1.init(kEmbDim, kC1);
    p.cond_proj2.init(kEmbDim, kC2);
    p.cond_proj3.init(kEmbDim, kC1);
}

template <typename T>
ModelParams<T> init_params(uint64_t seed, int c, int V) {
    ModelParams<T> p;
    init_structure(p, c, V);
    Rng rng(mix_seed(seed, 0x6d6f64656cULL));
    p.stem.kaiming(rng);
    p.block1.kaiming(rng);
    p.down.kaiming(rng);
    p.block2.kaiming(rng);
    p.up.kaiming(rng);
    p.block3.kaiming(rng);
    p.head.kaiming(rng);
    // near-zero head: the freshly initialized denoiser starts close to the
    // zero predictor instead of an over-scaled one. Without this the first
    // optimization phase crushes every activation toward the dead-relu
    // region to kill the output variance, and training stalls there.
    for (auto& v : p.head.k) v = (T)(v * 0.01);
    p.time_proj1.kaiming(rng);
    p.time_proj2.kaiming(rng);
    p.time_proj3.kaiming(rng);
    for (auto& v : p.cond_table) v = (T)rng.next_gaussian();
    p.cond_proj1.kaiming(rng);
    p.cond_proj2.kaiming(rng);
    p.cond_proj3.kaiming(rng);
    return p;
}

// Attach a fresh control branch: encoder convs copy the (pretrained) base,
// zero convs start at exact zero so the controlled forward initially equals
// the base forward bit-for-bit.
template <typename T>
void attach_branch(ModelParams<T>& p, BandKind k, uint64_t seed) {
    if (k == BandKind::Custom) throw std::invalid_argument("attach_branch: custom band has no branch");
    ControlBranch<T> b;
    b.hint.init(3, 3, p.c, kC1);
    Rng rng(mix_seed(seed, (uint64_t)k + 0x6272ULL));
    b.hint.kaiming(rng);
    b.stem = p.stem;
    b.block1 = p.block1;
    b.down = p.down;
    b.block2 = p.block2;
    b.zero0.init(1, 1, kC1, kC1);
    b.zero1.init(1, 1, kC2, kC2);
    p.branches[k] = std::move(b);
}

// -------- parameter enumeration (drives optimizer, checkpoint, tests) ------

template <typename T>
struct ParamRef {
    std::string name;
    std::vector<T>* vals;
    std::vector<int> shape;
};

template <typename T>
void collect_params(ModelParams<T>& p, std::vector<ParamRef<T>>& out) {
    auto conv = [&](const std::string& n, nn::ConvLayer<T>& L) {
        out.push_back({n + ".kernel", &L.k, {L.kh, L.kw, L.cin, L.cout}});
        out.push_back({n + ".bias", &L.b, {L.cout}});
    };
    auto lin = [&](const std::string& n, nn::Linear<T>& L) {
        out.push_back({n + ".weight", &L.w, {L.in, L.out}});
        out.push_back({n + ".bias", &L.b, {L.out}});
    };
    conv("base.stem", p.stem);
    conv("base.block1", p.block1);
    conv("base.down", p.down);
    conv("base.block2", p.block2);
    conv("base.up", p.up);
    conv("base.block3", p.block3);
    conv("base.head", p.head);
    lin("time.proj1", p.time_proj1);
    lin("time.proj2", p.time_proj2);
    lin("time.proj3", p.time_proj3);
    out.push_back({"cond.table", &p.cond_table, {p.V, kEmbDim}});
    lin("cond.proj1", p.cond_proj1);
    lin("cond.proj2", p.cond_proj2);
    lin("cond.proj3", p.cond_proj3);
    for (auto& [k, b] : p.branches) {
        std::string pre = std::string("branch.") + filters::band_name(k);
        conv(pre + ".hint", b.hint);
        conv(pre + ".stem", b.stem);
        conv(pre + ".block1", b.block1);
        conv(pre + ".down", b.down);
        conv(pre + ".block2", b.block2);
        conv(pre + ".zero0", b.zero0);
        conv(pre + ".zero1", b.zero1);
    }
}

// Same-structure zero tensors for gradient accumulation.
template <typename T>
ModelParams<T> make_grads(const ModelParams<T>& p) {
    ModelParams<T> g;
    init_structure(g, p.c, p.V);
    for (auto& [k, b] : p.branches) {
        ControlBranch<T> gb;
        gb.hint.init(3, 3, p.c, kC1);
        gb.stem.init(3, 3, p.c, kC1);
        gb.block1.init(3, 3, kC1, kC1);
        gb.down.init(3, 3, kC1, kC2, 2);
        gb.block2.init(3, 3, kC2, kC2);
        gb.zero0.init(1, 1, kC1, kC1);
        gb.zero1.init(1, 1, kC2, kC2);
        g.branches[k] = std::move(gb);
    }
    return g;
}

template <typename T>
void zero_params(ModelParams<T>& g) {
    std::vector<ParamRef<T>> refs;
    collect_params(g, refs);
    for (auto& r : refs) std::fill(r.vals->begin(), r.vals->end(), T(0));
}

// trainable set for a stage: pretrain trains base + embeddings; a branch
// stage trains only that branch's hint/encoder/zero convs.
inline bool is_trainable(const std::string& name, std::optional<BandKind> branch) {
    if (!branch) return name.rfind("base.", 0) == 0 || name.rfind("time.", 0) == 0 ||
                        name.rfind("cond.", 0) == 0;
    std::string pre = std::string("branch.") + filters::band_name(*branch) + ".";
    return name.rfind(pre, 0) == 0;
}

// ------------------------------ forward -----------------------------------

template <typename T>
struct ForwardCache {
    std::vector<T> te, ce, bias1, bias2, bias3;
    Tensor<T> z, s0, a1, h1, d0, a2, h2, up_in, u1, a3, h3, out;
    // branch path (controlled forward only)
    bool controlled = false;
    Tensor<T> C, bs, ba1, bf1, bd, ba2, bf2;
};

template <typename T>
void forward_common(const ModelParams<T>& p, const Tensor<T>& z_t, int t, int cond,
                    const ControlBranch<T>* br, const Tensor<T>* C, ForwardCache<T>& cc) {
    if (z_t.c != p.c) throw ShapeError("forward: latent channel mismatch");
    if (cond < 0 || cond >= p.V) throw std::invalid_argument("forward: cond id out of range");
    cc.z = z_t;
    cc.te = time_embed<T>(t);
    cc.ce.assign(p.cond_table.begin() + (size_t)cond * kEmbDim,
                 p.cond_table.begin() + (size_t)(cond + 1) * kEmbDim);
    cc.bias1 = p.time_proj1.forward(cc.te);
    cc.bias2 = p.time_proj2.forward(cc.te);
    cc.bias3 = p.time_proj3.forward(cc.te);
    auto addv = [](std::vector<T>& a, const std::vector<T>& b) {
        for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    addv(cc.bias1, p.cond_proj1.forward(cc.ce));
    addv(cc.bias2, p.cond_proj2.forward(cc.ce));
    addv(cc.bias3, p.cond_proj3.forward(cc.ce));

    cc.s0 = nn::conv_forward(p.stem, z_t);
    cc.a1 = nn::conv_forward(p.block1, cc.s0);
    nn::add_channel_bias(cc.a1, cc.bias1);
    cc.h1 = nn::relu(cc.a1);

    if (br) {
        cc.controlled = true;
        cc.C = *C;
        if (!cc.C.same_shape(z_t)) throw ShapeError("forward_controlled: control shape mismatch");
        cc.bs = nn::conv_forward(br->stem, z_t);
        Tensor<T> hintf = nn::conv_forward(br->hint, cc.C);
        for (size_t i = 0; i < cc.bs.data.size(); ++i) cc.bs.data[i] += hintf.data[i];
        cc.ba1 = nn::conv_forward(br->block1, cc.bs);
        nn::add_channel_bias(cc.ba1, cc.bias1);
        cc.bf1 = nn::relu(cc.ba1);
        cc.bd = nn::conv_forward(br->down, cc.bf1);
        cc.ba2 = nn::conv_forward(br->block2, cc.bd);
        nn::add_channel_bias(cc.ba2, cc.bias2);
        cc.bf2 = nn::relu(cc.ba2);
        Tensor<T> inj1 = nn::conv_forward(br->zero0, cc.bf1);
        for (size_t i = 0; i < cc.h1.data.size(); ++i) cc.h1.data[i] += inj1.data[i];
    }

    cc.d0 = nn::conv_forward(p.down, cc.h1);
    cc.a2 = nn::conv_forward(p.block2, cc.d0);
    nn::add_channel_bias(cc.a2, cc.bias2);
    cc.h2 = nn::relu(cc.a2);

    if (br) {
        Tensor<T> inj2 = nn::conv_forward(br->zero1, cc.bf2);
        for (size_t i = 0; i < cc.h2.data.size(); ++i) cc.h2.data[i] += inj2.data[i];
    }

    cc.up_in = nn::upsample_nearest2x(cc.h2);
    cc.u1 = nn::conv_forward(p.up, cc.up_in);
    for (size_t i = 0; i < cc.u1.data.size(); ++i) cc.u1.data[i] += cc.h1.data[i];  // skip-add
    cc.a3 = nn::conv_forward(p.block3, cc.u1);
    nn::add_channel_bias(cc.a3, cc.bias3);
    cc.h3 = nn::relu(cc.a3);
    cc.out = nn::conv_forward(p.head, cc.h3);
}

template <typename T>
Tensor<T> forward_base(const ModelParams<T>& p, const Tensor<T>& z_t, int t, int cond) {
    ForwardCache<T> cc;
    forward_common<T>(p, z_t, t, cond, nullptr, nullptr, cc);
    return cc.out;
}

template <typename T>
Tensor<T> forward_controlled(const ModelParams<T>& p, BandKind branch, const Tensor<T>& z_t, int t,
                             int cond, const Tensor<T>& C) {
    auto it = p.branches.find(branch);
    if (it == p.branches.end()) throw std::invalid_argument("forward_controlled: unknown branch");
    ForwardCache<T> cc;
    forward_common<T>(p, z_t, t, cond, &it->second, &C, cc);
    return cc.out;
}

// ------------------------------ backward ----------------------------------

// Accumulates into g for trainable parameters of the stage:
// pretrain (branch unset): base convs + time/cond projections + table.
// branch stage: only that branch's parameters; frozen params untouched.
template <typename T>
void backward(const ModelParams<T>& p, const ForwardCache<T>& cc, const Tensor<T>& d_out,
              std::optional<BandKind> branch, int cond, ModelParams<T>& g) {
    const bool train_base = !branch;
    const ControlBranch<T>* br = nullptr;
    ControlBranch<T>* gbr = nullptr;
    if (branch) {
        br = &p.branches.at(*branch);
        gbr = &g.branches.at(*branch);
    }

    Tensor<T> dh3 = nn::conv_backward(p.head, cc.h3, d_out, train_base ? &g.head : nullptr);
    Tensor<T> da3 = nn::relu_backward(cc.a3, dh3);
    Tensor<T> du1 = nn::conv_backward(p.block3, cc.u1, da3, train_base ? &g.block3 : nullptr);
    // u1 = up(up_in) + h1: du1 reaches both the up path and h1 via the skip
    Tensor<T> dup_in = nn::conv_backward(p.up, cc.up_in, du1, train_base ? &g.up : nullptr);
    Tensor<T> dh2 = nn::upsample_nearest2x_backward(dup_in);
    Tensor<T> da2 = nn::relu_backward(cc.a2, dh2);
    Tensor<T> dd0 = nn::conv_backward(p.block2, cc.d0, da2, train_base ? &g.block2 : nullptr);
    Tensor<T> dh1 = nn::conv_backward(p.down, cc.h1, dd0, train_base ? &g.down : nullptr);
    for (size_t i = 0; i < dh1.data.size(); ++i) dh1.data[i] += du1.data[i];  // skip
    Tensor<T> da1 = nn::relu_backward(cc.a1, dh1);
    Tensor<T> ds0 = nn::conv_backward(p.block1, cc.s0, da1, train_base ? &g.block1 : nullptr);
    if (train_base) nn::conv_backward(p.stem, cc.z, ds0, &g.stem);

    if (train_base) {
        // per-channel bias grads flow to the time/cond projections
        std::vector<T> db1 = nn::channel_bias_grad(da1);
        std::vector<T> db2 = nn::channel_bias_grad(da2);
        std::vector<T> db3 = nn::channel_bias_grad(da3);
        p.time_proj1.backward(cc.te, db1, &g.time_proj1);
        p.time_proj2.backward(cc.te, db2, &g.time_proj2);
        p.time_proj3.backward(cc.te, db3, &g.time_proj3);
        std::vector<T> dce = p.cond_proj1.backward(cc.ce, db1, &g.cond_proj1);
        std::vector<T> dce2 = p.cond_proj2.backward(cc.ce, db2, &g.cond_proj2);
        std::vector<T> dce3 = p.cond_proj3.backward(cc.ce, db3, &g.cond_proj3);
        T* trow = g.cond_table.data() + (size_t)cond * kEmbDim;
        for (int i = 0; i < kEmbDim; ++i) trow[i] += dce[i] + dce2[i] + dce3[i];
    }

    if (branch) {
        // injections: h1 += zero0(bf1), h2 += zero1(bf2); the full dh1/dh2
        // reach the zero convs since the injections are plain sums
        Tensor<T> dbf2 = nn::conv_backward(br->zero1, cc.bf2, dh2, &gbr->zero1);
        Tensor<T> dbf1 = nn::conv_backward(br->zero0, cc.bf1, dh1, &gbr->zero0);
        Tensor<T> dba2 = nn::relu_backward(cc.ba2, dbf2);
        Tensor<T> dbd = nn::conv_backward(br->block2, cc.bd, dba2, &gbr->block2);
        Tensor<T> dbh1 = nn::conv_backward(br->down, cc.bf1, dbd, &gbr->down);
        for (size_t i = 0; i < dbh1.data.size(); ++i) dbh1.data[i] += dbf1.data[i];
        Tensor<T> dba1 = nn::relu_backward(cc.ba1, dbh1);
        Tensor<T> dbs = nn::conv_backward(br->block1, cc.bs, dba1, &gbr->block1);
        nn::conv_backward(br->stem, cc.z, dbs, &gbr->stem);
        nn::conv_backward(br->hint, cc.C, dbs, &gbr->hint);
    }
}

// ---------------------------- loss + grads --------------------------------

template <typename T>
struct Sample {
    Tensor<T> z0;
    int cond = 0;
    int t = 1;
    Tensor<T> eps;
};

// MSE between eps and the predicted noise, mean over batch and elements;
// exact reverse-mode grads for the stage's trainable parameters (grads for
// frozen parameters stay zero). When branch is set, C = ffm(z0, mask) per
// sample with no shuffle.
template <typename T>
double loss_and_grads(const ModelParams<T>& p, std::optional<BandKind> branch,
                      const std::vector<Sample<T>>& batch,
                      const diffusion::NoiseSchedule& sched,
                      const filters::BandMask* mask_for_branch, ModelParams<T>& grads) {
    if (batch.empty()) throw std::invalid_argument("loss_and_grads: empty batch");
    if (branch && !mask_for_branch)
        throw std::invalid_argument("loss_and_grads: branch stage needs its mask");
    const ControlBranch<T>* br = branch ? &p.branches.at(*branch) : nullptr;
    double loss = 0;
    ForwardCache<T> cc;
    for (const Sample<T>& s : batch) {
        Tensor<T> z_t = diffusion::q_sample(s.z0, s.t, s.eps, sched);
        Tensor<T> C;
        if (branch) C = filters::ffm(s.z0, *mask_for_branch);
        forward_common<T>(p, z_t, s.t, s.cond, br, branch ? &C : nullptr, cc);
        size_t n = cc.out.data.size();
        double scale = 2.0 / ((double)batch.size() * n);
        Tensor<T> d_out(cc.out.h, cc.out.w, cc.out.c);
        for (size_t i = 0; i < n; ++i) {
            double r = (double)cc.out.data[i] - (double)s.eps.data[i];
            loss += r * r;
            d_out.data[i] = (T)(scale * r);
        }
        backward(p, cc, d_out, branch, s.cond, grads);
    }
    loss /= (double)batch.size() * cc.out.data.size();
    if (!std::isfinite(loss)) throw NumericError("loss_and_grads: non-finite loss");
    return loss;
}

// ----------------------------- checkpoints --------------------------------

namespace ckpt {
constexpr char kMagic[4] = {'F', 'C', 'C', 'K'};
constexpr uint32_t kVersion = 1;
}  // namespace ckpt

void save_checkpoint(const std::string& path, ModelParams<float>& p);
ModelParams<float> load_checkpoint(const std::string& path);

}  // namespace fcdiff::model
