#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "fcdiff/filters.hpp"
#include "fcdiff/rng.hpp"

using namespace fcdiff;
using namespace fcdiff::filters;

namespace {

Tensor<float> random_tensor(int h, int w, int c, uint64_t seed) {
    Rng rng(seed);
    Tensor<float> t(h, w, c);
    for (auto& v : t.data) v = (float)rng.next_gaussian();
    return t;
}

// per-level sorted coefficient lists (multiset comparison helper)
std::map<int, std::vector<float>> level_multisets(const Tensor<float>& f, int channel) {
    std::map<int, std::vector<float>> m;
    for (int u = 0; u < f.h; ++u)
        for (int v = 0; v < f.w; ++v) m[u + v].push_back(f.at(u, v, channel));
    for (auto& [lvl, vals] : m) std::sort(vals.begin(), vals.end());
    return m;
}

}  // namespace

TEST_CASE("named masks at 64x64 match the reference inequalities exhaustively") {
    auto mini = make_mask(BandKind::Mini, 64, 64);
    auto low = make_mask(BandKind::Low, 64, 64);
    auto mid = make_mask(BandKind::Mid, 64, 64);
    auto high = make_mask(BandKind::High, 64, 64);
    for (int u = 0; u < 64; ++u)
        for (int v = 0; v < 64; ++v) {
            int l = u + v;
            CHECK(mini.at(u, v) == (l <= 10 ? 1 : 0));
            CHECK(low.at(u, v) == (l <= 20 ? 1 : 0));
            CHECK(mid.at(u, v) == (l > 20 && l <= 40 ? 1 : 0));
            CHECK(high.at(u, v) == (l >= 50 ? 1 : 0));
        }
}

TEST_CASE("64x64 spot checks and band relations") {
    auto mini = make_mask(BandKind::Mini, 64, 64);
    auto low = make_mask(BandKind::Low, 64, 64);
    auto mid = make_mask(BandKind::Mid, 64, 64);
    auto high = make_mask(BandKind::High, 64, 64);
    CHECK(mini.at(5, 5) == 1);
    CHECK(mini.at(6, 5) == 0);
    CHECK(low.at(20, 0) == 1);
    CHECK(mid.at(20, 0) == 0);
    CHECK(mid.at(21, 0) == 1);
    CHECK(mid.at(40, 0) == 1);
    CHECK(mid.at(41, 0) == 0);
    CHECK(high.at(25, 25) == 1);
    for (int u = 0; u < 64; ++u)
        for (int v = 0; v < 64; ++v) {
            int l = u + v;
            if (l == 45) {
                CHECK(mini.at(u, v) == 0);
                CHECK(low.at(u, v) == 0);
                CHECK(mid.at(u, v) == 0);
                CHECK(high.at(u, v) == 0);
            }
            if (mini.at(u, v)) CHECK(low.at(u, v) == 1);      // Mini subset of Low
            CHECK((mid.at(u, v) & low.at(u, v)) == 0);        // Mid disjoint from Low
            CHECK((high.at(u, v) & (low.at(u, v) | mid.at(u, v))) == 0);
            if (l >= 41 && l <= 49) {
                CHECK(mini.at(u, v) + low.at(u, v) + mid.at(u, v) + high.at(u, v) == 0);
            }
        }
}

TEST_CASE("masks at other shapes are non-empty and scale the thresholds") {
    for (auto [h, w] : {std::pair{16, 16}, {8, 12}, {32, 32}}) {
        for (auto k : {BandKind::Mini, BandKind::Low, BandKind::Mid, BandKind::High}) {
            auto m = make_mask(k, h, w);
            int count = 0;
            for (auto b : m.bits) count += b;
            CHECK(count > 0);
        }
    }
}

TEST_CASE("custom masks") {
    auto all = make_mask(BandKind::Custom, 6, 6, 0, 10);
    for (auto b : all.bits) CHECK(b == 1);
    CHECK_THROWS(make_mask(BandKind::Custom, 6, 6, 5, 2));
    CHECK_THROWS(make_mask(BandKind::Low, 0, 4));
}

TEST_CASE("apply_mask identity, zero, subset and energy") {
    auto f = random_tensor(16, 16, 3, 5);
    auto all = full_mask(16, 16);
    auto out = apply_mask(f, all);
    CHECK(out.data == f.data);

    auto none = make_mask(BandKind::Custom, 16, 16, 0, 0);
    std::fill(none.bits.begin(), none.bits.end(), 0);
    auto z = apply_mask(f, none);
    for (auto v : z.data) CHECK(v == 0.0f);

    auto mini = make_mask(BandKind::Mini, 16, 16);
    auto low = make_mask(BandKind::Low, 16, 16);
    auto fm = apply_mask(f, mini);
    auto fl = apply_mask(f, low);
    for (int u = 0; u < 16; ++u)
        for (int v = 0; v < 16; ++v)
            if (mini.at(u, v))
                for (int k = 0; k < 3; ++k) CHECK(fm.at(u, v, k) == fl.at(u, v, k));
    CHECK(fm.sq_norm() <= f.sq_norm());
    CHECK(fl.sq_norm() <= f.sq_norm());

    Tensor<float> bad(4, 4, 1);
    CHECK_THROWS_AS((void)apply_mask(bad, mini), ShapeError);
}

TEST_CASE("ffm round trip, band limiting, idempotence") {
    auto z0 = random_tensor(16, 16, 4, 9);
    auto all = full_mask(16, 16);
    auto c = ffm(z0, all);
    for (size_t i = 0; i < c.data.size(); ++i) CHECK(std::abs(c.data[i] - z0.data[i]) < 1e-5f);

    auto low = make_mask(BandKind::Low, 16, 16);
    auto cl = ffm(z0, low);
    auto fcl = spectral::dct2(cl);
    for (int u = 0; u < 16; ++u)
        for (int v = 0; v < 16; ++v)
            if (!low.at(u, v))
                for (int k = 0; k < 4; ++k) CHECK(std::abs(fcl.at(u, v, k)) < 1e-5f);

    auto cl2 = ffm(cl, low);
    for (size_t i = 0; i < cl.data.size(); ++i) CHECK(std::abs(cl2.data[i] - cl.data[i]) < 2e-5f);
}

TEST_CASE("ffm with shuffle preserves per-level multisets within round-trip tolerance") {
    auto z0 = random_tensor(16, 16, 2, 13);
    auto mini = make_mask(BandKind::Mini, 16, 16);
    auto plain = spectral::dct2(ffm(z0, mini));
    auto shuffled = spectral::dct2(ffm(z0, mini, 42u));
    for (int k = 0; k < 2; ++k) {
        auto mp = level_multisets(plain, k);
        auto ms = level_multisets(shuffled, k);
        for (auto& [lvl, vals] : mp) {
            REQUIRE(ms[lvl].size() == vals.size());
            for (size_t i = 0; i < vals.size(); ++i) CHECK(std::abs(ms[lvl][i] - vals[i]) < 1e-4f);
        }
    }
}

TEST_CASE("equifrequency shuffle invariants") {
    auto f = random_tensor(16, 16, 3, 21);
    auto s1 = equifrequency_shuffle(f, 7);
    auto s2 = equifrequency_shuffle(f, 7);
    CHECK(s1.data == s2.data);  // determinism

    auto s3 = equifrequency_shuffle(f, 8);
    CHECK(s3.data != s1.data);

    for (int k = 0; k < 3; ++k) CHECK(s1.at(0, 0, k) == f.at(0, 0, k));  // level-0 singleton

    // per-level multisets (hence per-level energies) preserved bit-for-bit
    for (int k = 0; k < 3; ++k) {
        auto before = level_multisets(f, k);
        auto after = level_multisets(s1, k);
        CHECK(before == after);
    }

    // shared-channel mode applies one permutation to all channels
    Tensor<float> g(8, 8, 2);
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v)
            for (int k = 0; k < 2; ++k) g.at(u, v, k) = (float)(u * 8 + v);
    auto sh = equifrequency_shuffle(g, 3, true);
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) CHECK(sh.at(u, v, 0) == sh.at(u, v, 1));
}

TEST_CASE("band energy profile") {
    // spectrum of the 2x2 delta input: all coefficients 0.5
    Tensor<float> f(2, 2, 1);
    for (auto& v : f.data) v = 0.5f;
    auto prof = band_energy_profile(f);
    REQUIRE(prof.size() == 3);
    CHECK(prof[0] == std::pair{0, 0.25});
    CHECK(prof[1] == std::pair{1, 0.5});
    CHECK(prof[2] == std::pair{2, 0.25});

    Tensor<float> zero(4, 4, 2);
    for (auto& [lvl, e] : band_energy_profile(zero)) CHECK(e == 0.0);

    // total energy and shuffle invariance
    auto r = random_tensor(12, 8, 2, 33);
    auto p1 = band_energy_profile(r);
    double tot = 0;
    for (auto& [lvl, e] : p1) tot += e;
    CHECK(std::abs(tot - (double)r.sq_norm()) < 1e-3);
    for (uint64_t s : {1u, 2u, 3u}) {
        auto p2 = band_energy_profile(equifrequency_shuffle(r, s));
        for (size_t i = 0; i < p1.size(); ++i)
            CHECK(std::abs(p1[i].second - p2[i].second) < 1e-9);
    }
}

TEST_CASE("band consistency") {
    auto x = random_tensor(16, 16, 4, 55);
    auto low = make_mask(BandKind::Low, 16, 16);
    CHECK(band_consistency(x, x, low) == doctest::Approx(1.0));

    Tensor<float> zero(16, 16, 4);
    CHECK(band_consistency(x, zero, low) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK_THROWS_AS(band_consistency(zero, x, low), NumericError);

    auto filtered = ffm(x, low);
    CHECK(band_consistency(x, filtered, low) >= 1.0 - 1e-4);
}
