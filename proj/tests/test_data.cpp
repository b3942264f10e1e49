#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "fcdiff/data.hpp"
#include "fcdiff/filters.hpp"

using namespace fcdiff;
using namespace fcdiff::data;

TEST_CASE("generation is deterministic and labeled") {
    DatasetSpec spec;
    spec.num_images = 64;
    spec.seed = 5;
    auto [a, ta] = generate(spec, 17);
    auto [b, tb] = generate(spec, 17);
    CHECK(a.pix == b.pix);
    CHECK(ta == tb);
    CHECK(ta == 17 % kVocab);
    CHECK_THROWS_AS(generate(spec, 64), std::out_of_range);
    CHECK_THROWS_AS(generate(spec, -1), std::out_of_range);
}

TEST_CASE("warm images are redder than blue; cool the reverse") {
    DatasetSpec spec;
    spec.num_images = 256;
    spec.seed = 9;
    for (int i = 0; i < spec.num_images; ++i) {
        auto [img, tok] = generate(spec, i);
        double r = 0, b = 0;
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x) {
                r += img.at(y, x, 0);
                b += img.at(y, x, 2);
            }
        Palette p = palette_of_token(tok);
        if (p == Palette::Warm) CHECK(r > b);
        if (p == Palette::Cool) CHECK(b > r);
    }
}

TEST_CASE("striped images carry more high-band latent energy than their backgrounds") {
    DatasetSpec spec;
    spec.num_images = 512;
    spec.seed = 3;
    auto high = filters::make_mask(filters::BandKind::High, 16, 16);
    int tested = 0;
    for (int i = 0; i < spec.num_images && tested < 100; ++i) {
        auto [img, tok] = generate(spec, i);
        if (shape_of_token(tok) != Shape::Stripes) continue;
        ++tested;
        auto with = filters::apply_mask(spectral::dct2(encode(img)), high);
        auto bg = filters::apply_mask(spectral::dct2(encode(generate_background(spec, i))), high);
        CHECK(with.sq_norm() > bg.sq_norm());
    }
    CHECK(tested == 100);
}

TEST_CASE("codec round trip is lossless") {
    DatasetSpec spec;
    spec.num_images = 32;
    spec.seed = 1;
    for (int i = 0; i < 32; ++i) {
        auto [img, tok] = generate(spec, i);
        Image back = decode(encode(img));
        CHECK(back.pix == img.pix);
    }
    // all-black maps to all -1
    Image black(4, 4);
    auto z = encode(black);
    CHECK(z.h == 2);
    CHECK(z.w == 2);
    CHECK(z.c == 12);
    for (float v : z.data) CHECK(v == -1.0f);
    // shape arithmetic
    Image img32(32, 32);
    auto z32 = encode(img32);
    CHECK(z32.h == 16);
    CHECK(z32.w == 16);

    Image odd(3, 4);
    CHECK_THROWS_AS((void)encode(odd), ShapeError);
}

TEST_CASE("ppm round trip and format errors") {
    DatasetSpec spec;
    spec.num_images = 4;
    spec.seed = 2;
    auto [img, tok] = generate(spec, 0);
    write_ppm("t.ppm", img);
    Image back = read_ppm("t.ppm");
    CHECK(back.h == img.h);
    CHECK(back.w == img.w);
    CHECK(back.pix == img.pix);
    std::remove("t.ppm");

    {
        std::ofstream f("bad.ppm", std::ios::binary);
        f << "P5\n2 2\n255\n";
    }
    CHECK_THROWS_AS((void)read_ppm("bad.ppm"), FormatError);
    {
        std::ofstream f("bad.ppm", std::ios::binary);
        f << "P6\n2 2\n65535\n";
    }
    CHECK_THROWS_AS((void)read_ppm("bad.ppm"), FormatError);
    {
        std::ofstream f("bad.ppm", std::ios::binary);
        f << "P6\n2 2\n255\nab";  // truncated
    }
    CHECK_THROWS_AS((void)read_ppm("bad.ppm"), FormatError);
    std::remove("bad.ppm");
}

TEST_CASE("tensor file round trip and format errors") {
    SpatialTensor t(3, 5, 2);
    Rng rng(8);
    for (auto& v : t.data) v = (float)rng.next_gaussian();
    write_tensor("t.fcdt", t);
    auto back = read_tensor("t.fcdt");
    CHECK(back.h == 3);
    CHECK(back.w == 5);
    CHECK(back.c == 2);
    CHECK(back.data == t.data);
    std::remove("t.fcdt");

    {
        std::ofstream f("bad.fcdt", std::ios::binary);
        f << "NOPE";
    }
    CHECK_THROWS_AS((void)read_tensor("bad.fcdt"), FormatError);
    {
        std::ofstream f("bad.fcdt", std::ios::binary);
        f << "FCDT";
        uint32_t rank = 3, dims[3] = {4, 4, 4};
        f.write((char*)&rank, 4);
        f.write((char*)dims, 12);
        float one = 1.0f;
        f.write((char*)&one, 4);  // far fewer values than 64
    }
    CHECK_THROWS_AS((void)read_tensor("bad.fcdt"), FormatError);
    std::remove("bad.fcdt");
}

TEST_CASE("held-out split is deterministic and roughly 1 in 10") {
    DatasetSpec spec;
    spec.num_images = 512;
    spec.seed = 7;
    int held = 0;
    for (int i = 0; i < spec.num_images; ++i) {
        CHECK(is_held_out(spec, i) == is_held_out(spec, i));
        if (is_held_out(spec, i)) ++held;
    }
    CHECK(held > 20);
    CHECK(held < 110);
}

TEST_CASE("band statistics separate palette and shape classes") {
    DatasetSpec spec;
    spec.num_images = 160;
    spec.seed = 11;
    auto mini = filters::make_mask(filters::BandKind::Mini, 16, 16);
    auto high = filters::make_mask(filters::BandKind::High, 16, 16);
    // between-class variance must exceed within-class variance for the
    // band statistic tied to each label axis; statistics are vectors and the
    // ratio compares scatter-matrix traces
    std::vector<std::vector<std::vector<double>>> mini_by_palette(kNumPalettes),
        high_by_shape(kNumShapes);
    for (int i = 0; i < spec.num_images; ++i) {
        auto [img, tok] = generate(spec, i);
        auto f = spectral::dct2(encode(img));
        auto fm = filters::apply_mask(f, mini);
        // mini statistic: DC chroma coordinates (red-blue and green-excess of
        // the mean color, averaged over the codec's four pixel positions)
        double r = 0, g = 0, b = 0;
        for (int pos = 0; pos < 4; ++pos) {
            r += fm.at(0, 0, pos * 3 + 0);
            g += fm.at(0, 0, pos * 3 + 1);
            b += fm.at(0, 0, pos * 3 + 2);
        }
        r /= 4, g /= 4, b /= 4;
        mini_by_palette[(int)palette_of_token(tok)].push_back({r - b, g - (r + b) / 2});
        // shape statistic: total high-band energy
        high_by_shape[(int)shape_of_token(tok)].push_back(
            {filters::apply_mask(f, high).sq_norm()});
    }
    auto fisher = [](const std::vector<std::vector<std::vector<double>>>& groups) {
        size_t d = groups[0][0].size();
        std::vector<double> grand(d, 0.0);
        int n = 0;
        for (auto& g : groups)
            for (auto& v : g) {
                for (size_t k = 0; k < d; ++k) grand[k] += v[k];
                ++n;
            }
        for (auto& x : grand) x /= n;
        double between = 0, within = 0;
        for (auto& g : groups) {
            std::vector<double> m(d, 0.0);
            for (auto& v : g)
                for (size_t k = 0; k < d; ++k) m[k] += v[k];
            for (auto& x : m) x /= g.size();
            for (size_t k = 0; k < d; ++k)
                between += g.size() * (m[k] - grand[k]) * (m[k] - grand[k]);
            for (auto& v : g)
                for (size_t k = 0; k < d; ++k) within += (v[k] - m[k]) * (v[k] - m[k]);
        }
        return between / within;
    };
    CHECK(fisher(high_by_shape) > 1.0);
    CHECK(fisher(mini_by_palette) > 1.0);
}
