#include "fcdiff/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "fcdiff/rng.hpp"

namespace fcdiff::data {

namespace {

struct Rgb {
    double r, g, b;
};

// palette gradient endpoints; jittered per image so the token alone does not
// pin down the exact colors (the mini band has to carry that information)
void palette_colors(Palette p, Rng& rng, Rgb& a, Rgb& b) {
    switch (p) {
        case Palette::Warm: a = {200, 90, 40}; b = {250, 170, 90}; break;
        case Palette::Cool: a = {40, 80, 200}; b = {100, 160, 250}; break;
        case Palette::Mono: a = {40, 40, 40}; b = {210, 210, 210}; break;
        case Palette::Green: a = {30, 160, 60}; b = {120, 230, 140}; break;
    }
    auto jit = [&](double& v, double lo, double hi) {
        v = std::clamp(v + (rng.next_double() * 2 - 1) * 25.0, lo, hi);
    };
    // keep warm red > blue and cool blue > red under jitter
    jit(a.r, 0, 255); jit(a.g, 0, 255); jit(a.b, 0, 255);
    jit(b.r, 0, 255); jit(b.g, 0, 255); jit(b.b, 0, 255);
    if (p == Palette::Warm) {
        a.b = std::min(a.b, a.r - 60);
        b.b = std::min(b.b, b.r - 60);
    } else if (p == Palette::Cool) {
        a.r = std::min(a.r, a.b - 60);
        b.r = std::min(b.r, b.b - 60);
    }
}

uint8_t q8(double v) { return (uint8_t)std::clamp((int)std::lround(v), 0, 255); }

void fill_background(Image& img, const Rgb& a, const Rgb& b, double angle) {
    double ca = std::cos(angle), sa = std::sin(angle);
    for (int i = 0; i < img.h; ++i) {
        for (int j = 0; j < img.w; ++j) {
            double x = (double)j / (img.w - 1), y = (double)i / (img.h - 1);
            double m = std::clamp(0.5 + (x - 0.5) * ca + (y - 0.5) * sa, 0.0, 1.0);
            img.at(i, j, 0) = q8(a.r + (b.r - a.r) * m);
            img.at(i, j, 1) = q8(a.g + (b.g - a.g) * m);
            img.at(i, j, 2) = q8(a.b + (b.b - a.b) * m);
        }
    }
}

void put(Image& img, int i, int j, const Rgb& c) {
    if (i < 0 || i >= img.h || j < 0 || j >= img.w) return;
    img.at(i, j, 0) = q8(c.r);
    img.at(i, j, 1) = q8(c.g);
    img.at(i, j, 2) = q8(c.b);
}

void draw_shape(Image& img, Shape s, Rng& rng, const Rgb& col) {
    int H = img.h, W = img.w;
    switch (s) {
        case Shape::Circles: {
            int r = 3 + (int)rng.next_below(4);
            int ci = (int)rng.next_below(H), cj = (int)rng.next_below(W);
            for (int i = ci - r; i <= ci + r; ++i)
                for (int j = cj - r; j <= cj + r; ++j)
                    if ((i - ci) * (i - ci) + (j - cj) * (j - cj) <= r * r) put(img, i, j, col);
            break;
        }
        case Shape::Squares: {
            int side = 5 + (int)rng.next_below(6);
            int i0 = (int)rng.next_below(H), j0 = (int)rng.next_below(W);
            for (int i = i0; i < i0 + side; ++i)
                for (int j = j0; j < j0 + side; ++j) put(img, i, j, col);
            break;
        }
        case Shape::Stripes: {
            // period-4 grating patch (2 on, 2 off); period 4 in pixels is
            // period 2 in the space-to-depth latent, the highest latent
            // frequency, so stripes dominate the high band
            int extent = 10 + (int)rng.next_below(5);
            bool horiz = rng.next_below(2) == 0;
            int off = (int)rng.next_below(horiz ? H : W);
            for (int a = off; a < off + extent; ++a) {
                if ((a - off) % 4 >= 2) continue;
                for (int b = 0; b < (horiz ? W : H); ++b)
                    horiz ? put(img, a, b, col) : put(img, b, a, col);
            }
            break;
        }
        case Shape::Triangles: {
            int size = 6 + (int)rng.next_below(7);
            int i0 = (int)rng.next_below(H), j0 = (int)rng.next_below(W);
            for (int di = 0; di < size; ++di)
                for (int dj = 0; dj <= di; ++dj) put(img, i0 + di, j0 + dj, col);
            break;
        }
    }
}

}  // namespace

Image generate_background(const DatasetSpec& spec, int index) {
    if (index < 0 || index >= spec.num_images) throw std::out_of_range("generate: index out of range");
    int tok = index % kVocab;
    Palette p = palette_of_token(tok);
    Rng rng(mix_seed(spec.seed, (uint64_t)index));
    Rgb a, b;
    palette_colors(p, rng, a, b);
    double angle = rng.next_double() * 2 * 3.14159265358979323846;
    Image img(spec.image_size, spec.image_size);
    fill_background(img, a, b, angle);
    return img;
}

std::pair<Image, int> generate(const DatasetSpec& spec, int index) {
    if (index < 0 || index >= spec.num_images) throw std::out_of_range("generate: index out of range");
    int tok = index % kVocab;
    Palette p = palette_of_token(tok);
    Shape s = shape_of_token(tok);
    Rng rng(mix_seed(spec.seed, (uint64_t)index));
    Rgb a, b;
    palette_colors(p, rng, a, b);
    double angle = rng.next_double() * 2 * 3.14159265358979323846;
    Image img(spec.image_size, spec.image_size);
    fill_background(img, a, b, angle);
    // shapes in a darkened palette tone: hard edges without shifting the
    // image off its palette's color axis
    Rgb col = {a.r * 0.45, a.g * 0.45, a.b * 0.45};
    int count = 3 + (int)rng.next_below(4);
    for (int n = 0; n < count; ++n) draw_shape(img, s, rng, col);
    return {img, tok};
}

bool is_held_out(const DatasetSpec& spec, int index) {
    uint64_t h = mix_seed(spec.seed ^ 0x73706c6974ULL, (uint64_t)index);
    return h % 10 == 0;
}

SpatialTensor encode(const Image& img) {
    if (img.h % 2 != 0 || img.w % 2 != 0) throw ShapeError("encode: image dims must be even");
    SpatialTensor z(img.h / 2, img.w / 2, 12);
    for (int i = 0; i < z.h; ++i)
        for (int j = 0; j < z.w; ++j)
            for (int di = 0; di < 2; ++di)
                for (int dj = 0; dj < 2; ++dj)
                    for (int ch = 0; ch < 3; ++ch)
                        z.at(i, j, (di * 2 + dj) * 3 + ch) =
                            (float)img.at(2 * i + di, 2 * j + dj, ch) / 127.5f - 1.0f;
    return z;
}

Image decode(const SpatialTensor& z) {
    if (z.c != 12) throw ShapeError("decode: latent must have 12 channels");
    Image img(z.h * 2, z.w * 2);
    for (int i = 0; i < z.h; ++i)
        for (int j = 0; j < z.w; ++j)
            for (int di = 0; di < 2; ++di)
                for (int dj = 0; dj < 2; ++dj)
                    for (int ch = 0; ch < 3; ++ch) {
                        float v = (z.at(i, j, (di * 2 + dj) * 3 + ch) + 1.0f) * 127.5f;
                        img.at(2 * i + di, 2 * j + dj, ch) = q8(v);
                    }
    return img;
}

// ------------------------------- PPM ---------------------------------------

Image read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("read_ppm: cannot open " + path);
    auto fail = [&](const std::string& msg) {
        throw FormatError("read_ppm: " + msg + " at byte " + std::to_string((long)f.tellg()) +
                          " in " + path);
    };
    std::string magic;
    f >> magic;
    if (magic != "P6") fail("bad magic '" + magic + "' (want P6)");
    auto next_int = [&]() {
        // skip whitespace and '#' comments
        int ch;
        while ((ch = f.peek()) != EOF) {
            if (ch == '#') {
                std::string line;
                std::getline(f, line);
            } else if (isspace(ch)) {
                f.get();
            } else {
                break;
            }
        }
        long v = -1;
        f >> v;
        return v;
    };
    long w = next_int(), h = next_int(), maxval = next_int();
    if (w < 1 || h < 1) fail("bad dimensions");
    if (maxval != 255) fail("unsupported maxval " + std::to_string(maxval));
    f.get();  // single whitespace after maxval
    Image img((int)h, (int)w);
    f.read((char*)img.pix.data(), (std::streamsize)img.pix.size());
    if ((size_t)f.gcount() != img.pix.size()) fail("truncated pixel data");
    return img;
}

void write_ppm(const std::string& path, const Image& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("write_ppm: cannot open " + path);
    f << "P6\n" << img.w << " " << img.h << "\n255\n";
    f.write((const char*)img.pix.data(), (std::streamsize)img.pix.size());
    if (!f) throw FormatError("write_ppm: write failed for " + path);
}

// ------------------------------- FCDT --------------------------------------

namespace {
void write_u32(std::ofstream& f, uint32_t v) {
    unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                          (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
    f.write((char*)b, 4);
}
uint32_t read_u32(std::ifstream& f) {
    unsigned char b[4];
    f.read((char*)b, 4);
    if (f.gcount() != 4) throw FormatError("read_tensor: truncated header");
    return (uint32_t)b[0] | ((uint32_t)b[1] << 8) | ((uint32_t)b[2] << 16) | ((uint32_t)b[3] << 24);
}
}  // namespace

SpatialTensor read_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("read_tensor: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (f.gcount() != 4 || std::memcmp(magic, "FCDT", 4) != 0)
        throw FormatError("read_tensor: bad magic in " + path);
    uint32_t rank = read_u32(f);
    if (rank != 3) throw FormatError("read_tensor: expected rank 3, got " + std::to_string(rank));
    uint32_t h = read_u32(f), w = read_u32(f), c = read_u32(f);
    if (h < 1 || w < 1 || c < 1 || (uint64_t)h * w * c > (1u << 28))
        throw FormatError("read_tensor: bad dims");
    SpatialTensor t((int)h, (int)w, (int)c);
    f.read((char*)t.data.data(), (std::streamsize)(t.data.size() * 4));
    if ((size_t)f.gcount() != t.data.size() * 4)
        throw FormatError("read_tensor: dims/length mismatch in " + path);
    return t;
}

void write_tensor(const std::string& path, const SpatialTensor& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("write_tensor: cannot open " + path);
    f.write("FCDT", 4);
    write_u32(f, 3);
    write_u32(f, (uint32_t)t.h);
    write_u32(f, (uint32_t)t.w);
    write_u32(f, (uint32_t)t.c);
    f.write((const char*)t.data.data(), (std::streamsize)(t.data.size() * 4));
    if (!f) throw FormatError("write_tensor: write failed for " + path);
}

}  // namespace fcdiff::data
