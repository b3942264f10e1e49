#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcdiff/tensor.hpp"

namespace fcdiff::data {

// H x W x 3, 8-bit; H and W must be even for the space-to-depth codec.
struct Image {
    int h = 0, w = 0;
    std::vector<uint8_t> pix;  // (i*w + j)*3 + ch

    Image() = default;
    Image(int h_, int w_) : h(h_), w(w_), pix((size_t)h_ * w_ * 3, 0) {}

    uint8_t& at(int i, int j, int ch) { return pix[((size_t)i * w + j) * 3 + ch]; }
    uint8_t at(int i, int j, int ch) const { return pix[((size_t)i * w + j) * 3 + ch]; }
};

// ------------------------- synthetic dataset -------------------------------

enum class Palette { Warm, Cool, Mono, Green };
enum class Shape { Circles, Squares, Stripes, Triangles };

constexpr int kNumPalettes = 4;
constexpr int kNumShapes = 4;
constexpr int kVocab = kNumPalettes * kNumShapes;

struct DatasetSpec {
    int num_images = 512;
    int image_size = 32;  // H = W, even
    uint64_t seed = 0;
};

inline int token_of(Palette p, Shape s) { return (int)p * kNumShapes + (int)s; }
inline Palette palette_of_token(int tok) { return (Palette)(tok / kNumShapes); }
inline Shape shape_of_token(int tok) { return (Shape)(tok % kNumShapes); }

// background gradient only (used by band-energy comparisons)
Image generate_background(const DatasetSpec& spec, int index);
// full image: gradient background + 3..6 hard-edged shapes; pure in (spec, index)
std::pair<Image, int> generate(const DatasetSpec& spec, int index);

// deterministic 9:1 split by index hash; true = held out
bool is_held_out(const DatasetSpec& spec, int index);

// ----------------------------- latent codec --------------------------------

// factor-2 space-to-depth: (H,W,3) bytes -> (H/2,W/2,12) floats in [-1,1].
// Lossless: decode(encode(X)) == X bit-for-bit.
SpatialTensor encode(const Image& img);
Image decode(const SpatialTensor& z);

// ------------------------------- file I/O ----------------------------------

Image read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Image& img);

// "FCDT", u32 rank, u32 dims..., row-major f32 little-endian
SpatialTensor read_tensor(const std::string& path);
void write_tensor(const std::string& path, const SpatialTensor& t);

}  // namespace fcdiff::data
