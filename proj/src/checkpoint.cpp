#include <cstring>
#include <fstream>

#include "fcdiff/model.hpp"

namespace fcdiff::model {

namespace {

void write_u32(std::ofstream& f, uint32_t v) {
    unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                          (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
    f.write((char*)b, 4);
}

uint32_t read_u32(std::ifstream& f) {
    unsigned char b[4];
    f.read((char*)b, 4);
    if (f.gcount() != 4) throw FormatError("checkpoint: truncated");
    return (uint32_t)b[0] | ((uint32_t)b[1] << 8) | ((uint32_t)b[2] << 16) | ((uint32_t)b[3] << 24);
}

}  // namespace

void save_checkpoint(const std::string& path, ModelParams<float>& p) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("save_checkpoint: cannot open " + path);
    f.write(ckpt::kMagic, 4);
    write_u32(f, ckpt::kVersion);
    write_u32(f, (uint32_t)p.c);
    write_u32(f, (uint32_t)p.V);
    // branch presence bitmask over {mini, low, mid, high}
    uint32_t bmask = 0;
    for (auto& [k, b] : p.branches) bmask |= 1u << (uint32_t)k;
    write_u32(f, bmask);
    std::vector<ParamRef<float>> refs;
    collect_params(p, refs);
    write_u32(f, (uint32_t)refs.size());
    for (auto& r : refs) {
        write_u32(f, (uint32_t)r.name.size());
        f.write(r.name.data(), (std::streamsize)r.name.size());
        write_u32(f, (uint32_t)r.shape.size());
        for (int d : r.shape) write_u32(f, (uint32_t)d);
        f.write((const char*)r.vals->data(), (std::streamsize)(r.vals->size() * 4));
    }
    if (!f) throw FormatError("save_checkpoint: write failed for " + path);
}

ModelParams<float> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("load_checkpoint: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (f.gcount() != 4 || std::memcmp(magic, ckpt::kMagic, 4) != 0)
        throw FormatError("load_checkpoint: bad magic in " + path);
    uint32_t version = read_u32(f);
    if (version != ckpt::kVersion)
        throw FormatError("load_checkpoint: unsupported version " + std::to_string(version));
    int c = (int)read_u32(f);
    int V = (int)read_u32(f);
    uint32_t bmask = read_u32(f);
    ModelParams<float> p;
    init_structure(p, c, V);
    for (uint32_t k = 0; k < 4; ++k)
        if (bmask & (1u << k)) attach_branch(p, (BandKind)k, 0);
    std::vector<ParamRef<float>> refs;
    collect_params(p, refs);
    uint32_t n = read_u32(f);
    if (n != refs.size()) throw FormatError("load_checkpoint: record count mismatch");
    for (auto& r : refs) {
        uint32_t len = read_u32(f);
        std::string name(len, '\0');
        f.read(name.data(), len);
        if (name != r.name) throw FormatError("load_checkpoint: unexpected record '" + name +
                                              "', want '" + r.name + "'");
        uint32_t rank = read_u32(f);
        if (rank != r.shape.size()) throw FormatError("load_checkpoint: rank mismatch for " + name);
        size_t count = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            uint32_t dim = read_u32(f);
            if ((int)dim != r.shape[d])
                throw FormatError("load_checkpoint: shape mismatch for " + name);
            count *= dim;
        }
        f.read((char*)r.vals->data(), (std::streamsize)(count * 4));
        if ((size_t)f.gcount() != count * 4)
            throw FormatError("load_checkpoint: truncated values for " + name);
    }
    return p;
}

}  // namespace fcdiff::model
