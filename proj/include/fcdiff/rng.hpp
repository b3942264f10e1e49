#pragma once

#include <cmath>
#include <cstdint>

namespace fcdiff {

// splitmix64; used both as a stream generator and as a seed mixer so that
// derived streams (per channel, per level, per sample) are reproducible
// across platforms. std::normal_distribution is implementation-defined,
// hence the hand-rolled Box-Muller below.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t s = a ^ (b * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    splitmix64(s);
    return s;
}

class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) { splitmix64(state_); }

    uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1)
    double next_double() { return (double)(next_u64() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    uint64_t next_below(uint64_t n) {
        // modulo bias is negligible for n << 2^64 and irrelevant here
        return next_u64() % n;
    }

    // standard normal via Box-Muller, one value per call (cached pair)
    double next_gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1, u2;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

  private:
    uint64_t state_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace fcdiff
