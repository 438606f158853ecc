#pragma once

#include <cstdint>
#include <random>

namespace posereg {

/// Seeded generator with hand-rolled draws, so streams are identical across
/// standard library implementations (std distributions are not portable).
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t bits() { return gen_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    int uniform_int(int n) { return static_cast<int>(gen_() % static_cast<uint64_t>(n)); }

private:
    std::mt19937_64 gen_;
};

/// Stream splitter: derives independent seeds from a base seed and an index.
inline uint64_t derive_seed(uint64_t base, uint64_t index) {
    uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace posereg
