#pragma once

#include <cstdint>
#include <random>

#include "splitcop/numerics.hpp"

namespace splitcop {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Child stream seed for replicate/window `index` of a run seeded `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Deterministic generator: mt19937_64 (sequence fixed by the standard)
/// with inverse-CDF normals, so streams are reproducible bit for bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform on the open interval (0,1); consumes exactly one draw.
    double uniform01() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1p-53;
    }

    double normal() { return num::std_normal_quantile(uniform01()); }

private:
    std::mt19937_64 eng_;
};

} // namespace splitcop
