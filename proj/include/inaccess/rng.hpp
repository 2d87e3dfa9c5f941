#pragma once

#include <bit>
#include <cstdint>
#include <random>

namespace inaccess {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of path `path_index` under `master_seed`. Depends only on the pair,
/// so a path draws the same numbers however the paths are scheduled.
constexpr std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t path_index) noexcept {
    return splitmix64(master_seed ^ splitmix64(path_index + 0x632be59bd9b4e019ULL));
}

/// Deterministic uniform in [0, 1) keyed by (seed, a, b).
inline double hashed_uniform(std::uint64_t seed, std::uint64_t a, double b) noexcept {
    const std::uint64_t h = splitmix64(seed ^ splitmix64(a ^ splitmix64(std::bit_cast<std::uint64_t>(b))));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Per-path Gaussian source.
class PathRng {
public:
    explicit PathRng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace inaccess
