#pragma once

#include <cstdint>
#include <vector>

// Seeded randomness used across the project.
//
// Every random draw is made from a stream derived from (master seed,
// purpose, index) so that, e.g., adding entities to a graph never
// perturbs the draws of existing entities, and independent pipeline
// stages never share a stream. SplitMix64 is used both as the mixing
// function and as the generator; its output sequence is fully portable,
// unlike the std::uniform_* distributions.

namespace kgq {

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~0ull; }

    std::uint64_t operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Unbiased integer in [0, bound). Lemire multiply-shift with rejection.
    std::uint64_t below(std::uint64_t bound) {
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t threshold = (0ull - bound) % bound;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Uniform double in [0, 1).
    double unit() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform double in (0, 1].
    double unit_open_zero() {
        return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform double in [lo, hi).
    double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

private:
    std::uint64_t state_;
};

// Stream purposes. Values are part of the reproducibility contract:
// renumbering them changes every derived stream.
enum class Rs : std::uint64_t {
    SynthGraph = 1,
    AnchorSample = 2,
    MatchRelations = 3,
    MatchAnchors = 4,
    AnchorPad = 5,
    Weights = 6,
    AbstractCode = 7,
    ParamInit = 8,
    PhaseInit = 9,
    Shuffle = 10,
    Negatives = 11,
    Degrade = 12,
    Trial = 13,
    Baseline = 14,
};

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derived stream seed for (master seed, purpose, index).
inline std::uint64_t derive_seed(std::uint64_t seed, Rs purpose,
                                 std::uint64_t index = 0) {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ull);
    h = mix64(h ^ (static_cast<std::uint64_t>(purpose) * 0xff51afd7ed558ccdull));
    h = mix64(h ^ (index * 0xc4ceb9fe1a85ec53ull));
    return h;
}

inline SplitMix64 derived_rng(std::uint64_t seed, Rs purpose,
                              std::uint64_t index = 0) {
    return SplitMix64(derive_seed(seed, purpose, index));
}

// Uniform sample of `count` distinct values from [0, universe), sorted
// ascending. Floyd's algorithm; every size-`count` subset is equiprobable.
std::vector<std::uint32_t> sample_without_replacement(std::uint32_t universe,
                                                      std::uint32_t count,
                                                      SplitMix64& rng);

// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = rng.below(i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace kgq
