#include "kgq/rng.hpp"

#include <algorithm>
#include <unordered_set>

namespace kgq {

std::vector<std::uint32_t> sample_without_replacement(std::uint32_t universe,
                                                      std::uint32_t count,
                                                      SplitMix64& rng) {
    std::vector<std::uint32_t> out;
    if (count == 0) return out;
    out.reserve(count);
    std::unordered_set<std::uint32_t> chosen;
    chosen.reserve(count * 2);
    for (std::uint32_t j = universe - count; j < universe; ++j) {
        const auto t = static_cast<std::uint32_t>(rng.below(j + 1));
        if (!chosen.insert(t).second) {
            chosen.insert(j);
            out.push_back(j);
        } else {
            out.push_back(t);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace kgq
