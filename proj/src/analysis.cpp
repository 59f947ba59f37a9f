#include "kgq/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>

#include "kgq/rng.hpp"

namespace kgq {

CodeDistribution code_distribution(const std::vector<EntityCode>& codes,
                                   bool include_weights) {
    if (codes.empty()) throw Error("code_distribution: no codes");
    std::map<std::vector<std::uint64_t>, std::size_t> counts;
    std::vector<std::uint64_t> key;
    for (const EntityCode& c : codes) {
        key.assign(c.matched.begin(), c.matched.end());
        if (include_weights) {
            key.push_back(~0ull);  // separator
            for (const double w : c.weights)
                key.push_back(std::bit_cast<std::uint64_t>(w));
        }
        ++counts[key];
    }
    CodeDistribution dist;
    dist.total = codes.size();
    dist.distinct = counts.size();
    dist.frequencies.reserve(counts.size());
    for (const auto& [_, f] : counts) dist.frequencies.push_back(f);
    return dist;
}

double entropy_bits(const std::vector<std::size_t>& frequencies) {
    std::size_t total = 0;
    for (const std::size_t f : frequencies) total += f;
    if (total == 0) throw Error("entropy_bits: empty distribution");
    double h = 0.0;
    for (const std::size_t f : frequencies) {
        if (f == 0) continue;
        const double p = static_cast<double>(f) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

double code_entropy(const std::vector<EntityCode>& codes,
                    bool include_weights) {
    return entropy_bits(code_distribution(codes, include_weights).frequencies);
}

double uniqueness_probability_logspace(std::uint32_t l,
                                       std::uint64_t entity_count) {
    if (l < 1) throw Error("uniqueness_probability: l must be >= 1");
    if (entity_count < 1)
        throw Error("uniqueness_probability: entity_count must be >= 1");
    if (entity_count == 1) return 1.0;
    const double pool = std::ldexp(1.0, static_cast<int>(l));  // 2^l
    double log_sum = 0.0;
    for (std::uint64_t i = 1; i < entity_count; ++i) {
        const double frac = static_cast<double>(i) / pool;
        if (frac >= 1.0) return 0.0;
        log_sum += std::log1p(-frac);
    }
    return std::exp(log_sum);
}

double uniqueness_probability(std::uint32_t l, std::uint64_t entity_count) {
    if (l < 1) throw Error("uniqueness_probability: l must be >= 1");
    if (entity_count < 1)
        throw Error("uniqueness_probability: entity_count must be >= 1");
    if (entity_count == 1) return 1.0;
    // For small l every factor (2^l − i)/2^l is an exact dyadic double, so
    // the direct product keeps cases like (1,2) → 0.5 bit-exact.
    if (l <= 50 && entity_count <= 1'000'000) {
        const double pool = std::ldexp(1.0, static_cast<int>(l));
        if (static_cast<double>(entity_count) > pool) return 0.0;
        double p = 1.0;
        for (std::uint64_t i = 1; i < entity_count; ++i)
            p *= (pool - static_cast<double>(i)) / pool;
        return p;
    }
    return uniqueness_probability_logspace(l, entity_count);
}

double empirical_uniqueness(std::uint32_t l, std::uint32_t entity_count,
                            std::uint32_t cardinality, std::uint32_t trials,
                            std::uint64_t seed) {
    if (trials < 1) throw Error("empirical_uniqueness: trials must be >= 1");
    if (cardinality > l)
        throw Error("empirical_uniqueness: cardinality exceeds universe");
    std::uint32_t distinct_trials = 0;
    std::vector<std::vector<std::uint32_t>> drawn(entity_count);
    for (std::uint32_t t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = derive_seed(seed, Rs::Trial, t);
        for (std::uint32_t e = 0; e < entity_count; ++e)
            drawn[e] = match_random(l, cardinality, trial_seed, e,
                                    Rs::AbstractCode);
        std::sort(drawn.begin(), drawn.end());
        if (std::adjacent_find(drawn.begin(), drawn.end()) == drawn.end())
            ++distinct_trials;
    }
    return static_cast<double>(distinct_trials) / static_cast<double>(trials);
}

DegradeResult degrade_codes(const std::vector<EntityCode>& codes,
                            double fraction, std::uint64_t seed) {
    if (codes.empty()) throw Error("degrade_codes: no codes");
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw Error("degrade_codes: fraction must lie in [0, 1]");
    const auto total = static_cast<std::uint32_t>(codes.size());
    auto chosen_count = static_cast<std::uint32_t>(
        std::ceil(fraction * static_cast<double>(total)));
    chosen_count = std::min(chosen_count, total);

    DegradeResult result;
    result.codes = codes;
    if (chosen_count > 0) {
        SplitMix64 rng = derived_rng(seed, Rs::Degrade, 0);
        const std::vector<std::uint32_t> chosen =
            sample_without_replacement(total, chosen_count, rng);
        const EntityCode donor = codes[chosen.front()];  // smallest chosen id
        for (const std::uint32_t e : chosen) result.codes[e] = donor;
    }
    result.entropy = code_entropy(result.codes);
    return result;
}

double jaccard_distance(const EntityCode& a, const EntityCode& b) {
    std::size_t inter = 0;
    std::size_t i = 0, j = 0;
    while (i < a.matched.size() && j < b.matched.size()) {
        if (a.matched[i] < b.matched[j]) {
            ++i;
        } else if (a.matched[i] > b.matched[j]) {
            ++j;
        } else {
            ++inter;
            ++i;
            ++j;
        }
    }
    const std::size_t uni = a.matched.size() + b.matched.size() - inter;
    if (uni == 0) {
        static std::atomic<bool> noted{false};
        if (!noted.exchange(true))
            std::fputs("note: jaccard distance of two empty codes taken as 0\n",
                       stderr);
        return 0.0;
    }
    return static_cast<double>(uni - inter) / static_cast<double>(uni);
}

namespace {

void check_k_values(const std::vector<std::uint32_t>& k_values,
                    std::size_t entity_count) {
    if (k_values.empty()) throw Error("knn_jaccard: no k values");
    for (const std::uint32_t k : k_values) {
        if (k < 1) throw Error("knn_jaccard: k must be >= 1");
        if (k >= entity_count)
            throw Error("knn_jaccard: k must be smaller than the entity count");
    }
}

// Sum of the k nearest distances from `e` for each requested k, ties
// toward the smaller entity id; out is accumulated (+=) per k.
void accumulate_knn(const std::vector<EntityCode>& codes, std::uint32_t e,
                    const std::vector<std::uint32_t>& k_values,
                    std::uint32_t max_k,
                    std::vector<std::pair<double, std::uint32_t>>& dist_scratch,
                    std::vector<double>& out) {
    dist_scratch.clear();
    for (std::uint32_t j = 0; j < codes.size(); ++j) {
        if (j == e) continue;
        dist_scratch.emplace_back(jaccard_distance(codes[e], codes[j]), j);
    }
    std::partial_sort(dist_scratch.begin(), dist_scratch.begin() + max_k,
                      dist_scratch.end());
    double prefix = 0.0;
    std::uint32_t taken = 0;
    for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
        while (taken < k_values[ki]) prefix += dist_scratch[taken++].first;
        out[ki] += prefix;
    }
}

}  // namespace

JkCurve knn_jaccard(const std::vector<EntityCode>& codes,
                    const std::vector<std::uint32_t>& k_values) {
    check_k_values(k_values, codes.size());
    std::vector<std::uint32_t> ks = k_values;  // ascending for prefix reuse
    std::sort(ks.begin(), ks.end());
    const std::uint32_t max_k = ks.back();

    std::vector<double> sums(ks.size(), 0.0);
    std::vector<std::pair<double, std::uint32_t>> scratch;
    for (std::uint32_t e = 0; e < codes.size(); ++e)
        accumulate_knn(codes, e, ks, max_k, scratch, sums);

    JkCurve curve;
    for (std::size_t ki = 0; ki < ks.size(); ++ki)
        curve.points.emplace_back(
            ks[ki], sums[ki] / (static_cast<double>(codes.size()) *
                                static_cast<double>(ks[ki])));
    return curve;
}

JkCurve knn_jaccard_sampled(const std::vector<EntityCode>& codes,
                            const std::vector<std::uint32_t>& k_values,
                            std::uint32_t sample_size, std::uint64_t seed,
                            std::vector<double>* ci_halfwidths) {
    check_k_values(k_values, codes.size());
    if (sample_size < 1) throw Error("knn_jaccard: sample_size must be >= 1");
    sample_size =
        std::min(sample_size, static_cast<std::uint32_t>(codes.size()));
    std::vector<std::uint32_t> ks = k_values;
    std::sort(ks.begin(), ks.end());
    const std::uint32_t max_k = ks.back();

    SplitMix64 rng = derived_rng(seed, Rs::Trial, 0);
    const std::vector<std::uint32_t> sample = sample_without_replacement(
        static_cast<std::uint32_t>(codes.size()), sample_size, rng);

    // Per-entity mean of its k nearest distances; J_k is their average.
    std::vector<std::vector<double>> per_entity(ks.size());
    std::vector<double> sums(ks.size());
    std::vector<std::pair<double, std::uint32_t>> scratch;
    for (const std::uint32_t e : sample) {
        std::fill(sums.begin(), sums.end(), 0.0);
        accumulate_knn(codes, e, ks, max_k, scratch, sums);
        for (std::size_t ki = 0; ki < ks.size(); ++ki)
            per_entity[ki].push_back(sums[ki] /
                                     static_cast<double>(ks[ki]));
    }

    JkCurve curve;
    if (ci_halfwidths) ci_halfwidths->assign(ks.size(), 0.0);
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        const std::vector<double>& xs = per_entity[ki];
        const double n = static_cast<double>(xs.size());
        double mean = 0.0;
        for (const double x : xs) mean += x;
        mean /= n;
        curve.points.emplace_back(ks[ki], mean);
        if (ci_halfwidths && xs.size() > 1) {
            double var = 0.0;
            for (const double x : xs) var += (x - mean) * (x - mean);
            var /= (n - 1.0);
            (*ci_halfwidths)[ki] = 1.96 * std::sqrt(var / n);
        }
    }
    return curve;
}

}  // namespace kgq
