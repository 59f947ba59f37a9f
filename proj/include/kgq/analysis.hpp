#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "kgq/quantize.hpp"

// Distinguishability measures over a set of entity codes: plug-in entropy
// of the empirical code distribution, the all-codes-distinct probability
// for uniform random codes, a seeded entropy-degradation generator, and
// Jaccard-based k-nearest-neighbor statistics.

namespace kgq {

struct CodeDistribution {
    std::size_t distinct = 0;              // v
    std::vector<std::size_t> frequencies;  // f_1..f_v, canonical key order
    std::size_t total = 0;                 // |E|
};

// Codes are canonicalized to their sorted index sets; weights are ignored
// unless include_weights (investigation flag — with real-valued weights
// nearly every code becomes unique and the estimator degenerates).
CodeDistribution code_distribution(const std::vector<EntityCode>& codes,
                                   bool include_weights = false);

// H = −Σ (fᵢ/|E|)·log₂(fᵢ/|E|), in bits. Empty input is an error.
double code_entropy(const std::vector<EntityCode>& codes,
                    bool include_weights = false);
double entropy_bits(const std::vector<std::size_t>& frequencies);

// P(all n uniform random codes over 2^l subsets are distinct)
//   = Π_{i=0}^{n−1} (2^l − i)/2^l.
// For small l the product is evaluated directly over exactly representable
// dyadic factors (so l=1,n=2 → 0.5 and l=2,n=2 → 0.75 are exact); large l
// switches to the log-space form below. Returns 1 when n = 1, 0 when
// n > 2^l.
double uniqueness_probability(std::uint32_t l, std::uint64_t entity_count);

// exp(Σ log1p(−i/2^l)) — underflow-safe for any l.
double uniqueness_probability_logspace(std::uint32_t l,
                                       std::uint64_t entity_count);

// Monte-Carlo counterpart for fixed-cardinality codes: each entity draws a
// uniform `cardinality`-subset of [0, l) per trial; returns the fraction
// of trials where all entities got distinct codes.
double empirical_uniqueness(std::uint32_t l, std::uint32_t entity_count,
                            std::uint32_t cardinality, std::uint32_t trials,
                            std::uint64_t seed);

struct DegradeResult {
    std::vector<EntityCode> codes;
    double entropy = 0.0;  // of the degraded codes
};

// ⌈fraction·|E|⌉ entities chosen uniformly (seeded) all receive a copy of
// the smallest chosen entity's code; everyone else is untouched.
DegradeResult degrade_codes(const std::vector<EntityCode>& codes,
                            double fraction, std::uint64_t seed);

// d_J = (|A ∪ B| − |A ∩ B|) / |A ∪ B| on the index sets; two empty codes
// compare as identical (0, noted once on stderr).
double jaccard_distance(const EntityCode& a, const EntityCode& b);

struct JkCurve {
    std::vector<std::pair<std::uint32_t, double>> points;  // (k, J_k)
};

// J_k = (1/(|E|·k)) Σ_e Σ over e's k nearest codes of d_J, exact all-pairs;
// neighbor ties broken toward the smaller entity id. Requires every
// k ∈ [1, |E|).
JkCurve knn_jaccard(const std::vector<EntityCode>& codes,
                    const std::vector<std::uint32_t>& k_values);

// Estimate over a uniform entity sample (neighbors still searched among
// all entities). ci_halfwidths, when given, receives the 95% normal CI
// half-width per k, parallel to k_values.
JkCurve knn_jaccard_sampled(const std::vector<EntityCode>& codes,
                            const std::vector<std::uint32_t>& k_values,
                            std::uint32_t sample_size, std::uint64_t seed,
                            std::vector<double>* ci_halfwidths = nullptr);

}  // namespace kgq
