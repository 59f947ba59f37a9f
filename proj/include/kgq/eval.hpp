#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "kgq/model.hpp"

// Filtered-ranking link prediction. Each evaluated triple contributes two
// queries (head replaced, tail replaced); candidates known to be true
// elsewhere in train/valid/test are removed; ties rank pessimistically.

namespace kgq {

enum class Split { Train, Valid, Test };

struct RankingReport {
    double mrr = 0.0;
    std::map<std::uint32_t, double> hits_at;  // cutoff -> fraction
    std::size_t query_count = 0;
    std::size_t param_count = 0;
    double effi = 0.0;  // mrr / (param_count / 1e6)
};

// Pessimistic filtered rank of `truth` in a per-candidate score vector:
// 1 + |{unfiltered c != truth with score > s_truth}|
//   + |{unfiltered c != truth with score == s_truth}|.
// filtered[truth] is ignored — the true candidate always competes.
std::size_t filtered_rank(const std::vector<double>& scores,
                          const std::vector<char>& filtered, EntityId truth);

RankingReport evaluate(const ModelState& model,
                       const std::vector<EntityCode>& codes,
                       const KnowledgeGraph& kg, Split split,
                       const std::vector<std::uint32_t>& cutoffs = {1, 3, 10});

// Same protocol with seeded hash scores in place of the model; the
// no-signal floor that trained models are compared against.
RankingReport random_baseline(const KnowledgeGraph& kg, Split split,
                              std::uint64_t seed,
                              const std::vector<std::uint32_t>& cutoffs = {1, 3,
                                                                           10});

const std::vector<Triple>& split_of(const KnowledgeGraph& kg, Split split);

}  // namespace kgq
