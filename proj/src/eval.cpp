#include "kgq/eval.hpp"

#include <cmath>
#include <unordered_set>

#include "kgq/kernels.hpp"
#include "kgq/rng.hpp"

namespace kgq {

const std::vector<Triple>& split_of(const KnowledgeGraph& kg, Split split) {
    switch (split) {
        case Split::Train: return kg.train;
        case Split::Valid: return kg.valid;
        default: return kg.test;
    }
}

std::size_t filtered_rank(const std::vector<double>& scores,
                          const std::vector<char>& filtered, EntityId truth) {
    const double s = scores[truth];
    std::size_t rank = 1;
    for (std::size_t c = 0; c < scores.size(); ++c) {
        if (c == truth || filtered[c]) continue;
        if (scores[c] >= s) ++rank;
    }
    return rank;
}

namespace {

struct Accum {
    double rr_sum = 0.0;
    std::map<std::uint32_t, std::size_t> hit_counts;
    std::size_t queries = 0;

    void add(std::size_t rank, const std::vector<std::uint32_t>& cutoffs) {
        rr_sum += 1.0 / static_cast<double>(rank);
        for (const std::uint32_t n : cutoffs)
            if (rank <= n) ++hit_counts[n];
        ++queries;
    }

    RankingReport report(const std::vector<std::uint32_t>& cutoffs) const {
        RankingReport r;
        r.query_count = queries;
        r.mrr = rr_sum / static_cast<double>(queries);
        for (const std::uint32_t n : cutoffs) {
            const auto it = hit_counts.find(n);
            const std::size_t hits = it == hit_counts.end() ? 0 : it->second;
            r.hits_at[n] = static_cast<double>(hits) /
                           static_cast<double>(queries);
        }
        return r;
    }
};

std::unordered_set<Triple, TripleHash> filter_set(const KnowledgeGraph& kg) {
    std::unordered_set<Triple, TripleHash> all;
    all.reserve(2 * (kg.train.size() + kg.valid.size() + kg.test.size()));
    for (const auto* split : {&kg.train, &kg.valid, &kg.test})
        all.insert(split->begin(), split->end());
    return all;
}

}  // namespace

RankingReport evaluate(const ModelState& model,
                       const std::vector<EntityCode>& codes,
                       const KnowledgeGraph& kg, Split split,
                       const std::vector<std::uint32_t>& cutoffs) {
    const std::vector<Triple>& triples = split_of(kg, split);
    if (triples.empty()) throw Error("evaluate: empty split");
    if (codes.size() != kg.entity_count)
        throw Error("evaluate: codes do not cover the entity set");

    const std::size_t ecount = kg.entity_count;
    const std::uint32_t d = model.d;
    const std::uint32_t width = 2 * d;
    const std::vector<double> reps = encode_all(model, codes);

    // Realized rotations, one row per relation.
    std::vector<double> cos_r(std::size_t(model.relation_count) * d);
    std::vector<double> sin_r(cos_r.size());
    for (std::size_t i = 0; i < cos_r.size(); ++i) {
        cos_r[i] = std::cos(model.phases[i]);
        sin_r[i] = std::sin(model.phases[i]);
    }

    const auto known = filter_set(kg);
    Accum accum;
    std::vector<double> scores(ecount);
    std::vector<char> filtered(ecount);
    std::vector<double> rotated(width);

    for (const Triple& q : triples) {
        const double* cr = cos_r.data() + std::size_t(q.relation) * d;
        const double* sr = sin_r.data() + std::size_t(q.relation) * d;

        // Tail query: hoist h∘r, then distance to every candidate tail.
        const double* h = reps.data() + std::size_t(q.head) * width;
        for (std::uint32_t i = 0; i < d; ++i) {
            rotated[i] = h[i] * cr[i] - h[d + i] * sr[i];
            rotated[d + i] = h[i] * sr[i] + h[d + i] * cr[i];
        }
        for (std::size_t c = 0; c < ecount; ++c) {
            scores[c] = -kernels::diff_norm2(
                rotated.data(), reps.data() + c * width, width);
            filtered[c] =
                c != q.tail &&
                known.count({q.head, q.relation, static_cast<EntityId>(c)});
        }
        accum.add(filtered_rank(scores, filtered, q.tail), cutoffs);

        // Head query: full rotation per candidate head.
        const double* t = reps.data() + std::size_t(q.tail) * width;
        for (std::size_t c = 0; c < ecount; ++c) {
            scores[c] = -kernels::rotate_residual_norm2(
                reps.data() + c * width, t, cr, sr, d);
            filtered[c] =
                c != q.head &&
                known.count({static_cast<EntityId>(c), q.relation, q.tail});
        }
        accum.add(filtered_rank(scores, filtered, q.head), cutoffs);
    }

    RankingReport r = accum.report(cutoffs);
    r.param_count = count_params(model);
    r.effi = r.mrr / (static_cast<double>(r.param_count) / 1e6);
    return r;
}

RankingReport random_baseline(const KnowledgeGraph& kg, Split split,
                              std::uint64_t seed,
                              const std::vector<std::uint32_t>& cutoffs) {
    const std::vector<Triple>& triples = split_of(kg, split);
    if (triples.empty()) throw Error("random_baseline: empty split");

    const std::size_t ecount = kg.entity_count;
    const auto known = filter_set(kg);
    Accum accum;
    std::vector<double> scores(ecount);
    std::vector<char> filtered(ecount);

    const std::uint64_t base = derive_seed(seed, Rs::Baseline, 0);
    auto hash_score = [base](const Triple& q, bool head_side, std::size_t c) {
        std::uint64_t k = (static_cast<std::uint64_t>(q.head) << 32) | q.tail;
        k = mix64(k ^ base);
        k = mix64(k ^ (static_cast<std::uint64_t>(q.relation) << 1) ^
                  (head_side ? 1u : 0u));
        k = mix64(k ^ (static_cast<std::uint64_t>(c) *
                       0x9e3779b97f4a7c15ull));
        return static_cast<double>(k >> 11) * 0x1.0p-53;
    };

    for (const Triple& q : triples) {
        for (std::size_t c = 0; c < ecount; ++c) {
            scores[c] = hash_score(q, false, c);
            filtered[c] =
                c != q.tail &&
                known.count({q.head, q.relation, static_cast<EntityId>(c)});
        }
        accum.add(filtered_rank(scores, filtered, q.tail), cutoffs);
        for (std::size_t c = 0; c < ecount; ++c) {
            scores[c] = hash_score(q, true, c);
            filtered[c] =
                c != q.head &&
                known.count({static_cast<EntityId>(c), q.relation, q.tail});
        }
        accum.add(filtered_rank(scores, filtered, q.head), cutoffs);
    }
    return accum.report(cutoffs);
}

}  // namespace kgq
