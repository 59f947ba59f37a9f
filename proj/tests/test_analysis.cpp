#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kgq/analysis.hpp"
#include "kgq/rng.hpp"

using namespace kgq;

namespace {

EntityCode make_code(std::vector<std::uint32_t> idx) {
    EntityCode c;
    c.weights.assign(idx.size(), 1.0);
    c.matched = std::move(idx);
    return c;
}

// Exact rational value of prod_{i=0}^{n-1} (2^l - i) / 2^l via 128-bit
// integers; valid while the numerator fits (l*n small).
double uniqueness_rational_oracle(std::uint32_t l, std::uint64_t n) {
    if (n <= 1) return 1.0;
    const unsigned __int128 pool = static_cast<unsigned __int128>(1) << l;
    if (n > static_cast<std::uint64_t>(pool)) return 0.0;
    unsigned __int128 num = 1;
    for (std::uint64_t i = 0; i < n; ++i) num *= pool - i;
    unsigned __int128 den = 1;
    for (std::uint64_t i = 0; i < n; ++i) den *= pool;
    return static_cast<double>(num) / static_cast<double>(den);
}

// All subsets of {0,..,bits-1} as codes, for exhaustive metric checks.
std::vector<EntityCode> power_set_codes(std::uint32_t bits) {
    std::vector<EntityCode> codes;
    for (std::uint32_t mask = 0; mask < (1u << bits); ++mask) {
        std::vector<std::uint32_t> idx;
        for (std::uint32_t b = 0; b < bits; ++b)
            if (mask & (1u << b)) idx.push_back(b);
        codes.push_back(make_code(std::move(idx)));
    }
    return codes;
}

}  // namespace

TEST_CASE("code_distribution canonicalizes on index sets") {
    std::vector<EntityCode> codes{
        make_code({0, 2}), make_code({1}), make_code({0, 2}),
        make_code({0, 1, 2})};
    codes[2].weights = {0.1, 0.9};  // different weights, same index set

    const CodeDistribution d = code_distribution(codes);
    CHECK(d.total == 4);
    CHECK(d.distinct == 3);
    std::vector<std::size_t> freq = d.frequencies;
    std::sort(freq.begin(), freq.end());
    CHECK(freq == std::vector<std::size_t>{1, 1, 2});

    // With weights included, the differently weighted copy separates.
    const CodeDistribution dw = code_distribution(codes, true);
    CHECK(dw.distinct == 4);
}

TEST_CASE("entropy identities") {
    CHECK(entropy_bits({2, 1, 1}) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(entropy_bits({7}) == doctest::Approx(0.0));
    CHECK(entropy_bits({1, 1, 1, 1}) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(entropy_bits({3, 3, 3}) ==
          doctest::Approx(std::log2(3.0)).epsilon(1e-14));

    // Uniform distributions hit log2(n) for the sizes that matter here.
    for (std::size_t n : {2u, 100u, 4096u}) {
        const std::vector<std::size_t> freq(n, 1);
        CHECK(entropy_bits(freq) ==
              doctest::Approx(std::log2(static_cast<double>(n)))
                  .epsilon(1e-12));
    }

    // Order of the frequency vector is irrelevant.
    CHECK(entropy_bits({5, 2, 9}) == doctest::Approx(entropy_bits({9, 5, 2})));
}

TEST_CASE("code_entropy composes distribution and entropy") {
    std::vector<EntityCode> codes{make_code({0}), make_code({0}),
                                  make_code({1}), make_code({2})};
    CHECK(code_entropy(codes) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK_THROWS_AS(code_entropy({}), Error);

    // All-distinct codes measure log2 |E| bits.
    std::vector<EntityCode> unique;
    for (std::uint32_t e = 0; e < 1000; ++e)
        unique.push_back(make_code({e}));
    CHECK(code_entropy(unique) ==
          doctest::Approx(std::log2(1000.0)).epsilon(1e-12));
}

TEST_CASE("uniqueness probability small cases are exact") {
    CHECK(uniqueness_probability(1, 2) == 0.5);    // 2 codes over {∅,{0}}
    CHECK(uniqueness_probability(2, 2) == 0.75);
    CHECK(uniqueness_probability(5, 1) == 1.0);
    CHECK(uniqueness_probability(1, 3) == 0.0);    // pigeonhole
    CHECK(uniqueness_probability(2, 5) == 0.0);
}

TEST_CASE("logspace uniqueness matches an exact rational oracle") {
    for (std::uint32_t l = 1; l <= 10; ++l) {
        for (std::uint64_t n = 1; n <= 8; ++n) {
            const double want = uniqueness_rational_oracle(l, n);
            const double direct = uniqueness_probability(l, n);
            const double logspace = uniqueness_probability_logspace(l, n);
            CHECK(std::fabs(direct - want) <= 1e-15 * std::max(1.0, want));
            CHECK(std::fabs(logspace - want) <= 1e-12 * std::max(1.0, want));
        }
    }
}

TEST_CASE("direct and logspace evaluations agree at larger sizes") {
    for (const auto& [l, n] : std::vector<std::pair<std::uint32_t,
                                                    std::uint64_t>>{
             {20, 2000}, {30, 5000}, {40, 100000}}) {
        const double a = uniqueness_probability(l, n);
        const double b = uniqueness_probability_logspace(l, n);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
        CHECK(a > 0.0);
        CHECK(a < 1.0);
    }
    // Very large l bypasses the direct product entirely; still sane.
    const double huge = uniqueness_probability(200, 1000000);
    CHECK(huge == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(uniqueness_probability(64, 1u << 20) ==
          doctest::Approx(uniqueness_probability_logspace(64, 1u << 20))
              .epsilon(1e-12));
}

TEST_CASE("empirical uniqueness tracks the birthday probability") {
    // l=4, cardinality 2: C(4,2)=6 possible codes; 3 entities.
    // P(distinct) = (6·5·4)/6³ = 5/9.
    const double want = 5.0 / 9.0;
    const std::uint32_t trials = 5000;
    const double got = empirical_uniqueness(4, 3, 2, trials, 77);
    const double sigma = std::sqrt(want * (1.0 - want) / trials);
    CHECK(std::fabs(got - want) < 3.0 * sigma);

    CHECK(empirical_uniqueness(4, 3, 2, 500, 5) ==
          empirical_uniqueness(4, 3, 2, 500, 5));
    CHECK(empirical_uniqueness(4, 3, 2, 500, 5) !=
          empirical_uniqueness(4, 3, 2, 500, 6));

    // One entity can never collide.
    CHECK(empirical_uniqueness(6, 1, 3, 100, 1) == 1.0);
}

TEST_CASE("jaccard distance on hand-checked pairs") {
    CHECK(jaccard_distance(make_code({0, 1}), make_code({1, 2})) ==
          doctest::Approx(2.0 / 3.0));
    CHECK(jaccard_distance(make_code({0, 1}), make_code({0, 1})) == 0.0);
    CHECK(jaccard_distance(make_code({0}), make_code({5})) == 1.0);
    CHECK(jaccard_distance(make_code({}), make_code({3})) == 1.0);
    CHECK(jaccard_distance(make_code({}), make_code({})) == 0.0);
    CHECK(jaccard_distance(make_code({0, 2, 4}), make_code({0, 1, 2, 3, 4})) ==
          doctest::Approx(0.4));
}

TEST_CASE("jaccard distance satisfies the metric axioms exhaustively") {
    const std::vector<EntityCode> codes = power_set_codes(3);
    const std::size_t n = codes.size();
    std::vector<std::vector<double>> d(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            d[i][j] = jaccard_distance(codes[i], codes[j]);

    for (std::size_t i = 0; i < n; ++i) {
        CHECK(d[i][i] == 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(d[i][j] == d[j][i]);
            CHECK(d[i][j] >= 0.0);
            CHECK(d[i][j] <= 1.0);
            if (i != j) CHECK(d[i][j] > 0.0);  // distinct sets separate
            for (std::size_t k = 0; k < n; ++k)
                CHECK(d[i][k] <= d[i][j] + d[j][k] + 1e-15);
        }
    }
}

TEST_CASE("knn jaccard matches a hand-enumerated six-entity fixture") {
    const std::vector<EntityCode> codes{
        make_code({0, 1}), make_code({0, 1}), make_code({0, 2}),
        make_code({3}),    make_code({2, 3}), make_code({0, 1, 2})};
    const JkCurve curve = knn_jaccard(codes, {1, 2, 3, 5});
    REQUIRE(curve.points.size() == 4);
    CHECK(curve.points[0].first == 1);
    CHECK(curve.points[0].second == doctest::Approx(5.0 / 18.0).epsilon(1e-14));
    CHECK(curve.points[1].first == 2);
    CHECK(curve.points[1].second == doctest::Approx(5.0 / 12.0).epsilon(1e-14));
    CHECK(curve.points[2].first == 3);
    CHECK(curve.points[2].second ==
          doctest::Approx(109.0 / 216.0).epsilon(1e-14));
    CHECK(curve.points[3].first == 5);
    CHECK(curve.points[3].second == doctest::Approx(41.0 / 60.0).epsilon(1e-14));
}

TEST_CASE("J_k is non-decreasing in k and bounded by [0,1]") {
    SplitMix64 rng(15);
    std::vector<EntityCode> codes;
    for (int e = 0; e < 30; ++e) {
        auto idx = sample_without_replacement(12, 1 + rng.below(5), rng);
        codes.push_back(make_code({idx.begin(), idx.end()}));
    }
    std::vector<std::uint32_t> ks(29);
    for (std::uint32_t k = 1; k < 30; ++k) ks[k - 1] = k;
    const JkCurve curve = knn_jaccard(codes, ks);
    double prev = 0.0;
    for (const auto& [k, jk] : curve.points) {
        CHECK(jk >= prev - 1e-15);
        CHECK(jk >= 0.0);
        CHECK(jk <= 1.0);
        prev = jk;
    }

    // Identical codes everywhere: all distances zero.
    const std::vector<EntityCode> same(8, make_code({1, 4}));
    const JkCurve zero = knn_jaccard(same, {1, 3, 7});
    for (const auto& [k, jk] : zero.points) CHECK(jk == 0.0);
}

TEST_CASE("knn jaccard validates k") {
    const std::vector<EntityCode> codes{make_code({0}), make_code({1}),
                                        make_code({2})};
    CHECK_THROWS_AS(knn_jaccard(codes, {0}), Error);
    CHECK_THROWS_AS(knn_jaccard(codes, {3}), Error);  // k must be < |E|
    CHECK_NOTHROW(knn_jaccard(codes, {1, 2}));
}

TEST_CASE("sampled knn estimates the exact curve") {
    SplitMix64 rng(16);
    std::vector<EntityCode> codes;
    for (int e = 0; e < 200; ++e) {
        auto idx = sample_without_replacement(16, 1 + rng.below(6), rng);
        codes.push_back(make_code({idx.begin(), idx.end()}));
    }
    const JkCurve exact = knn_jaccard(codes, {1, 10});
    std::vector<double> ci;
    const JkCurve est = knn_jaccard_sampled(codes, {1, 10}, 80, 4, &ci);
    REQUIRE(est.points.size() == 2);
    REQUIRE(ci.size() == 2);
    for (std::size_t i = 0; i < est.points.size(); ++i) {
        CHECK(ci[i] > 0.0);
        // The exact value should usually fall inside twice the 95% CI;
        // with frozen seeds this is a deterministic statement.
        CHECK(std::fabs(est.points[i].second - exact.points[i].second) <
              2.0 * ci[i]);
    }

    // Sampling everything reproduces the exact mean.
    const JkCurve all = knn_jaccard_sampled(codes, {1, 10}, 200, 4);
    for (std::size_t i = 0; i < all.points.size(); ++i)
        CHECK(all.points[i].second ==
              doctest::Approx(exact.points[i].second).epsilon(1e-12));
}

TEST_CASE("degrade_codes copies a seeded subset onto one donor") {
    SplitMix64 rng(18);
    std::vector<EntityCode> codes;
    for (std::uint32_t e = 0; e < 40; ++e) codes.push_back(make_code({e}));
    const double full_entropy = code_entropy(codes);

    const DegradeResult none = degrade_codes(codes, 0.0, 9);
    CHECK(none.entropy == doctest::Approx(full_entropy));
    for (std::size_t e = 0; e < codes.size(); ++e)
        CHECK(none.codes[e].matched == codes[e].matched);

    const DegradeResult all = degrade_codes(codes, 1.0, 9);
    CHECK(all.entropy == 0.0);
    for (const EntityCode& c : all.codes)
        CHECK(c.matched == all.codes[0].matched);

    const DegradeResult half = degrade_codes(codes, 0.5, 9);
    CHECK(half.entropy < full_entropy);
    CHECK(half.entropy > 0.0);
    std::size_t changed = 0;
    for (std::size_t e = 0; e < codes.size(); ++e)
        changed += half.codes[e].matched != codes[e].matched;
    // 20 entities are chosen; the donor among them keeps its own code, and
    // any chosen entity whose code already equals the donor's would too
    // (impossible here since all codes are distinct).
    CHECK(changed == 19);

    const DegradeResult again = degrade_codes(codes, 0.5, 9);
    CHECK(again.entropy == half.entropy);
    CHECK_THROWS_AS(degrade_codes(codes, -0.1, 9), Error);
    CHECK_THROWS_AS(degrade_codes(codes, 1.1, 9), Error);
}

TEST_CASE("degrade entropy decreases across a fraction sweep") {
    std::vector<EntityCode> codes;
    for (std::uint32_t e = 0; e < 100; ++e) codes.push_back(make_code({e}));
    double prev = 1e9;
    for (int i = 0; i <= 10; ++i) {
        const double f = static_cast<double>(i) / 10.0;
        const DegradeResult r = degrade_codes(codes, f, 3);
        CHECK(r.entropy <= prev + 1e-12);
        prev = r.entropy;
    }
    CHECK(prev == 0.0);
}
