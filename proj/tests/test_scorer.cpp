#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "kgq/kg.hpp"
#include "kgq/rng.hpp"
#include "kgq/scorer.hpp"

using namespace kgq;

namespace {

std::vector<double> random_vec(SplitMix64& rng, std::size_t n, double lo = -2.0,
                               double hi = 2.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.range(lo, hi);
    return v;
}

// Score via std::complex, the obvious way.
double score_oracle(const std::vector<double>& h,
                    const std::vector<double>& phases,
                    const std::vector<double>& t) {
    const std::size_t d = phases.size();
    double norm2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const std::complex<double> hc(h[i], h[d + i]);
        const std::complex<double> tc(t[i], t[d + i]);
        const std::complex<double> rc = std::polar(1.0, phases[i]);
        norm2 += std::norm(hc * rc - tc);
    }
    return -std::sqrt(norm2);
}

}  // namespace

TEST_CASE("rotate_score matches a std::complex oracle") {
    SplitMix64 rng(41);
    for (std::uint32_t d : {1u, 2u, 3u, 8u, 17u}) {
        const auto h = random_vec(rng, 2 * d);
        const auto t = random_vec(rng, 2 * d);
        const auto ph = random_vec(rng, d, -3.14, 3.14);
        const double got = rotate_score(h, ph, t);
        const double want = score_oracle(h, ph, t);
        CHECK(std::fabs(got - want) <= 1e-12 * std::max(1.0, std::fabs(want)));
        CHECK(got <= 0.0);
    }
}

TEST_CASE("a perfectly rotated head scores zero") {
    SplitMix64 rng(43);
    const std::uint32_t d = 5;
    const auto h = random_vec(rng, 2 * d);
    const auto ph = random_vec(rng, d, -3.14, 3.14);
    std::vector<double> t(2 * d);
    for (std::uint32_t i = 0; i < d; ++i) {
        const double c = std::cos(ph[i]), s = std::sin(ph[i]);
        t[i] = h[i] * c - h[d + i] * s;
        t[d + i] = h[i] * s + h[d + i] * c;
    }
    CHECK(std::fabs(rotate_score(h, ph, t)) <= 1e-12);
}

TEST_CASE("scores are invariant under a global phase shift") {
    // Rotating h, t, and r by the same extra phase per component leaves
    // the residual norm unchanged.
    SplitMix64 rng(47);
    const std::uint32_t d = 4;
    for (int rep = 0; rep < 20; ++rep) {
        const auto h = random_vec(rng, 2 * d);
        const auto t = random_vec(rng, 2 * d);
        const auto ph = random_vec(rng, d, -3.14, 3.14);
        const auto extra = random_vec(rng, d, -3.14, 3.14);

        auto rotate_vec = [&](const std::vector<double>& v) {
            std::vector<double> out(2 * d);
            for (std::uint32_t i = 0; i < d; ++i) {
                const double c = std::cos(extra[i]), s = std::sin(extra[i]);
                out[i] = v[i] * c - v[d + i] * s;
                out[d + i] = v[i] * s + v[d + i] * c;
            }
            return out;
        };
        const double base = rotate_score(h, ph, t);
        const double shifted = rotate_score(rotate_vec(h), ph, rotate_vec(t));
        CHECK(std::fabs(base - shifted) <=
              1e-12 * std::max(1.0, std::fabs(base)));
    }
}

TEST_CASE("rotate_score validates dimensions") {
    const std::vector<double> h(6), t(6), ph(3), short_t(4);
    CHECK_NOTHROW(rotate_score(h, ph, t));
    CHECK_THROWS_AS(rotate_score(h, ph, short_t), Error);
}

TEST_CASE("rotate_backward matches central finite differences") {
    SplitMix64 rng(53);
    const std::uint32_t d = 3;
    for (int rep = 0; rep < 10; ++rep) {
        auto h = random_vec(rng, 2 * d);
        auto t = random_vec(rng, 2 * d);
        auto ph = random_vec(rng, d, -3.0, 3.0);
        const double upstream = rng.range(-2.0, 2.0);

        RotateScratch scratch;
        rotate_score(h.data(), ph.data(), t.data(), d, &scratch);
        std::vector<double> hg(2 * d, 0.0), tg(2 * d, 0.0), pg(d, 0.0);
        rotate_backward(scratch, upstream, hg.data(), pg.data(), tg.data(), d);

        const double eps = 1e-6;
        auto fd = [&](double* coord) {
            const double saved = *coord;
            *coord = saved + eps;
            const double up = upstream * rotate_score(h.data(), ph.data(),
                                                      t.data(), d);
            *coord = saved - eps;
            const double dn = upstream * rotate_score(h.data(), ph.data(),
                                                      t.data(), d);
            *coord = saved;
            return (up - dn) / (2.0 * eps);
        };
        for (std::uint32_t i = 0; i < 2 * d; ++i) {
            CHECK(hg[i] == doctest::Approx(fd(&h[i])).epsilon(1e-7));
            CHECK(tg[i] == doctest::Approx(fd(&t[i])).epsilon(1e-7));
        }
        for (std::uint32_t i = 0; i < d; ++i)
            CHECK(pg[i] == doctest::Approx(fd(&ph[i])).epsilon(1e-7));
    }
}

TEST_CASE("rotate_backward is zero at a zero residual and honors nulls") {
    const std::uint32_t d = 2;
    const std::vector<double> h{1.0, 2.0, 3.0, 4.0}, ph{0.0, 0.0};
    RotateScratch scratch;
    rotate_score(h.data(), ph.data(), h.data(), d, &scratch);  // t = h∘id
    CHECK(scratch.norm == 0.0);
    std::vector<double> hg(4, 0.0), pg(2, 0.0), tg(4, 0.0);
    rotate_backward(scratch, 1.0, hg.data(), pg.data(), tg.data(), d);
    for (double g : hg) CHECK(g == 0.0);
    for (double g : pg) CHECK(g == 0.0);
    for (double g : tg) CHECK(g == 0.0);

    // Null destinations are skipped without crashing.
    const std::vector<double> t{0.5, 0.5, 0.5, 0.5};
    rotate_score(h.data(), ph.data(), t.data(), d, &scratch);
    rotate_backward(scratch, 1.0, nullptr, nullptr, nullptr, d);
    rotate_backward(scratch, 1.0, hg.data(), nullptr, nullptr, d);
    CHECK(hg != std::vector<double>(4, 0.0));
}

TEST_CASE("stable sigmoid and softplus survive extreme inputs") {
    CHECK(stable_sigmoid(0.0) == doctest::Approx(0.5));
    CHECK(stable_sigmoid(710.0) == doctest::Approx(1.0));
    CHECK(stable_sigmoid(-710.0) == doctest::Approx(0.0));
    CHECK(std::isfinite(stable_softplus(710.0)));
    CHECK(stable_softplus(710.0) == doctest::Approx(710.0));
    CHECK(stable_softplus(-710.0) == doctest::Approx(0.0));
    CHECK(stable_softplus(0.0) == doctest::Approx(std::log(2.0)));
    // Matches the naive formula where that formula is safe.
    for (double x : {-20.0, -3.0, -0.5, 0.1, 2.0, 25.0}) {
        CHECK(stable_softplus(x) ==
              doctest::Approx(std::log1p(std::exp(-std::fabs(x))) +
                              std::max(x, 0.0)).epsilon(1e-14));
        CHECK(stable_sigmoid(x) ==
              doctest::Approx(1.0 / (1.0 + std::exp(-x))).epsilon(1e-14));
    }
}

TEST_CASE("bce loss and gradients match the closed forms") {
    SplitMix64 rng(59);
    for (int rep = 0; rep < 20; ++rep) {
        const double pos = rng.range(-10.0, 0.0);
        const auto negs = random_vec(rng, 5, -12.0, 0.0);
        const LossResult r = bce_loss(pos, negs);

        double want = stable_softplus(-pos);
        for (double f : negs) want += stable_softplus(f);
        CHECK(r.loss == doctest::Approx(want).epsilon(1e-14));
        CHECK(r.pos_grad == doctest::Approx(stable_sigmoid(pos) - 1.0));
        REQUIRE(r.neg_grads.size() == negs.size());
        for (std::size_t i = 0; i < negs.size(); ++i)
            CHECK(r.neg_grads[i] == doctest::Approx(stable_sigmoid(negs[i])));
    }
}

TEST_CASE("adversarial weights form a shift-invariant softmax") {
    const std::vector<double> scores{-1.0, -2.0, -5.0, -1.5};
    const auto p = adversarial_weights(scores, 1.3);
    CHECK(p.size() == scores.size());
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    for (double x : p) CHECK(x > 0.0);
    // Higher score, higher weight.
    CHECK(p[0] > p[1]);
    CHECK(p[1] > p[2]);

    // Shifting all scores by a constant changes nothing.
    std::vector<double> shifted = scores;
    for (double& s : shifted) s += 123.0;
    const auto q = adversarial_weights(shifted, 1.3);
    for (std::size_t i = 0; i < p.size(); ++i)
        CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-12));

    // Singleton collapses to certainty; equal pair splits evenly.
    CHECK(adversarial_weights({-3.0}, 0.7) == std::vector<double>{1.0});
    const auto half = adversarial_weights({-2.0, -2.0}, 2.0);
    CHECK(half[0] == doctest::Approx(0.5));
    CHECK(half[1] == doctest::Approx(0.5));

    // Extreme scores must not overflow.
    const auto ext = adversarial_weights({-1e308, 0.0, -5.0}, 1.0);
    CHECK(std::isfinite(ext[0]));
    CHECK(std::accumulate(ext.begin(), ext.end(), 0.0) ==
          doctest::Approx(1.0));
}

TEST_CASE("nssal loss matches the closed form with frozen weights") {
    SplitMix64 rng(61);
    const double gamma = 6.0, alpha = 1.0;
    for (int rep = 0; rep < 20; ++rep) {
        const double pos = rng.range(-10.0, 0.0);
        const auto negs = random_vec(rng, 6, -12.0, 0.0);
        const auto p = adversarial_weights(negs, alpha);
        const LossResult r = nssal_loss(pos, negs, gamma, alpha);
        const LossResult rf = nssal_loss_fixed_p(pos, negs, gamma, p);
        CHECK(r.loss == doctest::Approx(rf.loss).epsilon(1e-14));

        double want = stable_softplus(-(pos + gamma));
        for (std::size_t i = 0; i < negs.size(); ++i)
            want += p[i] * stable_softplus(negs[i] + gamma);
        CHECK(r.loss == doctest::Approx(want).epsilon(1e-13));
        CHECK(r.pos_grad ==
              doctest::Approx(stable_sigmoid(pos + gamma) - 1.0));
        for (std::size_t i = 0; i < negs.size(); ++i)
            CHECK(r.neg_grads[i] ==
                  doctest::Approx(p[i] * stable_sigmoid(negs[i] + gamma)));
        CHECK(r.loss >= 0.0);

        // The loss rewards a high positive score and penalizes high
        // negative scores.
        CHECK(nssal_loss(pos - 0.5, negs, gamma, alpha).loss > r.loss);
        auto worse = negs;
        for (double& f : worse) f += 0.5;
        CHECK(nssal_loss(pos, worse, gamma, alpha).loss > r.loss);
    }
    CHECK_THROWS_AS(nssal_loss(-1.0, {-2.0}, 6.0, 0.0), Error);
    CHECK_THROWS_AS(nssal_loss(-1.0, {-2.0}, 6.0, -1.0), Error);
}

TEST_CASE("loss gradients match finite differences in the scores") {
    // For NSSAL the analytic gradient treats p as constant, so the
    // difference quotient must use nssal_loss_fixed_p.
    SplitMix64 rng(67);
    const double gamma = 4.0;
    for (int rep = 0; rep < 10; ++rep) {
        double pos = rng.range(-8.0, 0.0);
        auto negs = random_vec(rng, 4, -9.0, 0.0);
        const auto p = adversarial_weights(negs, 0.8);
        const LossResult r = nssal_loss(pos, negs, gamma, 0.8);

        const double h = 1e-6;
        auto fd = [&](double* coord) {
            const double saved = *coord;
            *coord = saved + h;
            const double up = nssal_loss_fixed_p(pos, negs, gamma, p).loss;
            *coord = saved - h;
            const double dn = nssal_loss_fixed_p(pos, negs, gamma, p).loss;
            *coord = saved;
            return (up - dn) / (2.0 * h);
        };
        CHECK(r.pos_grad == doctest::Approx(fd(&pos)).epsilon(1e-6));
        for (std::size_t i = 0; i < negs.size(); ++i)
            CHECK(r.neg_grads[i] == doctest::Approx(fd(&negs[i])).epsilon(1e-6));

        const LossResult b = bce_loss(pos, negs);
        auto fd_bce = [&](double* coord) {
            const double saved = *coord;
            *coord = saved + h;
            const double up = bce_loss(pos, negs).loss;
            *coord = saved - h;
            const double dn = bce_loss(pos, negs).loss;
            *coord = saved;
            return (up - dn) / (2.0 * h);
        };
        CHECK(b.pos_grad == doctest::Approx(fd_bce(&pos)).epsilon(1e-6));
        for (std::size_t i = 0; i < negs.size(); ++i)
            CHECK(b.neg_grads[i] ==
                  doctest::Approx(fd_bce(&negs[i])).epsilon(1e-6));
    }
}

TEST_CASE("compute_loss dispatches on the configured kind") {
    LossConfig cfg;
    cfg.kind = LossKind::Bce;
    const std::vector<double> negs{-3.0, -4.0};
    CHECK(compute_loss(cfg, -1.0, negs).loss ==
          doctest::Approx(bce_loss(-1.0, negs).loss));
    cfg.kind = LossKind::Nssal;
    cfg.gamma = 5.0;
    cfg.alpha = 1.5;
    CHECK(compute_loss(cfg, -1.0, negs).loss ==
          doctest::Approx(nssal_loss(-1.0, negs, 5.0, 1.5).loss));
}

TEST_CASE("negative sampling is deterministic per (seed, triple)") {
    const KnowledgeGraph kg = synth_kg(71, 50, 5, 300, 1.0);
    const Triple t1 = kg.train[0], t2 = kg.train[1];

    const auto a = sample_negatives(kg, t1, 8, 5);
    const auto b = sample_negatives(kg, t1, 8, 5);
    REQUIRE(a.size() == 8);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].triple == b[i].triple);
        CHECK(a[i].head_corrupted == b[i].head_corrupted);
    }

    // Different seed or different triple give a different stream.
    const auto c = sample_negatives(kg, t1, 8, 6);
    const auto d = sample_negatives(kg, t2, 8, 5);
    auto same = [](const std::vector<NegSample>& x,
                   const std::vector<NegSample>& y) {
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!(x[i].triple == y[i].triple)) return false;
        return true;
    };
    CHECK_FALSE(same(a, c));
    CHECK_FALSE(same(a, d));

    // Corruption keeps the uncorrupted slot and the relation intact.
    for (const NegSample& n : a) {
        CHECK(n.triple.relation == t1.relation);
        if (n.head_corrupted) {
            CHECK(n.triple.tail == t1.tail);
            CHECK(n.triple.head < kg.entity_count);
        } else {
            CHECK(n.triple.head == t1.head);
            CHECK(n.triple.tail < kg.entity_count);
        }
    }
}

TEST_CASE("negative sampling is statistically balanced") {
    const KnowledgeGraph kg = synth_kg(73, 40, 4, 250, 1.0);
    std::size_t heads = 0, total = 0;
    std::vector<std::size_t> entity_hits(kg.entity_count, 0);
    for (const Triple& t : kg.train) {
        for (const NegSample& n : sample_negatives(kg, t, 20, 11)) {
            heads += n.head_corrupted;
            ++total;
            entity_hits[n.head_corrupted ? n.triple.head : n.triple.tail]++;
        }
    }
    // Coin flips: binomial(total, 1/2); allow 4.5 sigma.
    const double mean = 0.5 * static_cast<double>(total);
    const double sd = std::sqrt(0.25 * static_cast<double>(total));
    CHECK(std::fabs(static_cast<double>(heads) - mean) < 4.5 * sd);

    // Replacement entities cover the vocabulary roughly uniformly.
    const double per = static_cast<double>(total) /
                       static_cast<double>(kg.entity_count);
    for (std::size_t hits : entity_hits)
        CHECK(std::fabs(static_cast<double>(hits) - per) <
              4.5 * std::sqrt(per));
}
