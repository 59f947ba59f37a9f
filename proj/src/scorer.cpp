#include "kgq/scorer.hpp"

#include <algorithm>
#include <cmath>

#include "kgq/kernels.hpp"
#include "kgq/rng.hpp"

namespace kgq {

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double stable_softplus(double x) {
    // log(1+eˣ) = max(x,0) + log1p(e^−|x|)
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double rotate_score(const double* h, const double* phases, const double* t,
                    std::uint32_t d, RotateScratch* scratch) {
    RotateScratch local;
    RotateScratch& s = scratch ? *scratch : local;
    s.cos_r.resize(d);
    s.sin_r.resize(d);
    s.rotated.resize(2 * std::size_t(d));
    s.residual.resize(2 * std::size_t(d));
    for (std::uint32_t i = 0; i < d; ++i) {
        s.cos_r[i] = std::cos(phases[i]);
        s.sin_r[i] = std::sin(phases[i]);
    }
    for (std::uint32_t i = 0; i < d; ++i) {
        const double re = h[i] * s.cos_r[i] - h[d + i] * s.sin_r[i];
        const double im = h[i] * s.sin_r[i] + h[d + i] * s.cos_r[i];
        s.rotated[i] = re;
        s.rotated[d + i] = im;
        s.residual[i] = re - t[i];
        s.residual[d + i] = im - t[d + i];
    }
    s.norm =
        std::sqrt(kernels::dot(s.residual.data(), s.residual.data(), 2 * d));
    return -s.norm;
}

double rotate_score(const std::vector<double>& h,
                    const std::vector<double>& phases,
                    const std::vector<double>& t, RotateScratch* scratch) {
    if (h.size() != t.size() || h.size() != 2 * phases.size())
        throw Error("rotate_score: dimension mismatch");
    return rotate_score(h.data(), phases.data(), t.data(),
                        static_cast<std::uint32_t>(phases.size()), scratch);
}

void rotate_backward(const RotateScratch& s, double upstream, double* h_grad,
                     double* phase_grad, double* t_grad, std::uint32_t d) {
    if (s.norm == 0.0) return;
    // f = −‖u‖ with u = h∘r − t, so ∂(up·f)/∂uᵢ = −up·uᵢ/‖u‖.
    const double scale = -upstream / s.norm;
    for (std::uint32_t i = 0; i < d; ++i) {
        const double gre = scale * s.residual[i];
        const double gim = scale * s.residual[d + i];
        if (t_grad) {
            t_grad[i] -= gre;
            t_grad[d + i] -= gim;
        }
        if (h_grad) {
            h_grad[i] += gre * s.cos_r[i] + gim * s.sin_r[i];
            h_grad[d + i] += -gre * s.sin_r[i] + gim * s.cos_r[i];
        }
        // ∂u_re/∂θ = −(h∘r)_im, ∂u_im/∂θ = (h∘r)_re.
        if (phase_grad)
            phase_grad[i] += -gre * s.rotated[d + i] + gim * s.rotated[i];
    }
}

LossResult bce_loss(double positive_score,
                    const std::vector<double>& negative_scores) {
    LossResult r;
    r.loss = stable_softplus(-positive_score);
    r.pos_grad = stable_sigmoid(positive_score) - 1.0;
    r.neg_grads.resize(negative_scores.size());
    for (std::size_t i = 0; i < negative_scores.size(); ++i) {
        r.loss += stable_softplus(negative_scores[i]);
        r.neg_grads[i] = stable_sigmoid(negative_scores[i]);
    }
    return r;
}

std::vector<double> adversarial_weights(const std::vector<double>& scores,
                                        double alpha) {
    std::vector<double> p(scores.size());
    if (p.empty()) return p;
    double mx = alpha * scores[0];
    for (const double s : scores) mx = std::max(mx, alpha * s);
    double z = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp(alpha * scores[i] - mx);
        z += p[i];
    }
    for (double& x : p) x /= z;
    return p;
}

LossResult nssal_loss_fixed_p(double positive_score,
                              const std::vector<double>& negative_scores,
                              double gamma, const std::vector<double>& p) {
    if (p.size() != negative_scores.size())
        throw Error("nssal_loss: weight/score size mismatch");
    // The margin terms take the residual norm −f as their argument, so the
    // positive term rewards f⁺ above −γ and the negative terms push each
    // f⁻ below −γ (hard negatives weighted most).
    LossResult r;
    r.loss = stable_softplus(-(positive_score + gamma));
    r.pos_grad = stable_sigmoid(positive_score + gamma) - 1.0;
    r.neg_grads.resize(negative_scores.size());
    for (std::size_t i = 0; i < negative_scores.size(); ++i) {
        r.loss += p[i] * stable_softplus(negative_scores[i] + gamma);
        r.neg_grads[i] = p[i] * stable_sigmoid(negative_scores[i] + gamma);
    }
    return r;
}

LossResult nssal_loss(double positive_score,
                      const std::vector<double>& negative_scores, double gamma,
                      double alpha) {
    if (!(alpha > 0.0)) throw Error("nssal_loss: alpha must be > 0");
    if (!std::isfinite(gamma)) throw Error("nssal_loss: gamma must be finite");
    return nssal_loss_fixed_p(positive_score, negative_scores, gamma,
                              adversarial_weights(negative_scores, alpha));
}

LossResult compute_loss(const LossConfig& config, double positive_score,
                        const std::vector<double>& negative_scores) {
    if (config.kind == LossKind::Bce)
        return bce_loss(positive_score, negative_scores);
    return nssal_loss(positive_score, negative_scores, config.gamma,
                      config.alpha);
}

namespace {

std::uint64_t triple_key(const Triple& t) {
    const std::uint64_t ht =
        (static_cast<std::uint64_t>(t.head) << 32) | t.tail;
    return mix64(ht ^ (static_cast<std::uint64_t>(t.relation) *
                       0x9e3779b97f4a7c15ull));
}

}  // namespace

std::vector<NegSample> sample_negatives(const KnowledgeGraph& kg,
                                        const Triple& triple,
                                        std::uint32_t count,
                                        std::uint64_t seed) {
    if (count < 1) throw Error("sample_negatives: count must be >= 1");
    if (kg.entity_count == 0) throw Error("sample_negatives: no entities");
    SplitMix64 rng = derived_rng(seed, Rs::Negatives, triple_key(triple));
    std::vector<NegSample> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        NegSample ns;
        ns.triple = triple;
        ns.head_corrupted = rng.below(2) == 0;
        const auto e = static_cast<EntityId>(rng.below(kg.entity_count));
        (ns.head_corrupted ? ns.triple.head : ns.triple.tail) = e;
        out.push_back(ns);
    }
    return out;
}

}  // namespace kgq
