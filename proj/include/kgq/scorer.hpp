#pragma once

#include <cstdint>
#include <vector>

#include "kgq/error.hpp"
#include "kgq/kg.hpp"

// Rotation scoring in split-complex layout plus the two training losses.
// All gradients here are exact (reverse mode, hand-derived); the tests
// hold them against central finite differences.

namespace kgq {

// One corrupted triple. head_corrupted records which slot was replaced.
struct NegSample {
    Triple triple{};
    bool head_corrupted = false;
};

// Forward state cached for rotate_backward.
struct RotateScratch {
    std::vector<double> cos_r, sin_r;  // d each
    std::vector<double> rotated;       // 2d: h ∘ r
    std::vector<double> residual;      // 2d: h ∘ r − t
    double norm = 0.0;
};

// f(h,r,t) = −‖h∘r − t‖₂ with the relation given as d phases; h and t are
// split-layout arrays of 2d doubles. Always ≤ 0.
double rotate_score(const double* h, const double* phases, const double* t,
                    std::uint32_t d, RotateScratch* scratch = nullptr);

// Size-checked convenience overload; throws Error on dimension mismatch.
double rotate_score(const std::vector<double>& h,
                    const std::vector<double>& phases,
                    const std::vector<double>& t,
                    RotateScratch* scratch = nullptr);

// Accumulates (+=) the gradients of upstream·f into h_grad/t_grad (2d) and
// phase_grad (d); any destination may be null to skip it. At the
// non-differentiable point ‖residual‖ = 0 all gradients are left at zero.
void rotate_backward(const RotateScratch& scratch, double upstream,
                     double* h_grad, double* phase_grad, double* t_grad,
                     std::uint32_t d);

enum class LossKind { Bce, Nssal };

struct LossConfig {
    LossKind kind = LossKind::Nssal;
    double gamma = 6.0;  // margin, NSSAL only
    double alpha = 1.0;  // adversarial temperature, NSSAL only; > 0
    std::uint32_t negatives_per_positive = 8;
};

// Loss value plus gradients w.r.t. the positive and negative scores.
struct LossResult {
    double loss = 0.0;
    double pos_grad = 0.0;
    std::vector<double> neg_grads;
};

// Logistic loss on ±1 labels:
//   L = −log σ(f⁺) − Σᵢ log(1 − σ(f⁻ᵢ)) = softplus(−f⁺) + Σᵢ softplus(f⁻ᵢ)
LossResult bce_loss(double positive_score,
                    const std::vector<double>& negative_scores);

// Self-adversarial margin loss. With the margin applied to the residual
// norm −f:
//   L = −log σ(γ + f⁺) − Σᵢ pᵢ·log σ(−f⁻ᵢ − γ)
//     = softplus(−(f⁺ + γ)) + Σᵢ pᵢ·softplus(f⁻ᵢ + γ),  p = softmax(α·f⁻)
// with p treated as a constant weight (no gradient flows through it).
LossResult nssal_loss(double positive_score,
                      const std::vector<double>& negative_scores, double gamma,
                      double alpha);

// NSSAL with externally supplied weights. The finite-difference audit
// must evaluate the loss with p pinned at its unperturbed value, because
// the analytic gradients deliberately do not differentiate through p.
LossResult nssal_loss_fixed_p(double positive_score,
                              const std::vector<double>& negative_scores,
                              double gamma, const std::vector<double>& p);

// Dispatch on config.kind.
LossResult compute_loss(const LossConfig& config, double positive_score,
                        const std::vector<double>& negative_scores);

// p = softmax(alpha·scores), max-subtracted for stability.
std::vector<double> adversarial_weights(const std::vector<double>& scores,
                                        double alpha);

// Overflow-safe σ and log(1+eˣ).
double stable_sigmoid(double x);
double stable_softplus(double x);

// `count` corruptions of `triple`: a fair coin picks head vs tail, the
// replacement entity is uniform over all entities, and no false-negative
// filtering is applied. The stream depends only on (seed, triple), never
// on sampling order across triples.
std::vector<NegSample> sample_negatives(const KnowledgeGraph& kg,
                                        const Triple& triple,
                                        std::uint32_t count,
                                        std::uint64_t seed);

}  // namespace kgq
