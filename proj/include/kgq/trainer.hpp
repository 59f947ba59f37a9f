#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kgq/model.hpp"
#include "kgq/scorer.hpp"

// Mini-batch training with adaptive-moment updates. Single-threaded and
// bit-reproducible: batch order comes from a per-epoch derived shuffle
// stream, negatives from a per-epoch derived sampling stream, and the
// gradient reduction order is fixed, so a resumed run continues exactly
// where an uninterrupted one would be.

namespace kgq {

struct TrainConfig {
    double learning_rate = 1e-3;
    std::uint32_t batch_size = 128;
    std::uint32_t epochs = 100;
    LossConfig loss;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    std::uint32_t eval_every = 0;  // validate every N epochs; 0 = never
    std::uint32_t d = 32;          // complex dimension
    std::uint32_t hidden = 64;     // encoder hidden width

    void validate() const;  // throws ConfigError on bad values
};

struct EpochRecord {
    std::uint32_t epoch = 0;  // 1-based
    double loss = 0.0;        // mean loss per positive triple
    double val_mrr = -1.0;    // < 0: not evaluated this epoch
    double val_hits10 = -1.0;
    double seconds = 0.0;
};

struct TrainResult {
    ModelState model;  // state after the final epoch
    OptState opt;
    ModelState best_model;  // best validation MRR; == model if never validated
    double best_val_mrr = -1.0;
    std::uint32_t best_epoch = 0;
    std::vector<EpochRecord> log;
};

// A ModelState with identical shapes and all values zero, used as a
// gradient accumulator (walked in lockstep via param_segments).
ModelState make_grad_like(const ModelState& model);
void zero_grads(ModelState& grad);

// Mean loss over `positives` (and, when grad != nullptr, the gradient of
// that mean accumulated into *grad). negatives[i] belongs to positives[i].
double batch_loss_and_grad(const ModelState& model,
                           const std::vector<EntityCode>& codes,
                           const std::vector<Triple>& positives,
                           const std::vector<std::vector<NegSample>>& negatives,
                           const LossConfig& loss, ModelState* grad);

// One optimizer step over every parameter. bc factors are derived from
// opt.step, which is incremented first.
void adam_step(ModelState& model, const ModelState& grad, OptState& opt,
               const TrainConfig& config);

// Train a fresh model. Throws ConfigError for bad inputs, NumericalError
// (with epoch/step/parameter-norm diagnostics) if the loss goes non-finite.
TrainResult train(const KnowledgeGraph& kg, const std::vector<EntityCode>& codes,
                  std::uint32_t l, const TrainConfig& config,
                  std::uint64_t config_hash, std::ostream* log_stream = nullptr);

// Continue a checkpointed run through config.epochs. Refuses (ConfigError)
// when the checkpoint or optimizer sidecar carries a different config hash.
TrainResult resume_train(const KnowledgeGraph& kg,
                         const std::vector<EntityCode>& codes,
                         const TrainConfig& config, std::uint64_t config_hash,
                         const std::string& checkpoint_path,
                         std::ostream* log_stream = nullptr);

struct AuditReport {
    double max_rel_err = 0.0;
    std::size_t params_checked = 0;
    std::string worst_segment;
    bool ok = false;
};

// Compares every analytic gradient of batch_loss_and_grad against central
// finite differences. Relative error uses denominator max(1, |a|, |fd|).
// inject_error (tests only) is added to one analytic gradient entry to
// prove the audit can fail.
AuditReport gradient_audit(const ModelState& model,
                           const std::vector<EntityCode>& codes,
                           const std::vector<Triple>& positives,
                           const std::vector<std::vector<NegSample>>& negatives,
                           const LossConfig& loss, double tolerance,
                           double inject_error = 0.0);

}  // namespace kgq
