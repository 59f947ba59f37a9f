#include "kgq/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "kgq/eval.hpp"
#include "kgq/kernels.hpp"
#include "kgq/rng.hpp"

namespace kgq {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0))
        throw ConfigError("train: learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (loss.negatives_per_positive < 1)
        throw ConfigError("train: negatives_per_positive must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
        throw ConfigError("train: betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be > 0");
    if (loss.kind == LossKind::Nssal) {
        if (!(loss.alpha > 0.0)) throw ConfigError("train: alpha must be > 0");
        if (!std::isfinite(loss.gamma))
            throw ConfigError("train: gamma must be finite");
    }
    if (d < 1 || hidden < 1) throw ConfigError("train: d and hidden must be >= 1");
}

ModelState make_grad_like(const ModelState& model) {
    ModelState g;
    g.d = model.d;
    g.relation_count = model.relation_count;
    g.table.rows = model.table.rows;
    g.table.width = model.table.width;
    g.table.data.assign(model.table.data.size(), 0.0);
    g.encoder.in_dim = model.encoder.in_dim;
    g.encoder.hidden = model.encoder.hidden;
    g.encoder.w1.assign(model.encoder.w1.size(), 0.0);
    g.encoder.b1.assign(model.encoder.b1.size(), 0.0);
    g.encoder.w2.assign(model.encoder.w2.size(), 0.0);
    g.encoder.b2.assign(model.encoder.b2.size(), 0.0);
    g.phases.assign(model.phases.size(), 0.0);
    return g;
}

void zero_grads(ModelState& grad) {
    for (Segment& s : param_segments(grad)) std::fill_n(s.data, s.size, 0.0);
}

namespace {

// Shared forward/backward core. capture_p records the adversarial weights
// actually used per positive; frozen_p overrides their computation — both
// only meaningful for the NSSAL loss and used by the gradient audit.
double batch_core(const ModelState& model, const std::vector<EntityCode>& codes,
                  const std::vector<Triple>& positives,
                  const std::vector<std::vector<NegSample>>& negatives,
                  const LossConfig& loss, ModelState* grad,
                  std::vector<std::vector<double>>* capture_p,
                  const std::vector<std::vector<double>>* frozen_p) {
    if (positives.empty()) throw Error("batch_loss_and_grad: empty batch");
    if (negatives.size() != positives.size())
        throw Error("batch_loss_and_grad: negatives/positives mismatch");

    const std::uint32_t d = model.d;
    const std::uint32_t width = 2 * d;

    // Encode each distinct entity in the batch once.
    std::unordered_map<EntityId, std::uint32_t> local;
    std::vector<EntityId> ids;
    auto intern = [&](EntityId e) {
        const auto [it, fresh] =
            local.try_emplace(e, static_cast<std::uint32_t>(ids.size()));
        if (fresh) ids.push_back(e);
        return it->second;
    };
    for (std::size_t i = 0; i < positives.size(); ++i) {
        intern(positives[i].head);
        intern(positives[i].tail);
        for (const NegSample& ns : negatives[i]) {
            intern(ns.triple.head);
            intern(ns.triple.tail);
        }
    }

    std::vector<double> reps(ids.size() * std::size_t(width));
    std::vector<EncodeScratch> enc_scratch(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        encode(codes[ids[i]], model.table, model.encoder,
               reps.data() + i * width, &enc_scratch[i]);

    std::vector<double> rep_grad;
    if (grad) rep_grad.assign(reps.size(), 0.0);
    const double inv_b = 1.0 / static_cast<double>(positives.size());

    double total = 0.0;
    std::vector<RotateScratch> rs;  // one per scored triple of a positive
    std::vector<double> neg_scores;
    for (std::size_t i = 0; i < positives.size(); ++i) {
        const Triple& pos = positives[i];
        const auto& negs = negatives[i];
        rs.resize(negs.size() + 1);

        const std::uint32_t ph = local[pos.head], pt = local[pos.tail];
        const double* phases = model.phase_row(pos.relation);
        const double f_pos =
            rotate_score(reps.data() + ph * std::size_t(width), phases,
                         reps.data() + pt * std::size_t(width), d, &rs[0]);
        neg_scores.resize(negs.size());
        for (std::size_t j = 0; j < negs.size(); ++j) {
            const Triple& nt = negs[j].triple;
            neg_scores[j] = rotate_score(
                reps.data() + local[nt.head] * std::size_t(width),
                model.phase_row(nt.relation),
                reps.data() + local[nt.tail] * std::size_t(width), d,
                &rs[j + 1]);
        }

        LossResult lr;
        if (loss.kind == LossKind::Nssal) {
            const std::vector<double> p =
                frozen_p ? (*frozen_p)[i]
                         : adversarial_weights(neg_scores, loss.alpha);
            lr = nssal_loss_fixed_p(f_pos, neg_scores, loss.gamma, p);
            if (capture_p) capture_p->push_back(p);
        } else {
            lr = bce_loss(f_pos, neg_scores);
            if (capture_p) capture_p->emplace_back();
        }
        total += lr.loss;
        if (!grad) continue;

        rotate_backward(rs[0], lr.pos_grad * inv_b,
                        rep_grad.data() + ph * std::size_t(width),
                        grad->phase_row(pos.relation),
                        rep_grad.data() + pt * std::size_t(width), d);
        for (std::size_t j = 0; j < negs.size(); ++j) {
            const Triple& nt = negs[j].triple;
            rotate_backward(rs[j + 1], lr.neg_grads[j] * inv_b,
                            rep_grad.data() + local[nt.head] * std::size_t(width),
                            grad->phase_row(nt.relation),
                            rep_grad.data() + local[nt.tail] * std::size_t(width),
                            d);
        }
    }

    if (grad) {
        for (std::size_t i = 0; i < ids.size(); ++i)
            encode_backward(codes[ids[i]], model.table, model.encoder,
                            enc_scratch[i], rep_grad.data() + i * width,
                            grad->table, grad->encoder);
    }
    return total * inv_b;
}

}  // namespace

double batch_loss_and_grad(const ModelState& model,
                           const std::vector<EntityCode>& codes,
                           const std::vector<Triple>& positives,
                           const std::vector<std::vector<NegSample>>& negatives,
                           const LossConfig& loss, ModelState* grad) {
    return batch_core(model, codes, positives, negatives, loss, grad, nullptr,
                      nullptr);
}

void adam_step(ModelState& model, const ModelState& grad, OptState& opt,
               const TrainConfig& config) {
    ++opt.step;
    const double bc1 =
        1.0 / (1.0 - std::pow(config.beta1, static_cast<double>(opt.step)));
    const double bc2 =
        1.0 / (1.0 - std::pow(config.beta2, static_cast<double>(opt.step)));
    std::size_t off = 0;
    auto psegs = param_segments(model);
    auto gsegs = param_segments(grad);
    for (std::size_t s = 0; s < psegs.size(); ++s) {
        kernels::adam_update(psegs[s].data, opt.m.data() + off,
                             opt.v.data() + off, gsegs[s].data, psegs[s].size,
                             config.learning_rate, config.beta1, config.beta2,
                             config.epsilon, bc1, bc2);
        off += psegs[s].size;
    }
}

namespace {

double param_norm(const ModelState& model) {
    double sum = 0.0;
    for (const ConstSegment& s : param_segments(model))
        sum += kernels::dot(s.data, s.data, s.size);
    return std::sqrt(sum);
}

void write_record(std::ostream* out, const EpochRecord& rec) {
    if (!out) return;
    (*out) << "epoch=" << rec.epoch << " loss=" << rec.loss;
    if (rec.val_mrr >= 0.0)
        (*out) << " val_mrr=" << rec.val_mrr
               << " val_hits10=" << rec.val_hits10;
    (*out) << " secs=" << rec.seconds << "\n";
    out->flush();
}

// Epochs are 1-based; runs (first_epoch..last_epoch] of the schedule.
void run_epochs(const KnowledgeGraph& kg, const std::vector<EntityCode>& codes,
                const TrainConfig& config, std::uint32_t first_epoch,
                std::uint32_t last_epoch, TrainResult& result,
                std::ostream* log_stream) {
    ModelState grad = make_grad_like(result.model);
    std::vector<std::size_t> order(kg.train.size());
    std::vector<Triple> batch;
    std::vector<std::vector<NegSample>> batch_negs;

    for (std::uint32_t epoch = first_epoch; epoch <= last_epoch; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), 0);
        SplitMix64 shuffle_rng = derived_rng(config.seed, Rs::Shuffle, epoch);
        shuffle(order, shuffle_rng);
        const std::uint64_t neg_seed =
            derive_seed(config.seed, Rs::Negatives, epoch);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += config.batch_size) {
            const std::size_t stop =
                std::min(order.size(), start + config.batch_size);
            batch.clear();
            batch_negs.clear();
            for (std::size_t i = start; i < stop; ++i) {
                batch.push_back(kg.train[order[i]]);
                batch_negs.push_back(sample_negatives(
                    kg, batch.back(), config.loss.negatives_per_positive,
                    neg_seed));
            }
            zero_grads(grad);
            const double batch_loss = batch_loss_and_grad(
                result.model, codes, batch, batch_negs, config.loss, &grad);
            if (!std::isfinite(batch_loss)) {
                const Triple& t = batch.front();
                throw NumericalError(
                    "training aborted: non-finite loss at epoch " +
                    std::to_string(epoch) + ", step " +
                    std::to_string(result.opt.step + 1) +
                    " (first batch triple " + std::to_string(t.head) + " " +
                    std::to_string(t.relation) + " " + std::to_string(t.tail) +
                    "); parameter norm = " +
                    std::to_string(param_norm(result.model)));
            }
            loss_sum += batch_loss * static_cast<double>(batch.size());
            adam_step(result.model, grad, result.opt, config);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = loss_sum / static_cast<double>(order.size());
        if (config.eval_every > 0 &&
            (epoch % config.eval_every == 0 || epoch == last_epoch) &&
            !kg.valid.empty()) {
            const RankingReport vr =
                evaluate(result.model, codes, kg, Split::Valid, {10});
            rec.val_mrr = vr.mrr;
            rec.val_hits10 = vr.hits_at.at(10);
            if (vr.mrr > result.best_val_mrr) {
                result.best_val_mrr = vr.mrr;
                result.best_epoch = epoch;
                result.best_model = result.model;
            }
        }
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        write_record(log_stream, rec);
        result.log.push_back(rec);
        result.opt.epochs_done = epoch;
    }

    if (result.best_val_mrr < 0.0) {
        result.best_model = result.model;
        result.best_epoch = result.opt.epochs_done;
    }
}

}  // namespace

TrainResult train(const KnowledgeGraph& kg,
                  const std::vector<EntityCode>& codes, std::uint32_t l,
                  const TrainConfig& config, std::uint64_t config_hash,
                  std::ostream* log_stream) {
    config.validate();
    if (kg.train.empty()) throw ConfigError("train: empty train split");
    if (codes.size() != kg.entity_count)
        throw ConfigError("train: codes must cover every entity");

    TrainResult result;
    result.model = init_model(config.seed, config.d, config.hidden, l,
                              static_cast<std::uint32_t>(kg.relation_count));
    result.model.config_hash = config_hash;
    const std::size_t np = count_params(result.model);
    result.opt.m.assign(np, 0.0);
    result.opt.v.assign(np, 0.0);
    run_epochs(kg, codes, config, 1, config.epochs, result, log_stream);
    return result;
}

TrainResult resume_train(const KnowledgeGraph& kg,
                         const std::vector<EntityCode>& codes,
                         const TrainConfig& config, std::uint64_t config_hash,
                         const std::string& checkpoint_path,
                         std::ostream* log_stream) {
    config.validate();
    if (codes.size() != kg.entity_count)
        throw ConfigError("train: codes must cover every entity");

    TrainResult result;
    result.model = load_checkpoint(checkpoint_path);
    if (result.model.config_hash != config_hash)
        throw ConfigError(checkpoint_path +
                          ": checkpoint belongs to a different config (hash "
                          "mismatch); refusing to resume");
    if (result.model.relation_count != kg.relation_count ||
        result.model.d != config.d || result.model.encoder.hidden != config.hidden)
        throw ConfigError(checkpoint_path + ": checkpoint shape mismatch");
    result.opt = load_opt_state(checkpoint_path + ".opt", config_hash,
                                count_params(result.model));
    if (result.opt.epochs_done >= config.epochs) return result;
    run_epochs(kg, codes, config, result.opt.epochs_done + 1, config.epochs,
               result, log_stream);
    return result;
}

AuditReport gradient_audit(const ModelState& model,
                           const std::vector<EntityCode>& codes,
                           const std::vector<Triple>& positives,
                           const std::vector<std::vector<NegSample>>& negatives,
                           const LossConfig& loss, double tolerance,
                           double inject_error) {
    ModelState analytic = make_grad_like(model);
    std::vector<std::vector<double>> frozen_p;
    batch_core(model, codes, positives, negatives, loss, &analytic, &frozen_p,
               nullptr);
    if (inject_error != 0.0 && !analytic.table.data.empty())
        analytic.table.data[0] += inject_error;

    ModelState probe = model;  // mutated one coordinate at a time
    auto probe_segs = param_segments(probe);
    auto grad_segs = param_segments(analytic);

    AuditReport report;
    const double h = 1e-5;
    for (std::size_t s = 0; s < probe_segs.size(); ++s) {
        for (std::size_t i = 0; i < probe_segs[s].size; ++i) {
            double& theta = probe_segs[s].data[i];
            const double saved = theta;
            theta = saved + h;
            const double up = batch_core(probe, codes, positives, negatives,
                                         loss, nullptr, nullptr, &frozen_p);
            theta = saved - h;
            const double dn = batch_core(probe, codes, positives, negatives,
                                         loss, nullptr, nullptr, &frozen_p);
            theta = saved;
            const double fd = (up - dn) / (2.0 * h);
            const double a = grad_segs[s].data[i];
            const double rel = std::abs(a - fd) /
                               std::max({1.0, std::abs(a), std::abs(fd)});
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_segment = probe_segs[s].name;
            }
            ++report.params_checked;
        }
    }
    report.ok = report.max_rel_err <= tolerance;
    return report;
}

}  // namespace kgq
