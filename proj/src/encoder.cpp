#include "kgq/encoder.hpp"

#include <cmath>
#include <cstring>

#include "kgq/kernels.hpp"
#include "kgq/rng.hpp"

namespace kgq {

namespace {

void check_code(const EntityCode& code, std::uint32_t l) {
    std::uint32_t prev = 0;
    for (std::size_t i = 0; i < code.matched.size(); ++i) {
        if (code.matched[i] >= l)
            throw Error("encode: codeword index out of range");
        if (i > 0 && code.matched[i] <= prev)
            throw Error("encode: code indices must be strictly increasing");
        prev = code.matched[i];
    }
    if (code.weights.size() != code.matched.size())
        throw Error("encode: weights/matched size mismatch");
}

}  // namespace

void encode(const EntityCode& code, const CodewordTable& table,
            const EncoderParams& params, double* out, EncodeScratch* scratch) {
    const std::uint32_t in_dim = params.in_dim;
    const std::uint32_t hidden = params.hidden;
    check_code(code, table.rows);

    EncodeScratch local;
    EncodeScratch& s = scratch ? *scratch : local;
    s.pooled.assign(in_dim, 0.0);
    s.pre_hidden.resize(hidden);
    s.hidden_act.resize(hidden);

    double wsum = 0.0;
    for (const double w : code.weights) wsum += w;
    s.unweighted_fallback = !code.matched.empty() && wsum == 0.0;
    if (s.unweighted_fallback) wsum = static_cast<double>(code.matched.size());
    s.weight_sum = wsum;

    for (std::size_t i = 0; i < code.matched.size(); ++i) {
        const double w = s.unweighted_fallback ? 1.0 : code.weights[i];
        kernels::axpy(w / wsum, table.row(code.matched[i]), s.pooled.data(),
                      in_dim);
    }

    for (std::uint32_t j = 0; j < hidden; ++j) {
        const double z = params.b1[j] + kernels::dot(params.w1.data() +
                                                         std::size_t(j) * in_dim,
                                                     s.pooled.data(), in_dim);
        s.pre_hidden[j] = z;
        s.hidden_act[j] = z > 0.0 ? z : 0.0;
    }
    for (std::uint32_t o = 0; o < in_dim; ++o) {
        out[o] = params.b2[o] + kernels::dot(params.w2.data() +
                                                 std::size_t(o) * hidden,
                                             s.hidden_act.data(), hidden);
    }
}

void encode_backward(const EntityCode& code, const CodewordTable& table,
                     const EncoderParams& params, const EncodeScratch& scratch,
                     const double* upstream, CodewordTable& table_grad,
                     EncoderParams& param_grad) {
    (void)table;
    const std::uint32_t in_dim = params.in_dim;
    const std::uint32_t hidden = params.hidden;

    // Output layer.
    std::vector<double> d_hidden(hidden, 0.0);
    for (std::uint32_t o = 0; o < in_dim; ++o) {
        const double g = upstream[o];
        param_grad.b2[o] += g;
        kernels::axpy(g, scratch.hidden_act.data(),
                      param_grad.w2.data() + std::size_t(o) * hidden, hidden);
        kernels::axpy(g, params.w2.data() + std::size_t(o) * hidden,
                      d_hidden.data(), hidden);
    }

    // Hidden layer through relu.
    std::vector<double> d_pooled(in_dim, 0.0);
    for (std::uint32_t j = 0; j < hidden; ++j) {
        if (scratch.pre_hidden[j] <= 0.0) continue;
        const double dz = d_hidden[j];
        param_grad.b1[j] += dz;
        kernels::axpy(dz, scratch.pooled.data(),
                      param_grad.w1.data() + std::size_t(j) * in_dim, in_dim);
        kernels::axpy(dz, params.w1.data() + std::size_t(j) * in_dim,
                      d_pooled.data(), in_dim);
    }

    // Pooling back to the matched codeword rows.
    if (code.matched.empty()) return;
    for (std::size_t i = 0; i < code.matched.size(); ++i) {
        const double w = scratch.unweighted_fallback ? 1.0 : code.weights[i];
        kernels::axpy(w / scratch.weight_sum, d_pooled.data(),
                      table_grad.row(code.matched[i]), in_dim);
    }
}

std::pair<CodewordTable, EncoderParams> init_params(std::uint64_t seed,
                                                    std::uint32_t d,
                                                    std::uint32_t hidden,
                                                    std::uint32_t l) {
    if (d < 1 || hidden < 1 || l < 1)
        throw Error("init_params: dimensions must be >= 1");
    const std::uint32_t in_dim = 2 * d;

    auto fill_uniform = [](std::vector<double>& v, double bound,
                           SplitMix64 rng) {
        for (double& x : v) x = rng.range(-bound, bound);
    };
    auto glorot = [](std::uint32_t fan_in, std::uint32_t fan_out) {
        return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    };

    CodewordTable table;
    table.rows = l;
    table.width = in_dim;
    table.data.resize(std::size_t(l) * in_dim);
    fill_uniform(table.data, glorot(in_dim, in_dim),
                 derived_rng(seed, Rs::ParamInit, 0));

    EncoderParams params;
    params.in_dim = in_dim;
    params.hidden = hidden;
    params.w1.resize(std::size_t(hidden) * in_dim);
    params.b1.assign(hidden, 0.0);
    params.w2.resize(std::size_t(in_dim) * hidden);
    params.b2.assign(in_dim, 0.0);
    fill_uniform(params.w1, glorot(in_dim, hidden),
                 derived_rng(seed, Rs::ParamInit, 1));
    fill_uniform(params.w2, glorot(hidden, in_dim),
                 derived_rng(seed, Rs::ParamInit, 2));
    return {std::move(table), std::move(params)};
}

}  // namespace kgq
