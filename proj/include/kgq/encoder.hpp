#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "kgq/error.hpp"
#include "kgq/quantize.hpp"

// Permutation-invariant set encoder: weighted-mean pooling of codeword
// embeddings followed by a one-hidden-layer relu MLP. Doubles throughout.
//
// Representation layout is split complex: the first d entries of a 2d
// vector are real parts, the last d imaginary parts.

namespace kgq {

struct CodewordTable {
    std::uint32_t rows = 0;   // l
    std::uint32_t width = 0;  // 2d
    std::vector<double> data; // row-major, rows x width

    double* row(std::uint32_t i) { return data.data() + std::size_t(i) * width; }
    const double* row(std::uint32_t i) const {
        return data.data() + std::size_t(i) * width;
    }
};

struct EncoderParams {
    std::uint32_t in_dim = 0;  // 2d
    std::uint32_t hidden = 0;  // H
    std::vector<double> w1;    // hidden x in_dim, row-major
    std::vector<double> b1;    // hidden
    std::vector<double> w2;    // in_dim x hidden, row-major
    std::vector<double> b2;    // in_dim
};

// Forward activations cached for the backward pass.
struct EncodeScratch {
    std::vector<double> pooled;      // in_dim
    std::vector<double> pre_hidden;  // hidden, before relu
    std::vector<double> hidden_act;  // hidden, after relu
    double weight_sum = 0.0;
    bool unweighted_fallback = false;
};

// out must hold in_dim doubles. Pooling divides by the weight sum (falling
// back to an unweighted mean if the weights sum to zero); an empty code
// pools to the zero vector so the output is the bias-only MLP path.
// Throws on out-of-range or non-ascending code indices.
void encode(const EntityCode& code, const CodewordTable& table,
            const EncoderParams& params, double* out,
            EncodeScratch* scratch = nullptr);

// Accumulates (+=) exact reverse-mode gradients of encode into the given
// gradient buffers; rows not matched by the code are untouched.
void encode_backward(const EntityCode& code, const CodewordTable& table,
                     const EncoderParams& params, const EncodeScratch& scratch,
                     const double* upstream, CodewordTable& table_grad,
                     EncoderParams& param_grad);

// Glorot-uniform weights (biases zero), deterministic per seed.
std::pair<CodewordTable, EncoderParams> init_params(std::uint64_t seed,
                                                    std::uint32_t d,
                                                    std::uint32_t hidden,
                                                    std::uint32_t l);

}  // namespace kgq
