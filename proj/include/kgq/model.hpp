#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgq/encoder.hpp"
#include "kgq/kg.hpp"

// Trainable model state, parameter-segment walking, and checkpoint files.
//
// Checkpoint format ("kgq-ckpt v1"): a short text header terminated by a
// "---" line, followed by the raw little-endian doubles of the model
// parameters in flatten order (codeword table, w1, b1, w2, b2, relation
// phases) and nothing else — the file's float count equals count_params.
// Optimizer moments and the step/epoch counters live in a separate
// "kgq-opt v1" sidecar so the main file stays parameters-only.

namespace kgq {

struct ModelState {
    std::uint32_t d = 0;               // complex dimension per entity
    std::uint32_t relation_count = 0;  // |R|
    CodewordTable table;               // l x 2d
    EncoderParams encoder;
    std::vector<double> phases;        // |R| x d, row-major, radians
    std::uint64_t config_hash = 0;

    double* phase_row(RelationId r) {
        return phases.data() + std::size_t(r) * d;
    }
    const double* phase_row(RelationId r) const {
        return phases.data() + std::size_t(r) * d;
    }
};

// Adam state, shaped like the flattened parameters.
struct OptState {
    std::vector<double> m, v;
    std::uint64_t step = 0;         // optimizer steps taken
    std::uint32_t epochs_done = 0;  // completed epochs (for resume)
};

struct Segment {
    const char* name;
    double* data;
    std::size_t size;
};
struct ConstSegment {
    const char* name;
    const double* data;
    std::size_t size;
};

// The parameter tensors in flatten order.
std::vector<Segment> param_segments(ModelState& model);
std::vector<ConstSegment> param_segments(const ModelState& model);

// Exact scalar parameter count: l·2d + encoder weights/biases + |R|·d.
std::size_t count_params(const ModelState& model);

// Fresh model: Glorot table/MLP, phases uniform in [−π, π), all streams
// derived from the seed.
ModelState init_model(std::uint64_t seed, std::uint32_t d,
                      std::uint32_t hidden, std::uint32_t l,
                      std::uint32_t relation_count);

// Encode every entity against the model; row-major |E| x 2d.
std::vector<double> encode_all(const ModelState& model,
                               const std::vector<EntityCode>& codes);

void save_checkpoint(const ModelState& model, const std::string& path);
ModelState load_checkpoint(const std::string& path);

void save_opt_state(const OptState& opt, std::uint64_t config_hash,
                    const std::string& path);
// Throws ConfigError if the sidecar's config hash differs.
OptState load_opt_state(const std::string& path, std::uint64_t config_hash,
                        std::size_t param_count);

}  // namespace kgq
