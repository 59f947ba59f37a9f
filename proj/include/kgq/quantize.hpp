#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kgq/kg.hpp"
#include "kgq/rng.hpp"

// Codebook construction and per-entity code assignment.
//
// Codeword indexing is global: relation codewords occupy [0, m), anchor
// codewords [m, m+n). An entity code is the sorted list of matched global
// indices plus parallel positive weights. The fully random variant uses a
// single abstract codebook of size l = m+n whose codewords correspond to
// no graph element.

namespace kgq {

enum class CodebookKind { Relation, Anchor, Abstract };

struct Codebook {
    CodebookKind kind = CodebookKind::Relation;
    std::uint32_t size = 0;
    std::vector<EntityId> anchor_ids;  // kind == Anchor only; distinct entities
};

struct EntityCode {
    std::vector<std::uint32_t> matched;  // strictly increasing, < l
    std::vector<double> weights;         // parallel to matched, all > 0
};

enum class RelationStrategy { Connected, Random, None };
enum class AnchorStrategy { NearestPath, RelationSimilarity, Random, None };
enum class WeightScheme { EarlConnectivity, Random, Equal };
enum class AnchorSelection { Degree, Ppr, UniformSample, FractionSample };

struct QuantConfig {
    RelationStrategy relation_strategy = RelationStrategy::Connected;
    AnchorStrategy anchor_strategy = AnchorStrategy::NearestPath;
    WeightScheme weight_scheme = WeightScheme::Equal;
    bool abstract_mode = false;          // the fully random (+RQ) variant
    std::uint32_t max_relations = 0;     // d; 0 means unbounded
    std::uint32_t anchors_per_entity = 0;  // k
    AnchorSelection anchor_selection = AnchorSelection::Degree;
    double anchor_count_or_fraction = 0.0;  // entities (>=1) or fraction (<1)
    std::uint64_t seed = 0;
    double ppr_damping = 0.85;
    std::uint32_t ppr_iterations = 50;
};

struct QuantResult {
    std::vector<EntityCode> codes;  // one per entity
    std::uint32_t m = 0;            // relation codewords
    std::uint32_t n = 0;            // anchor codewords
    std::uint32_t l = 0;            // m + n
    Codebook anchor_book;           // empty when anchors unused/abstract
    double mean_relation_matches = 0.0;  // s-bar under the connected rule
};

// --- anchor selection --------------------------------------------------

// Top-n entities by unique-relation degree, ties to the smaller id.
Codebook select_anchors_degree(const KnowledgeGraph& kg, std::uint32_t n);

// Top-n by PageRank over the undirected entity graph (power iteration,
// uniform teleport, dangling mass redistributed uniformly).
Codebook select_anchors_ppr(const KnowledgeGraph& kg, std::uint32_t n,
                            double damping, std::uint32_t iterations);

// PageRank score vector itself (exposed for oracle comparison).
std::vector<double> pagerank_scores(const KnowledgeGraph& kg, double damping,
                                    std::uint32_t iterations);

// ceil(fraction * |E|) entities sampled uniformly without replacement.
Codebook select_anchors_sample(const KnowledgeGraph& kg, double fraction,
                               std::uint64_t seed);
Codebook select_anchors_sample_count(const KnowledgeGraph& kg,
                                     std::uint32_t count, std::uint64_t seed);

// --- codeword matching -------------------------------------------------

// The unique relations connected to e; when more than max_relations (>0),
// the ones with the highest connection count to e, ties to the smaller
// relation id. Result sorted by relation id.
std::vector<RelationId> match_relations_connected(const KnowledgeGraph& kg,
                                                  EntityId e,
                                                  std::uint32_t max_relations);

// Anchor-book indices of the k anchors nearest to e by undirected BFS hop
// count, ordered by (distance, anchor entity id); unreachable slots are
// filled by a seeded uniform draw from the unreached anchors.
std::vector<std::uint32_t> match_anchors_nearest(const KnowledgeGraph& kg,
                                                 const Codebook& anchors,
                                                 EntityId e, std::uint32_t k,
                                                 std::uint64_t seed);

// Anchor-book indices of the k anchors whose unique-relation sets have the
// highest Jaccard similarity with e's, ties to the smaller anchor id.
std::vector<std::uint32_t> match_anchors_relation_similarity(
    const KnowledgeGraph& kg, const Codebook& anchors, EntityId e,
    std::uint32_t k);

// Uniform sample of `count` distinct codewords from [0, universe), derived
// from (seed, entity, purpose) so streams never collide across uses.
std::vector<std::uint32_t> match_random(std::uint32_t universe,
                                        std::uint32_t count,
                                        std::uint64_t seed, EntityId entity,
                                        Rs purpose = Rs::MatchRelations);

// Jaccard similarity of two sorted id sets (empty vs anything -> 0).
double relation_set_similarity(const std::vector<RelationId>& a,
                               const std::vector<RelationId>& b);

// Weights for a finalized matched list (global indices). Connectivity
// weights normalize edge counts over the relation block and relation-set
// similarity over the anchor block, each block summing to 1 (equal split
// when a block's raw weights sum to zero).
std::vector<double> assign_weights(const KnowledgeGraph& kg,
                                   const Codebook& anchors, std::uint32_t m,
                                   EntityId e,
                                   const std::vector<std::uint32_t>& matched,
                                   WeightScheme scheme, std::uint64_t seed);

// Full pipeline: build codebooks and one EntityCode per entity.
QuantResult quantize_all(const KnowledgeGraph& kg, const QuantConfig& config);

// --- code dump ---------------------------------------------------------
//
// Text format, bit-exact across platforms (shortest round-trip doubles):
//   kgq-codes v1 l=<l> m=<m> n=<n> config=<16-hex>
//   <entity id> <index>:<weight> <index>:<weight> ...

struct CodeDump {
    std::uint32_t l = 0, m = 0, n = 0;
    std::uint64_t config_hash = 0;
    std::vector<EntityCode> codes;
};

void write_code_dump(std::ostream& out, const std::vector<EntityCode>& codes,
                     std::uint32_t l, std::uint32_t m, std::uint32_t n,
                     std::uint64_t config_hash);
void write_code_dump_file(const std::string& path,
                          const std::vector<EntityCode>& codes, std::uint32_t l,
                          std::uint32_t m, std::uint32_t n,
                          std::uint64_t config_hash);
CodeDump read_code_dump(std::istream& in);
CodeDump read_code_dump_file(const std::string& path);

}  // namespace kgq
