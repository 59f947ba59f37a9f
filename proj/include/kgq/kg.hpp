#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "kgq/error.hpp"
#include "kgq/rng.hpp"

// Knowledge-graph loading, validation, and indexing.
//
// Ids are dense and contiguous, assigned by first appearance in the train
// split. entity_count/relation_count are the sizes of the *train*
// vocabularies; before filter_unseen, valid/test triples may reference
// labels unseen in train, which are parked at ids >= the train counts so
// the filter can drop them without a second label pass.

namespace kgq {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;
    auto operator<=>(const Triple&) const = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        std::uint64_t k = (static_cast<std::uint64_t>(t.head) << 32) | t.tail;
        return mix64(k ^ (static_cast<std::uint64_t>(t.relation) *
                          0x9e3779b97f4a7c15ull));
    }
};

enum class Direction : std::uint8_t { Forward, Reverse };

struct AdjEdge {
    RelationId relation;
    Direction dir;
    EntityId neighbor;
};

struct LoadStats {
    std::size_t duplicate_train_dropped = 0;
    std::size_t valid_dropped = 0;
    std::size_t test_dropped = 0;
};

struct KnowledgeGraph {
    std::size_t entity_count = 0;    // train-vocabulary entities
    std::size_t relation_count = 0;  // train-vocabulary forward relations
    std::vector<std::string> entity_labels;
    std::vector<std::string> relation_labels;
    std::vector<Triple> train, valid, test;

    // Built by build_adjacency. adjacency[e] holds one entry per incident
    // train edge, both directions; unique_relations[e] is the sorted set of
    // distinct relations touching e (a relation used in both directions
    // counts once).
    std::vector<std::vector<AdjEdge>> adjacency;
    std::vector<std::vector<RelationId>> unique_relations;
    bool has_adjacency = false;

    LoadStats stats;

    // d_i: number of distinct relations connected to e.
    std::uint32_t degree(EntityId e) const {
        return static_cast<std::uint32_t>(unique_relations[e].size());
    }
};

// Load three triple TSV files (head \t relation \t tail per line).
// Malformed lines raise ConfigError naming the file and line number; an
// empty train file is an error.
KnowledgeGraph load_tsv(const std::string& train_path,
                        const std::string& valid_path,
                        const std::string& test_path);

// Build a graph from in-memory label triples (same semantics as load_tsv).
KnowledgeGraph build_from_labels(
    const std::vector<std::array<std::string, 3>>& train,
    const std::vector<std::array<std::string, 3>>& valid,
    const std::vector<std::array<std::string, 3>>& test);

// Drop valid/test triples whose head, tail, or relation does not appear in
// train; updates kg.stats with the drop counts. Relations unseen in train
// are filtered symmetrically with entities.
void filter_unseen(KnowledgeGraph& kg);

// Populate adjacency (with reverse edges) and per-entity unique-relation
// sets from the train split.
void build_adjacency(KnowledgeGraph& kg);

// Deterministic synthetic graph: triple_count distinct triples over
// entity_count entities and relation_count relations, head/tail entities
// drawn with probability proportional to (id+1)^-degree_skew, split
// 80/10/10 by seeded shuffle, then filtered. Raises ConfigError when
// triple_count exceeds entity_count^2 * relation_count.
KnowledgeGraph synth_kg(std::uint64_t seed, std::uint32_t entity_count,
                        std::uint32_t relation_count,
                        std::uint64_t triple_count, double degree_skew);

// Write the three splits back out as TSV (labels, not ids).
void save_tsv(const KnowledgeGraph& kg, const std::string& train_path,
              const std::string& valid_path, const std::string& test_path);

// FNV-1a over the id triples of all three splits, in order.
std::uint64_t graph_checksum(const KnowledgeGraph& kg);

// Reproducibility manifest: counts, split sizes, drop stats, checksum.
std::string graph_manifest(const KnowledgeGraph& kg);

}  // namespace kgq
