#include "kgq/quantize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace kgq {

namespace {

void require_adjacency(const KnowledgeGraph& kg, const char* op) {
    if (!kg.has_adjacency)
        throw Error(std::string(op) + ": adjacency not built");
}

// Selection shared by degree/PPR: top-n by (score desc, id asc).
std::vector<EntityId> top_n_by_score(const std::vector<double>& scores,
                                     std::uint32_t n) {
    std::vector<EntityId> ids(scores.size());
    for (std::uint32_t i = 0; i < ids.size(); ++i) ids[i] = i;
    std::stable_sort(ids.begin(), ids.end(), [&](EntityId a, EntityId b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    ids.resize(n);
    return ids;
}

}  // namespace

Codebook select_anchors_degree(const KnowledgeGraph& kg, std::uint32_t n) {
    require_adjacency(kg, "select_anchors_degree");
    if (n > kg.entity_count)
        throw ConfigError("select_anchors_degree: n exceeds entity count");
    std::vector<double> scores(kg.entity_count);
    for (std::uint32_t e = 0; e < kg.entity_count; ++e)
        scores[e] = static_cast<double>(kg.degree(e));
    return Codebook{CodebookKind::Anchor, n, top_n_by_score(scores, n)};
}

std::vector<double> pagerank_scores(const KnowledgeGraph& kg, double damping,
                                    std::uint32_t iterations) {
    require_adjacency(kg, "pagerank_scores");
    if (!(damping > 0.0 && damping < 1.0))
        throw ConfigError("pagerank: damping must be in (0,1)");
    if (iterations < 1) throw ConfigError("pagerank: iterations must be >= 1");
    const std::size_t n = kg.entity_count;
    std::vector<double> x(n, 1.0 / static_cast<double>(n)), next(n);
    for (std::uint32_t it = 0; it < iterations; ++it) {
        double dangling = 0.0;
        for (std::size_t e = 0; e < n; ++e)
            if (kg.adjacency[e].empty()) dangling += x[e];
        const double base =
            (1.0 - damping + damping * dangling) / static_cast<double>(n);
        std::fill(next.begin(), next.end(), base);
        for (std::size_t e = 0; e < n; ++e) {
            if (kg.adjacency[e].empty()) continue;
            const double share =
                damping * x[e] / static_cast<double>(kg.adjacency[e].size());
            for (const AdjEdge& edge : kg.adjacency[e])
                next[edge.neighbor] += share;
        }
        x.swap(next);
    }
    return x;
}

Codebook select_anchors_ppr(const KnowledgeGraph& kg, std::uint32_t n,
                            double damping, std::uint32_t iterations) {
    if (n > kg.entity_count)
        throw ConfigError("select_anchors_ppr: n exceeds entity count");
    const auto scores = pagerank_scores(kg, damping, iterations);
    return Codebook{CodebookKind::Anchor, n, top_n_by_score(scores, n)};
}

Codebook select_anchors_sample_count(const KnowledgeGraph& kg,
                                     std::uint32_t count, std::uint64_t seed) {
    if (count > kg.entity_count)
        throw ConfigError("select_anchors_sample: count exceeds entity count");
    auto rng = derived_rng(seed, Rs::AnchorSample);
    auto ids = sample_without_replacement(
        static_cast<std::uint32_t>(kg.entity_count), count, rng);
    return Codebook{CodebookKind::Anchor, count,
                    std::vector<EntityId>(ids.begin(), ids.end())};
}

Codebook select_anchors_sample(const KnowledgeGraph& kg, double fraction,
                               std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("select_anchors_sample: fraction must be in (0,1]");
    const auto count = static_cast<std::uint32_t>(
        std::ceil(fraction * static_cast<double>(kg.entity_count)));
    return select_anchors_sample_count(kg, count, seed);
}

std::vector<RelationId> match_relations_connected(const KnowledgeGraph& kg,
                                                  EntityId e,
                                                  std::uint32_t max_relations) {
    require_adjacency(kg, "match_relations_connected");
    const auto& unique = kg.unique_relations[e];
    if (max_relations == 0 || unique.size() <= max_relations) return unique;

    // Keep the max_relations relations with the highest connection count.
    std::unordered_map<RelationId, std::uint32_t> counts;
    counts.reserve(unique.size() * 2);
    for (const AdjEdge& edge : kg.adjacency[e]) ++counts[edge.relation];
    std::vector<RelationId> ranked = unique;
    std::sort(ranked.begin(), ranked.end(), [&](RelationId a, RelationId b) {
        if (counts[a] != counts[b]) return counts[a] > counts[b];
        return a < b;
    });
    ranked.resize(max_relations);
    std::sort(ranked.begin(), ranked.end());
    return ranked;
}

std::vector<std::uint32_t> match_anchors_nearest(const KnowledgeGraph& kg,
                                                 const Codebook& anchors,
                                                 EntityId e, std::uint32_t k,
                                                 std::uint64_t seed) {
    require_adjacency(kg, "match_anchors_nearest");
    if (k > anchors.size)
        throw ConfigError("match_anchors_nearest: k exceeds anchor count");
    if (k == 0) return {};

    constexpr std::uint32_t kUnreached = ~0u;
    std::vector<std::uint32_t> dist(kg.entity_count, kUnreached);
    std::deque<EntityId> queue;
    dist[e] = 0;
    queue.push_back(e);
    while (!queue.empty()) {
        const EntityId cur = queue.front();
        queue.pop_front();
        for (const AdjEdge& edge : kg.adjacency[cur]) {
            if (dist[edge.neighbor] == kUnreached) {
                dist[edge.neighbor] = dist[cur] + 1;
                queue.push_back(edge.neighbor);
            }
        }
    }

    struct Cand {
        std::uint32_t dist;
        EntityId entity;
        std::uint32_t book_index;
    };
    std::vector<Cand> reached;
    std::vector<std::uint32_t> unreached;
    for (std::uint32_t i = 0; i < anchors.anchor_ids.size(); ++i) {
        const EntityId a = anchors.anchor_ids[i];
        if (dist[a] != kUnreached)
            reached.push_back({dist[a], a, i});
        else
            unreached.push_back(i);
    }
    std::sort(reached.begin(), reached.end(), [](const Cand& a, const Cand& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        return a.entity < b.entity;
    });

    std::vector<std::uint32_t> out;
    out.reserve(k);
    for (std::uint32_t i = 0; i < reached.size() && out.size() < k; ++i)
        out.push_back(reached[i].book_index);
    if (out.size() < k) {
        // Deterministic padding from the unreached anchors. Sort by anchor
        // entity id so the draw is independent of book order.
        std::sort(unreached.begin(), unreached.end(),
                  [&](std::uint32_t a, std::uint32_t b) {
                      return anchors.anchor_ids[a] < anchors.anchor_ids[b];
                  });
        auto rng = derived_rng(seed, Rs::AnchorPad, e);
        auto picks = sample_without_replacement(
            static_cast<std::uint32_t>(unreached.size()),
            static_cast<std::uint32_t>(k - out.size()), rng);
        for (const std::uint32_t p : picks) out.push_back(unreached[p]);
    }
    return out;
}

double relation_set_similarity(const std::vector<RelationId>& a,
                               const std::vector<RelationId>& b) {
    if (a.empty() || b.empty()) return 0.0;
    std::size_t inter = 0, i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::uint32_t> match_anchors_relation_similarity(
    const KnowledgeGraph& kg, const Codebook& anchors, EntityId e,
    std::uint32_t k) {
    require_adjacency(kg, "match_anchors_relation_similarity");
    if (k > anchors.size)
        throw ConfigError("match_anchors_relation_similarity: k exceeds anchor count");
    if (k == 0) return {};

    struct Cand {
        double sim;
        EntityId entity;
        std::uint32_t book_index;
    };
    std::vector<Cand> cands;
    cands.reserve(anchors.anchor_ids.size());
    for (std::uint32_t i = 0; i < anchors.anchor_ids.size(); ++i) {
        const EntityId a = anchors.anchor_ids[i];
        cands.push_back({relation_set_similarity(kg.unique_relations[e],
                                                 kg.unique_relations[a]),
                         a, i});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.entity < b.entity;
    });
    std::vector<std::uint32_t> out(k);
    for (std::uint32_t i = 0; i < k; ++i) out[i] = cands[i].book_index;
    return out;
}

std::vector<std::uint32_t> match_random(std::uint32_t universe,
                                        std::uint32_t count,
                                        std::uint64_t seed, EntityId entity,
                                        Rs purpose) {
    if (count > universe)
        throw ConfigError("match_random: count exceeds universe size");
    auto rng = derived_rng(seed, purpose, entity);
    return sample_without_replacement(universe, count, rng);
}

std::vector<double> assign_weights(const KnowledgeGraph& kg,
                                   const Codebook& anchors, std::uint32_t m,
                                   EntityId e,
                                   const std::vector<std::uint32_t>& matched,
                                   WeightScheme scheme, std::uint64_t seed) {
    std::vector<double> weights(matched.size(), 1.0);
    if (scheme == WeightScheme::Equal) return weights;
    if (scheme == WeightScheme::Random) {
        auto rng = derived_rng(seed, Rs::Weights, e);
        for (double& w : weights) w = rng.unit_open_zero();
        return weights;
    }

    // Connectivity weights: edge counts over the relation block, relation-set
    // similarity over the anchor block, each normalized to sum 1.
    require_adjacency(kg, "assign_weights");
    std::unordered_map<RelationId, std::uint32_t> counts;
    for (const AdjEdge& edge : kg.adjacency[e]) ++counts[edge.relation];

    double rel_sum = 0.0, anc_sum = 0.0;
    std::size_t rel_cnt = 0, anc_cnt = 0;
    for (std::size_t i = 0; i < matched.size(); ++i) {
        if (matched[i] < m) {
            const auto it = counts.find(matched[i]);
            weights[i] = (it == counts.end()) ? 0.0
                                              : static_cast<double>(it->second);
            rel_sum += weights[i];
            ++rel_cnt;
        } else {
            const EntityId a = anchors.anchor_ids[matched[i] - m];
            weights[i] = relation_set_similarity(kg.unique_relations[e],
                                                 kg.unique_relations[a]);
            anc_sum += weights[i];
            ++anc_cnt;
        }
    }
    for (std::size_t i = 0; i < matched.size(); ++i) {
        const bool is_rel = matched[i] < m;
        const double sum = is_rel ? rel_sum : anc_sum;
        const std::size_t cnt = is_rel ? rel_cnt : anc_cnt;
        weights[i] = (sum > 0.0) ? weights[i] / sum
                                 : 1.0 / static_cast<double>(cnt);
    }
    return weights;
}

QuantResult quantize_all(const KnowledgeGraph& kg, const QuantConfig& config) {
    require_adjacency(kg, "quantize_all");
    const bool use_rel = config.relation_strategy != RelationStrategy::None;
    const bool use_anc = config.anchor_strategy != AnchorStrategy::None;
    if (!config.abstract_mode && !use_rel && !use_anc)
        throw ConfigError("quantize_all: no codeword source active");

    QuantResult result;
    const std::uint32_t entity_count =
        static_cast<std::uint32_t>(kg.entity_count);

    auto resolve_anchor_count = [&]() -> std::uint32_t {
        if (config.anchor_selection == AnchorSelection::FractionSample) {
            if (!(config.anchor_count_or_fraction > 0.0 &&
                  config.anchor_count_or_fraction <= 1.0))
                throw ConfigError("quantize_all: anchor fraction must be in (0,1]");
            return static_cast<std::uint32_t>(
                std::ceil(config.anchor_count_or_fraction *
                          static_cast<double>(entity_count)));
        }
        return static_cast<std::uint32_t>(config.anchor_count_or_fraction);
    };

    // Codebook sizes. The abstract book mirrors the sizes the concrete
    // books would have had.
    const bool need_anchor_dim = use_anc || config.abstract_mode;
    result.m = (use_rel || config.abstract_mode)
                   ? static_cast<std::uint32_t>(kg.relation_count)
                   : 0;
    result.n = need_anchor_dim ? resolve_anchor_count() : 0;
    result.l = result.m + result.n;
    if (result.l == 0) throw ConfigError("quantize_all: empty codebook");

    if (use_anc && !config.abstract_mode) {
        switch (config.anchor_selection) {
            case AnchorSelection::Degree:
                result.anchor_book = select_anchors_degree(kg, result.n);
                break;
            case AnchorSelection::Ppr:
                result.anchor_book = select_anchors_ppr(
                    kg, result.n, config.ppr_damping, config.ppr_iterations);
                break;
            case AnchorSelection::UniformSample:
                result.anchor_book =
                    select_anchors_sample_count(kg, result.n, config.seed);
                break;
            case AnchorSelection::FractionSample:
                result.anchor_book = select_anchors_sample(
                    kg, config.anchor_count_or_fraction, config.seed);
                break;
        }
    }

    // s_i = min(d_i, d) under the connected rule, also for random variants.
    std::vector<std::uint32_t> s(entity_count);
    double s_sum = 0.0;
    for (EntityId e = 0; e < entity_count; ++e) {
        const std::uint32_t d_i = kg.degree(e);
        s[e] = (config.max_relations == 0) ? d_i
                                           : std::min(d_i, config.max_relations);
        s_sum += static_cast<double>(s[e]);
    }
    result.mean_relation_matches = s_sum / static_cast<double>(entity_count);

    result.codes.resize(entity_count);

    if (config.abstract_mode) {
        // round-half-to-even of the mean, matching the default FP rounding.
        const auto mean_rounded = static_cast<std::uint32_t>(
            std::nearbyint(result.mean_relation_matches));
        const std::uint32_t cardinality =
            mean_rounded + config.anchors_per_entity;
        if (cardinality > result.l)
            throw ConfigError("quantize_all: abstract code cardinality exceeds l");
        for (EntityId e = 0; e < entity_count; ++e) {
            auto& code = result.codes[e];
            code.matched = match_random(result.l, cardinality, config.seed, e,
                                        Rs::AbstractCode);
            code.weights.assign(code.matched.size(), 1.0);
        }
        return result;
    }

    const std::uint32_t k = use_anc ? config.anchors_per_entity : 0;
    if (use_anc && k > result.n)
        throw ConfigError("quantize_all: anchors per entity exceeds anchor count");

    for (EntityId e = 0; e < entity_count; ++e) {
        std::vector<std::uint32_t> matched;
        if (use_rel) {
            std::vector<RelationId> rels;
            if (config.relation_strategy == RelationStrategy::Connected)
                rels = match_relations_connected(kg, e, config.max_relations);
            else
                rels = match_random(result.m, s[e], config.seed, e,
                                    Rs::MatchRelations);
            matched.insert(matched.end(), rels.begin(), rels.end());
        }
        if (use_anc && k > 0) {
            std::vector<std::uint32_t> ancs;
            switch (config.anchor_strategy) {
                case AnchorStrategy::NearestPath:
                    ancs = match_anchors_nearest(kg, result.anchor_book, e, k,
                                                 config.seed);
                    break;
                case AnchorStrategy::RelationSimilarity:
                    ancs = match_anchors_relation_similarity(
                        kg, result.anchor_book, e, k);
                    break;
                case AnchorStrategy::Random:
                    ancs = match_random(result.n, k, config.seed, e,
                                        Rs::MatchAnchors);
                    break;
                case AnchorStrategy::None:
                    break;
            }
            for (const std::uint32_t a : ancs) matched.push_back(result.m + a);
        }
        std::sort(matched.begin(), matched.end());
        auto& code = result.codes[e];
        code.weights = assign_weights(kg, result.anchor_book, result.m, e,
                                      matched, config.weight_scheme,
                                      config.seed);
        code.matched = std::move(matched);
    }
    return result;
}

// --- code dump ---------------------------------------------------------

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

}  // namespace

void write_code_dump(std::ostream& out, const std::vector<EntityCode>& codes,
                     std::uint32_t l, std::uint32_t m, std::uint32_t n,
                     std::uint64_t config_hash) {
    char head[96];
    std::snprintf(head, sizeof head, "kgq-codes v1 l=%u m=%u n=%u config=%016llx\n",
                  l, m, n, static_cast<unsigned long long>(config_hash));
    out << head;
    std::string line;
    for (std::size_t e = 0; e < codes.size(); ++e) {
        line.clear();
        line += std::to_string(e);
        const auto& code = codes[e];
        for (std::size_t i = 0; i < code.matched.size(); ++i) {
            line += ' ';
            line += std::to_string(code.matched[i]);
            line += ':';
            append_double(line, code.weights[i]);
        }
        line += '\n';
        out << line;
    }
}

void write_code_dump_file(const std::string& path,
                          const std::vector<EntityCode>& codes, std::uint32_t l,
                          std::uint32_t m, std::uint32_t n,
                          std::uint64_t config_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write code dump: " + path);
    write_code_dump(out, codes, l, m, n, config_hash);
}

CodeDump read_code_dump(std::istream& in) {
    CodeDump dump;
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("code dump: missing header");
    unsigned long long hash = 0;
    if (std::sscanf(line.c_str(), "kgq-codes v1 l=%u m=%u n=%u config=%llx",
                    &dump.l, &dump.m, &dump.n, &hash) != 4)
        throw ConfigError("code dump: malformed header: " + line);
    dump.config_hash = hash;

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        EntityCode code;
        const char* p = line.c_str();
        const char* end = p + line.size();
        std::uint64_t entity = 0;
        auto res = std::from_chars(p, end, entity);
        if (res.ec != std::errc{})
            throw ConfigError("code dump line " + std::to_string(lineno) +
                              ": bad entity id");
        p = res.ptr;
        while (p < end) {
            if (*p != ' ')
                throw ConfigError("code dump line " + std::to_string(lineno) +
                                  ": expected space");
            ++p;
            std::uint32_t index = 0;
            res = std::from_chars(p, end, index);
            if (res.ec != std::errc{} || res.ptr >= end || *res.ptr != ':')
                throw ConfigError("code dump line " + std::to_string(lineno) +
                                  ": bad index:weight pair");
            p = res.ptr + 1;
            double weight = 0.0;
            const auto wres = std::from_chars(p, end, weight);
            if (wres.ec != std::errc{})
                throw ConfigError("code dump line " + std::to_string(lineno) +
                                  ": bad weight");
            p = wres.ptr;
            if (index >= dump.l)
                throw ConfigError("code dump line " + std::to_string(lineno) +
                                  ": index " + std::to_string(index) +
                                  " out of range (l=" + std::to_string(dump.l) +
                                  ")");
            if (!code.matched.empty() && index <= code.matched.back())
                throw ConfigError("code dump line " + std::to_string(lineno) +
                                  ": indices must be strictly increasing");
            code.matched.push_back(index);
            code.weights.push_back(weight);
        }
        if (entity != dump.codes.size())
            throw ConfigError("code dump line " + std::to_string(lineno) +
                              ": entity ids must be dense and in order");
        dump.codes.push_back(std::move(code));
    }
    return dump;
}

CodeDump read_code_dump_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open code dump: " + path);
    return read_code_dump(in);
}

}  // namespace kgq
