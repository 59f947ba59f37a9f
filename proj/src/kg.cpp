#include "kgq/kg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "kgq/rng.hpp"

namespace kgq {

namespace {

struct Vocab {
    std::unordered_map<std::string, std::uint32_t> index;
    std::vector<std::string> labels;

    std::uint32_t get_or_add(const std::string& s) {
        auto [it, inserted] = index.try_emplace(s, static_cast<std::uint32_t>(labels.size()));
        if (inserted) labels.push_back(s);
        return it->second;
    }
};

std::vector<std::array<std::string, 3>> parse_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open triple file: " + path);
    std::vector<std::array<std::string, 3>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<std::string, 3> fields;
        std::size_t start = 0, field = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '\t') {
                if (field >= 3) {
                    throw ConfigError(path + ":" + std::to_string(lineno) +
                                      ": expected 3 tab-separated fields, got more");
                }
                fields[field++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (field != 3) {
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected 3 tab-separated fields, got " +
                              std::to_string(field));
        }
        out.push_back(std::move(fields));
    }
    return out;
}

std::uint64_t packed_key(std::uint64_t h, std::uint64_t r, std::uint64_t t,
                         std::uint64_t relation_count,
                         std::uint64_t entity_count) {
    return (h * relation_count + r) * entity_count + t;
}

}  // namespace

KnowledgeGraph build_from_labels(
    const std::vector<std::array<std::string, 3>>& train,
    const std::vector<std::array<std::string, 3>>& valid,
    const std::vector<std::array<std::string, 3>>& test) {
    if (train.empty()) throw ConfigError("train split is empty");

    KnowledgeGraph kg;
    Vocab entities, relations;

    std::unordered_set<Triple, TripleHash> seen;
    seen.reserve(train.size() * 2);
    for (const auto& t : train) {
        Triple triple{entities.get_or_add(t[0]), relations.get_or_add(t[1]),
                      entities.get_or_add(t[2])};
        if (!seen.insert(triple).second) {
            ++kg.stats.duplicate_train_dropped;
            continue;
        }
        kg.train.push_back(triple);
    }
    kg.entity_count = entities.labels.size();
    kg.relation_count = relations.labels.size();

    for (const auto* split : {&valid, &test}) {
        auto& dst = (split == &valid) ? kg.valid : kg.test;
        for (const auto& t : *split) {
            dst.push_back(Triple{entities.get_or_add(t[0]),
                                 relations.get_or_add(t[1]),
                                 entities.get_or_add(t[2])});
        }
    }
    kg.entity_labels = std::move(entities.labels);
    kg.relation_labels = std::move(relations.labels);
    return kg;
}

KnowledgeGraph load_tsv(const std::string& train_path,
                        const std::string& valid_path,
                        const std::string& test_path) {
    return build_from_labels(parse_tsv(train_path), parse_tsv(valid_path),
                             parse_tsv(test_path));
}

void filter_unseen(KnowledgeGraph& kg) {
    auto in_train_vocab = [&](const Triple& t) {
        return t.head < kg.entity_count && t.tail < kg.entity_count &&
               t.relation < kg.relation_count;
    };
    auto drop = [&](std::vector<Triple>& split, std::size_t& dropped) {
        const std::size_t before = split.size();
        std::erase_if(split, [&](const Triple& t) { return !in_train_vocab(t); });
        dropped += before - split.size();
    };
    drop(kg.valid, kg.stats.valid_dropped);
    drop(kg.test, kg.stats.test_dropped);
    kg.entity_labels.resize(kg.entity_count);
    kg.relation_labels.resize(kg.relation_count);
}

void build_adjacency(KnowledgeGraph& kg) {
    kg.adjacency.assign(kg.entity_count, {});
    kg.unique_relations.assign(kg.entity_count, {});
    for (const Triple& t : kg.train) {
        kg.adjacency[t.head].push_back({t.relation, Direction::Forward, t.tail});
        kg.adjacency[t.tail].push_back({t.relation, Direction::Reverse, t.head});
    }
    for (std::size_t e = 0; e < kg.entity_count; ++e) {
        auto& rels = kg.unique_relations[e];
        rels.reserve(kg.adjacency[e].size());
        for (const AdjEdge& edge : kg.adjacency[e]) rels.push_back(edge.relation);
        std::sort(rels.begin(), rels.end());
        rels.erase(std::unique(rels.begin(), rels.end()), rels.end());
    }
    kg.has_adjacency = true;
}

KnowledgeGraph synth_kg(std::uint64_t seed, std::uint32_t entity_count,
                        std::uint32_t relation_count,
                        std::uint64_t triple_count, double degree_skew) {
    if (entity_count == 0 || relation_count == 0)
        throw ConfigError("synth_kg: entity and relation counts must be positive");
    if (degree_skew < 0.0) throw ConfigError("synth_kg: degree_skew must be >= 0");
    const auto capacity = static_cast<unsigned __int128>(entity_count) *
                          entity_count * relation_count;
    if (capacity > (static_cast<unsigned __int128>(1) << 62))
        throw ConfigError("synth_kg: requested graph is too large");
    if (triple_count > static_cast<std::uint64_t>(capacity))
        throw ConfigError("synth_kg: triple_count exceeds entity^2 * relation capacity");

    auto rng = derived_rng(seed, Rs::SynthGraph);

    // Cumulative entity weights for skewed head/tail sampling.
    std::vector<double> cum;
    double total = 0.0;
    if (degree_skew > 0.0) {
        cum.resize(entity_count);
        for (std::uint32_t i = 0; i < entity_count; ++i) {
            total += std::pow(static_cast<double>(i + 1), -degree_skew);
            cum[i] = total;
        }
    }
    auto draw_entity = [&]() -> std::uint32_t {
        if (degree_skew == 0.0)
            return static_cast<std::uint32_t>(rng.below(entity_count));
        const double u = rng.unit() * total;
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        return static_cast<std::uint32_t>(
            std::min<std::ptrdiff_t>(it - cum.begin(), entity_count - 1));
    };

    std::vector<Triple> triples;
    triples.reserve(triple_count);
    const auto cap64 = static_cast<std::uint64_t>(capacity);
    if (cap64 <= 4'000'000 && triple_count * 2 > cap64) {
        // Dense request: enumerate and shuffle rather than reject forever.
        std::vector<Triple> all;
        all.reserve(cap64);
        for (std::uint32_t h = 0; h < entity_count; ++h)
            for (std::uint32_t r = 0; r < relation_count; ++r)
                for (std::uint32_t t = 0; t < entity_count; ++t)
                    all.push_back({h, r, t});
        shuffle(all, rng);
        triples.assign(all.begin(), all.begin() + triple_count);
    } else {
        std::unordered_set<std::uint64_t> seen;
        seen.reserve(triple_count * 2);
        while (triples.size() < triple_count) {
            const std::uint32_t h = draw_entity();
            const std::uint32_t t = draw_entity();
            const auto r = static_cast<std::uint32_t>(rng.below(relation_count));
            if (seen.insert(packed_key(h, r, t, relation_count, entity_count))
                    .second) {
                triples.push_back({h, r, t});
            }
        }
    }

    shuffle(triples, rng);
    const std::size_t n_valid = triple_count / 10;
    const std::size_t n_test = triple_count / 10;
    const std::size_t n_train = triple_count - n_valid - n_test;

    auto label_range = [&](std::size_t begin, std::size_t end) {
        std::vector<std::array<std::string, 3>> out;
        out.reserve(end - begin);
        char buf[32];
        for (std::size_t i = begin; i < end; ++i) {
            std::array<std::string, 3> row;
            std::snprintf(buf, sizeof buf, "e%u", triples[i].head);
            row[0] = buf;
            std::snprintf(buf, sizeof buf, "r%u", triples[i].relation);
            row[1] = buf;
            std::snprintf(buf, sizeof buf, "e%u", triples[i].tail);
            row[2] = buf;
            out.push_back(std::move(row));
        }
        return out;
    };

    KnowledgeGraph kg = build_from_labels(
        label_range(0, n_train), label_range(n_train, n_train + n_valid),
        label_range(n_train + n_valid, triple_count));
    filter_unseen(kg);
    return kg;
}

void save_tsv(const KnowledgeGraph& kg, const std::string& train_path,
              const std::string& valid_path, const std::string& test_path) {
    auto write = [&](const std::vector<Triple>& split, const std::string& path) {
        std::ofstream out(path);
        if (!out) throw ConfigError("cannot write triple file: " + path);
        for (const Triple& t : split) {
            out << kg.entity_labels[t.head] << '\t' << kg.relation_labels[t.relation]
                << '\t' << kg.entity_labels[t.tail] << '\n';
        }
    };
    write(kg.train, train_path);
    write(kg.valid, valid_path);
    write(kg.test, test_path);
}

std::uint64_t graph_checksum(const KnowledgeGraph& kg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 0x100000001b3ull;
        }
    };
    for (const auto* split : {&kg.train, &kg.valid, &kg.test}) {
        for (const Triple& t : *split) {
            mix(t.head);
            mix(t.relation);
            mix(t.tail);
        }
    }
    return h;
}

std::string graph_manifest(const KnowledgeGraph& kg) {
    std::ostringstream out;
    out << "kgq-graph v1\n";
    out << "entities=" << kg.entity_count << "\n";
    out << "relations=" << kg.relation_count << "\n";
    out << "train=" << kg.train.size() << "\n";
    out << "valid=" << kg.valid.size() << "\n";
    out << "test=" << kg.test.size() << "\n";
    out << "train_duplicates_dropped=" << kg.stats.duplicate_train_dropped << "\n";
    out << "valid_dropped=" << kg.stats.valid_dropped << "\n";
    out << "test_dropped=" << kg.stats.test_dropped << "\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(graph_checksum(kg)));
    out << "checksum=" << buf << "\n";
    return out.str();
}

}  // namespace kgq
