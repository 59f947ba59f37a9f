#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "kgq/analysis.hpp"
#include "kgq/config.hpp"
#include "kgq/eval.hpp"
#include "kgq/kernels.hpp"
#include "kgq/model.hpp"
#include "kgq/quantize.hpp"
#include "kgq/results.hpp"
#include "kgq/trainer.hpp"

// Command-line front end. Every command is a pure function of its config
// file, dataset files, and seeds: reruns reproduce outputs byte-for-byte.
// Exit codes: 0 success, 1 partial sweep failure, 2 usage/config error,
// 3 numerical abort.

namespace fs = std::filesystem;
using namespace kgq;

namespace {

// Sweep finished but some cells failed; maps to exit code 1.
struct PartialFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void apply_backend(const std::string& name) {
    using kernels::Backend;
    if (name == "auto") return;
    Backend b = Backend::Scalar;
    if (name == "avx2") b = Backend::Avx2;
    if (name == "neon") b = Backend::Neon;
    if (!kernels::force_backend(b))
        throw ConfigError("backend '" + name + "' is not available on this host");
}

Config load_config(const std::string& path,
                   const std::vector<std::string>& sets) {
    Config cfg = path.empty() ? Config() : Config::parse_file(path);
    for (const std::string& s : sets) cfg.set_from_assignment(s);
    return cfg;
}

KnowledgeGraph load_dataset(const Config& cfg) {
    if (cfg.has("dataset.train")) {
        KnowledgeGraph kg =
            load_tsv(cfg.require("dataset.train"), cfg.require("dataset.valid"),
                     cfg.require("dataset.test"));
        build_adjacency(kg);
        return kg;
    }
    if (cfg.has("dataset.synth_entities")) {
        KnowledgeGraph kg = synth_kg(
            cfg.get_u64("dataset.synth_seed", 0),
            static_cast<std::uint32_t>(cfg.get_u64("dataset.synth_entities", 0)),
            static_cast<std::uint32_t>(cfg.get_u64("dataset.synth_relations", 0)),
            cfg.get_u64("dataset.synth_triples", 0),
            cfg.get_double("dataset.synth_skew", 1.0));
        build_adjacency(kg);
        return kg;
    }
    throw ConfigError(
        "config: set dataset.train/valid/test paths or dataset.synth_* keys");
}

std::string dataset_name(const Config& cfg) {
    if (cfg.has("dataset.name")) return cfg.require("dataset.name");
    if (cfg.has("dataset.train")) {
        const fs::path parent = fs::path(cfg.require("dataset.train")).parent_path();
        const std::string n = parent.filename().string();
        return n.empty() ? "dataset" : n;
    }
    return "synth" + cfg.get("dataset.synth_seed", "0");
}

QuantConfig variant_quant_config(const std::string& variant) {
    QuantConfig qc;
    qc.relation_strategy = RelationStrategy::Connected;
    qc.anchor_strategy = AnchorStrategy::NearestPath;
    qc.weight_scheme = WeightScheme::EarlConnectivity;
    if (variant == "designed") {
    } else if (variant == "rsr") {
        qc.relation_strategy = RelationStrategy::Random;
    } else if (variant == "rsa") {
        qc.anchor_strategy = AnchorStrategy::Random;
    } else if (variant == "rsr_rsa") {
        qc.relation_strategy = RelationStrategy::Random;
        qc.anchor_strategy = AnchorStrategy::Random;
    } else if (variant == "rw") {
        qc.weight_scheme = WeightScheme::Random;
    } else if (variant == "ew") {
        qc.weight_scheme = WeightScheme::Equal;
    } else if (variant == "wo_anc") {
        qc.anchor_strategy = AnchorStrategy::None;
    } else if (variant == "wo_anc_rsr") {
        qc.anchor_strategy = AnchorStrategy::None;
        qc.relation_strategy = RelationStrategy::Random;
    } else if (variant == "wo_rel") {
        qc.relation_strategy = RelationStrategy::None;
    } else if (variant == "wo_rel_rsa") {
        qc.relation_strategy = RelationStrategy::None;
        qc.anchor_strategy = AnchorStrategy::Random;
    } else if (variant == "rq") {
        qc.abstract_mode = true;
        qc.weight_scheme = WeightScheme::Equal;
    } else {
        throw ConfigError("unknown quantization variant '" + variant + "'");
    }
    return qc;
}

const std::vector<std::string>& all_variants() {
    static const std::vector<std::string> v{
        "designed", "rsr",    "rsa",        "rsr_rsa", "rw",         "ew",
        "wo_anc",   "wo_anc_rsr", "wo_rel", "wo_rel_rsa", "rq"};
    return v;
}

QuantConfig quant_config_from(const Config& cfg, std::uint64_t seed) {
    QuantConfig qc = variant_quant_config(cfg.get("quantize.variant", "designed"));
    if (cfg.has("quantize.relation_strategy")) {
        const std::string v = cfg.require("quantize.relation_strategy");
        if (v == "connected") qc.relation_strategy = RelationStrategy::Connected;
        else if (v == "random") qc.relation_strategy = RelationStrategy::Random;
        else if (v == "none") qc.relation_strategy = RelationStrategy::None;
        else throw ConfigError("config: bad quantize.relation_strategy '" + v + "'");
    }
    if (cfg.has("quantize.anchor_strategy")) {
        const std::string v = cfg.require("quantize.anchor_strategy");
        if (v == "nearest") qc.anchor_strategy = AnchorStrategy::NearestPath;
        else if (v == "similarity") qc.anchor_strategy = AnchorStrategy::RelationSimilarity;
        else if (v == "random") qc.anchor_strategy = AnchorStrategy::Random;
        else if (v == "none") qc.anchor_strategy = AnchorStrategy::None;
        else throw ConfigError("config: bad quantize.anchor_strategy '" + v + "'");
    }
    if (cfg.has("quantize.weight_scheme")) {
        const std::string v = cfg.require("quantize.weight_scheme");
        if (v == "connectivity") qc.weight_scheme = WeightScheme::EarlConnectivity;
        else if (v == "random") qc.weight_scheme = WeightScheme::Random;
        else if (v == "equal") qc.weight_scheme = WeightScheme::Equal;
        else throw ConfigError("config: bad quantize.weight_scheme '" + v + "'");
    }
    if (cfg.has("quantize.abstract"))
        qc.abstract_mode = cfg.get_bool("quantize.abstract", false);
    const std::string sel = cfg.get("quantize.anchor_selection", "degree");
    if (sel == "degree") qc.anchor_selection = AnchorSelection::Degree;
    else if (sel == "ppr") qc.anchor_selection = AnchorSelection::Ppr;
    else if (sel == "sample") qc.anchor_selection = AnchorSelection::UniformSample;
    else if (sel == "fraction") qc.anchor_selection = AnchorSelection::FractionSample;
    else throw ConfigError("config: bad quantize.anchor_selection '" + sel + "'");
    qc.max_relations =
        static_cast<std::uint32_t>(cfg.get_u64("quantize.max_relations", 0));
    qc.anchors_per_entity =
        static_cast<std::uint32_t>(cfg.get_u64("quantize.anchors_per_entity", 5));
    qc.anchor_count_or_fraction = cfg.get_double("quantize.anchors", 10.0);
    qc.ppr_damping = cfg.get_double("quantize.ppr_damping", 0.85);
    qc.ppr_iterations =
        static_cast<std::uint32_t>(cfg.get_u64("quantize.ppr_iterations", 50));
    qc.seed = cfg.has("quantize.seed") ? cfg.get_u64("quantize.seed", 0) : seed;
    return qc;
}

TrainConfig train_config_from(const Config& cfg, std::uint64_t seed) {
    TrainConfig tc;
    tc.learning_rate = cfg.get_double("train.learning_rate", 1e-3);
    tc.batch_size =
        static_cast<std::uint32_t>(cfg.get_u64("train.batch_size", 128));
    tc.epochs = static_cast<std::uint32_t>(cfg.get_u64("train.epochs", 100));
    const std::string kind = cfg.get("train.loss", "nssal");
    if (kind == "bce") tc.loss.kind = LossKind::Bce;
    else if (kind == "nssal") tc.loss.kind = LossKind::Nssal;
    else throw ConfigError("config: train.loss must be bce or nssal, got '" +
                           kind + "'");
    tc.loss.gamma = cfg.get_double("train.gamma", 6.0);
    tc.loss.alpha = cfg.get_double("train.alpha", 1.0);
    tc.loss.negatives_per_positive =
        static_cast<std::uint32_t>(cfg.get_u64("train.negatives", 8));
    tc.beta1 = cfg.get_double("train.beta1", 0.9);
    tc.beta2 = cfg.get_double("train.beta2", 0.999);
    tc.epsilon = cfg.get_double("train.epsilon", 1e-8);
    tc.eval_every =
        static_cast<std::uint32_t>(cfg.get_u64("train.eval_every", 0));
    tc.d = static_cast<std::uint32_t>(cfg.get_u64("model.dim", 32));
    tc.hidden = static_cast<std::uint32_t>(cfg.get_u64("model.hidden", 64));
    tc.seed = seed;
    return tc;
}

std::vector<std::uint64_t> seeds_from(const Config& cfg) {
    return cfg.get_u64_list("train.seeds", {cfg.get_u64("train.seed", 0)});
}

std::string report_line(const RankingReport& rep) {
    std::ostringstream out;
    out << "mrr=" << rep.mrr;
    for (const auto& [n, frac] : rep.hits_at)
        out << " hits@" << n << "=" << frac;
    out << " queries=" << rep.query_count << " params=" << rep.param_count
        << " effi=" << rep.effi;
    return out.str();
}

// One (config, seed) training cell: train, checkpoint, evaluate test with
// the best-validation model, return the CSV row.
struct RunOutput {
    ResultRow row;
    std::string final_ckpt;
    std::string best_ckpt;
};

RunOutput run_training(const Config& cfg, const KnowledgeGraph& kg,
                       const std::vector<EntityCode>& codes, std::uint32_t l,
                       std::uint64_t seed, const fs::path& out_dir,
                       const std::string& strategy,
                       const std::string& dataset) {
    TrainConfig tc = train_config_from(cfg, seed);
    Config run_cfg = cfg;
    run_cfg.set("run.seed", std::to_string(seed));
    const std::uint64_t run_hash = run_cfg.hash();

    fs::create_directories(out_dir);
    const std::string tag = "seed" + std::to_string(seed);
    std::ofstream log(out_dir / ("train_" + tag + ".log"));

    TrainResult tr = train(kg, codes, l, tc, run_hash, &log);
    RunOutput out;
    out.final_ckpt = (out_dir / ("ckpt_" + tag + ".bin")).string();
    out.best_ckpt = (out_dir / ("ckpt_" + tag + "_best.bin")).string();
    save_checkpoint(tr.model, out.final_ckpt);
    save_opt_state(tr.opt, run_hash, out.final_ckpt + ".opt");
    save_checkpoint(tr.best_model, out.best_ckpt);

    const RankingReport rep = evaluate(tr.best_model, codes, kg, Split::Test);
    out.row = ResultRow{dataset,       strategy,        seed,    rep.mrr,
                        rep.hits_at.at(10), rep.param_count, rep.effi};
    return out;
}

void write_analysis_csv(
    const std::string& path,
    const std::vector<std::tuple<std::string, double, std::uint64_t>>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError(path + ": cannot write");
    out << "# kgq-analysis v1\nkey,value,seed\n";
    for (const auto& [key, value, seed] : rows) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, value);
        out << key << ',' << std::string_view(buf, res.ptr) << ',' << seed
            << "\n";
    }
    if (!out) throw ConfigError(path + ": write failed");
}

// --- subcommand bodies -------------------------------------------------

void cmd_synth(const Config& cfg, const std::string& out_dir) {
    const KnowledgeGraph kg = load_dataset(cfg);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    save_tsv(kg, (dir / "train.tsv").string(), (dir / "valid.tsv").string(),
             (dir / "test.tsv").string());
    std::ofstream manifest(dir / "manifest.txt");
    manifest << graph_manifest(kg);
    Config eff = cfg;
    eff.write_file((dir / "effective.ini").string());
    std::cout << graph_manifest(kg);
}

void cmd_quantize(const Config& cfg, const std::string& out_path) {
    KnowledgeGraph kg = load_dataset(cfg);
    const QuantConfig qc = quant_config_from(cfg, cfg.get_u64("seed", 0));
    const QuantResult qr = quantize_all(kg, qc);
    write_code_dump_file(out_path, qr.codes, qr.l, qr.m, qr.n, cfg.hash());
    Config eff = cfg;
    eff.write_file(out_path + ".effective.ini");
    std::cout << "wrote " << qr.codes.size() << " codes to " << out_path
              << " (l=" << qr.l << " m=" << qr.m << " n=" << qr.n
              << " mean_rel_matches=" << qr.mean_relation_matches << ")\n";
}

void cmd_train(const Config& cfg, const std::string& codes_path,
               const std::string& out_dir, const std::string& csv_override,
               const std::string& resume_ckpt) {
    const KnowledgeGraph kg = load_dataset(cfg);
    const CodeDump dump = read_code_dump_file(codes_path);
    if (dump.codes.size() != kg.entity_count)
        throw ConfigError(codes_path + ": dump has " +
                          std::to_string(dump.codes.size()) +
                          " codes but the dataset has " +
                          std::to_string(kg.entity_count) + " entities");
    const std::string dataset = dataset_name(cfg);
    const std::string strategy = cfg.get("quantize.variant", "custom");
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    Config eff = cfg;
    eff.write_file((dir / "effective.ini").string());
    const std::string csv =
        csv_override.empty() ? (dir / "results.csv").string() : csv_override;

    if (!resume_ckpt.empty()) {
        const std::uint64_t seed = seeds_from(cfg).front();
        TrainConfig tc = train_config_from(cfg, seed);
        Config run_cfg = cfg;
        run_cfg.set("run.seed", std::to_string(seed));
        const std::string tag = "seed" + std::to_string(seed);
        std::ofstream log(dir / ("train_" + tag + ".log"), std::ios::app);
        TrainResult tr = resume_train(kg, dump.codes, tc, run_cfg.hash(),
                                      resume_ckpt, &log);
        const std::string ckpt = (dir / ("ckpt_" + tag + ".bin")).string();
        save_checkpoint(tr.model, ckpt);
        save_opt_state(tr.opt, run_cfg.hash(), ckpt + ".opt");
        save_checkpoint(tr.best_model,
                        (dir / ("ckpt_" + tag + "_best.bin")).string());
        const RankingReport rep =
            evaluate(tr.best_model, dump.codes, kg, Split::Test);
        append_result_row(csv, ResultRow{dataset, strategy, seed, rep.mrr,
                                         rep.hits_at.at(10), rep.param_count,
                                         rep.effi});
        std::cout << "seed=" << seed << " " << report_line(rep) << "\n";
        return;
    }

    for (const std::uint64_t seed : seeds_from(cfg)) {
        const RunOutput ro = run_training(cfg, kg, dump.codes, dump.l, seed,
                                          dir, strategy, dataset);
        append_result_row(csv, ro.row);
        std::cout << "seed=" << seed << " test_mrr=" << ro.row.mrr
                  << " hits@10=" << ro.row.hits10 << " params=" << ro.row.params
                  << " effi=" << ro.row.effi << "\n";
    }
}

void cmd_eval(const Config& cfg, const std::string& ckpt_path,
              const std::string& codes_path, const std::string& split_name,
              const std::string& csv_path, std::uint64_t seed) {
    const KnowledgeGraph kg = load_dataset(cfg);
    const CodeDump dump = read_code_dump_file(codes_path);
    const ModelState model = load_checkpoint(ckpt_path);
    if (model.table.rows != dump.l)
        throw ConfigError(ckpt_path + ": table has " +
                          std::to_string(model.table.rows) +
                          " rows but the code dump declares l=" +
                          std::to_string(dump.l));
    if (dump.codes.size() != kg.entity_count)
        throw ConfigError(codes_path + ": dump does not cover the entity set");
    Split split = Split::Test;
    if (split_name == "valid") split = Split::Valid;
    else if (split_name == "train") split = Split::Train;
    else if (split_name != "test")
        throw ConfigError("--split must be train, valid, or test");
    const RankingReport rep = evaluate(model, dump.codes, kg, split);
    std::cout << report_line(rep) << "\n";
    if (!csv_path.empty())
        append_result_row(csv_path,
                          ResultRow{dataset_name(cfg),
                                    cfg.get("quantize.variant", "custom"), seed,
                                    rep.mrr, rep.hits_at.at(10),
                                    rep.param_count, rep.effi});
}

void cmd_analyze(const std::string& codes_path, const std::string& mode,
                 const std::string& out_csv, std::vector<std::uint32_t> ks,
                 std::uint32_t steps, std::uint64_t seed, std::uint32_t trials,
                 std::uint32_t cardinality, std::uint32_t sample_size) {
    const CodeDump dump = read_code_dump_file(codes_path);
    std::vector<std::tuple<std::string, double, std::uint64_t>> rows;

    if (mode == "entropy") {
        const CodeDistribution dist = code_distribution(dump.codes);
        const double h = entropy_bits(dist.frequencies);
        std::cout << "entropy_bits=" << h << " distinct=" << dist.distinct
                  << " total=" << dist.total << "\n";
        rows.emplace_back("entropy", h, seed);
    } else if (mode == "uniqueness") {
        const double p = uniqueness_probability(
            dump.l, static_cast<std::uint64_t>(dump.codes.size()));
        std::cout << "p_unique=" << p << " (l=" << dump.l
                  << ", entities=" << dump.codes.size() << ")\n";
        rows.emplace_back("uniqueness", p, seed);
        if (trials > 0) {
            std::uint32_t card = cardinality;
            if (card == 0) {
                double mean = 0.0;
                for (const EntityCode& c : dump.codes)
                    mean += static_cast<double>(c.matched.size());
                card = static_cast<std::uint32_t>(std::nearbyint(
                    mean / static_cast<double>(dump.codes.size())));
            }
            const double emp = empirical_uniqueness(
                dump.l, static_cast<std::uint32_t>(dump.codes.size()), card,
                trials, seed);
            std::cout << "empirical=" << emp << " (cardinality=" << card
                      << ", trials=" << trials << ")\n";
            rows.emplace_back("empirical", emp, seed);
        }
    } else if (mode == "degrade-sweep") {
        for (std::uint32_t i = 0; i <= steps; ++i) {
            const double f =
                static_cast<double>(i) / static_cast<double>(steps);
            const DegradeResult dr = degrade_codes(dump.codes, f, seed);
            std::cout << "fraction=" << f << " entropy_bits=" << dr.entropy
                      << "\n";
            char buf[32];
            const auto res = std::to_chars(buf, buf + sizeof buf, f);
            rows.emplace_back(std::string(buf, res.ptr), dr.entropy, seed);
        }
    } else if (mode == "jaccard-knn") {
        if (ks.empty()) ks = {1, 10};
        JkCurve curve;
        std::vector<double> ci;
        if (dump.codes.size() > 20000) {
            curve = knn_jaccard_sampled(dump.codes, ks, sample_size, seed, &ci);
            std::cout << "sampled (n=" << sample_size << ")\n";
        } else {
            curve = knn_jaccard(dump.codes, ks);
        }
        for (std::size_t i = 0; i < curve.points.size(); ++i) {
            const auto& [k, jk] = curve.points[i];
            std::cout << "k=" << k << " jk=" << jk;
            if (!ci.empty()) std::cout << " ci95=" << ci[i];
            std::cout << "\n";
            rows.emplace_back("k" + std::to_string(k), jk, seed);
        }
    } else {
        throw ConfigError("--mode must be entropy, uniqueness, degrade-sweep, "
                          "or jaccard-knn");
    }
    if (!out_csv.empty()) write_analysis_csv(out_csv, rows);
}

void cmd_sweep(const Config& base, const std::string& out_dir,
               std::vector<std::string> variants,
               std::vector<std::uint64_t> seeds, bool parallel) {
    if (variants.empty()) variants = all_variants();
    if (seeds.empty()) seeds = seeds_from(base);
    const KnowledgeGraph kg = load_dataset(base);
    const std::string dataset = dataset_name(base);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    Config eff = base;
    eff.write_file((dir / "effective.ini").string());

    struct Cell {
        std::string variant;
        std::uint64_t seed = 0;
        ResultRow row;
        bool ok = false;
        std::string error;
    };
    std::vector<Cell> cells;
    for (const std::string& v : variants)
        for (const std::uint64_t s : seeds) cells.push_back({v, s, {}, false, ""});

    auto run_cell = [&](Cell& cell) {
        try {
            Config cfg = base;
            cfg.set("quantize.variant", cell.variant);
            const QuantConfig qc = quant_config_from(cfg, cell.seed);
            const QuantResult qr = quantize_all(kg, qc);
            const fs::path cell_dir =
                dir / (cell.variant + "_seed" + std::to_string(cell.seed));
            fs::create_directories(cell_dir);
            write_code_dump_file((cell_dir / "codes.txt").string(), qr.codes,
                                 qr.l, qr.m, qr.n, cfg.hash());
            const RunOutput ro = run_training(cfg, kg, qr.codes, qr.l,
                                              cell.seed, cell_dir,
                                              cell.variant, dataset);
            cell.row = ro.row;
            cell.ok = true;
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    };

    if (parallel) {
        std::atomic<std::size_t> next{0};
        const std::size_t workers = std::min<std::size_t>(
            cells.size(),
            std::max(1u, std::thread::hardware_concurrency()));
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < cells.size();
                     i = next.fetch_add(1))
                    run_cell(cells[i]);
            });
        for (std::thread& t : pool) t.join();
    } else {
        for (Cell& cell : cells) run_cell(cell);
    }

    // Per-run rows in deterministic (variant, seed) order.
    const std::string csv = (dir / "results.csv").string();
    for (const Cell& cell : cells)
        if (cell.ok) append_result_row(csv, cell.row);

    // Aggregate per variant.
    std::ostringstream md;
    md << "| variant | seeds ok | mean MRR | mean Hits@10 | params | mean Effi | status |\n"
       << "|---|---|---|---|---|---|---|\n";
    std::ofstream agg(dir / "summary.csv");
    agg << "variant,seeds_ok,mean_mrr,mean_hits10,params,mean_effi,status\n";
    bool any_failed = false;
    for (const std::string& v : variants) {
        double mrr = 0.0, hits = 0.0, effi = 0.0;
        std::uint64_t params = 0;
        std::size_t ok = 0, total = 0;
        for (const Cell& cell : cells) {
            if (cell.variant != v) continue;
            ++total;
            if (!cell.ok) continue;
            ++ok;
            mrr += cell.row.mrr;
            hits += cell.row.hits10;
            effi += cell.row.effi;
            params = cell.row.params;
        }
        const bool complete = ok == total;
        any_failed |= !complete;
        const double denom = ok ? static_cast<double>(ok) : 1.0;
        const std::string status = complete ? "complete" : "incomplete";
        md << "| " << v << " | " << ok << "/" << total << " | " << mrr / denom
           << " | " << hits / denom << " | " << params << " | " << effi / denom
           << " | " << status << " |\n";
        agg << v << ',' << ok << '/' << total << ',' << mrr / denom << ','
            << hits / denom << ',' << params << ',' << effi / denom << ','
            << status << "\n";
    }
    std::ofstream(dir / "summary.md") << md.str();
    std::cout << md.str();

    if (any_failed) {
        std::string msg = "sweep finished with failures:";
        for (const Cell& cell : cells)
            if (!cell.ok)
                msg += "\n  " + cell.variant + " seed " +
                       std::to_string(cell.seed) + ": " + cell.error;
        throw PartialFailure(msg);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compositional knowledge-graph representation toolkit"};
    app.require_subcommand(1);
    std::string backend = "auto";
    app.add_option("--backend", backend,
                   "force a kernel backend (auto, scalar, avx2, neon)")
        ->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));

    std::string config_path, out_path, codes_path, ckpt_path, csv_path;
    std::string split_name = "test", mode, resume_ckpt;
    std::vector<std::string> sets, variants;
    std::vector<std::uint64_t> seeds;
    std::vector<std::uint32_t> ks;
    std::uint64_t seed = 0;
    std::uint32_t steps = 10, trials = 0, cardinality = 0, sample_size = 2000;
    bool parallel = false;

    auto add_config = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("--config", config_path, "config file");
        if (required) opt->required();
        sub->add_option("--set", sets,
                        "override a config value (section.key=value)");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_config(synth, false);
    synth->add_option("--out", out_path, "output directory")->required();
    synth->add_option("--seed", seed, "synthesis seed (sets dataset.synth_seed)");
    synth->callback([&] {
        apply_backend(backend);
        Config cfg = load_config(config_path, sets);
        if (synth->count("--seed"))
            cfg.set("dataset.synth_seed", std::to_string(seed));
        cmd_synth(cfg, out_path);
    });

    CLI::App* quantize = app.add_subcommand("quantize", "assign entity codes");
    add_config(quantize, true);
    quantize->add_option("--out", out_path, "code dump path")->required();
    quantize->callback([&] {
        apply_backend(backend);
        cmd_quantize(load_config(config_path, sets), out_path);
    });

    CLI::App* train = app.add_subcommand("train", "train a model per seed");
    add_config(train, true);
    train->add_option("--codes", codes_path, "code dump path")->required();
    train->add_option("--out", out_path, "output directory")->required();
    train->add_option("--csv", csv_path, "results CSV (default <out>/results.csv)");
    train->add_option("--resume", resume_ckpt, "continue from a checkpoint");
    train->callback([&] {
        apply_backend(backend);
        cmd_train(load_config(config_path, sets), codes_path, out_path,
                  csv_path, resume_ckpt);
    });

    CLI::App* eval = app.add_subcommand("eval", "filtered-ranking evaluation");
    add_config(eval, true);
    eval->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    eval->add_option("--codes", codes_path, "code dump path")->required();
    eval->add_option("--split", split_name, "train, valid, or test");
    eval->add_option("--csv", csv_path, "append a results row here");
    eval->add_option("--seed", seed, "seed recorded in the CSV row");
    eval->callback([&] {
        apply_backend(backend);
        cmd_eval(load_config(config_path, sets), ckpt_path, codes_path,
                 split_name, csv_path, seed);
    });

    CLI::App* analyze = app.add_subcommand("analyze", "code diagnostics");
    analyze->add_option("--codes", codes_path, "code dump path")->required();
    analyze->add_option("--mode", mode,
                        "entropy, uniqueness, degrade-sweep, or jaccard-knn")
        ->required();
    analyze->add_option("--out", out_path, "CSV output path");
    analyze->add_option("--k", ks, "k values for jaccard-knn");
    analyze->add_option("--steps", steps, "fraction steps for degrade-sweep");
    analyze->add_option("--seed", seed, "seed for seeded modes");
    analyze->add_option("--trials", trials, "empirical uniqueness trials");
    analyze->add_option("--cardinality", cardinality,
                        "code cardinality for empirical uniqueness");
    analyze->add_option("--sample", sample_size,
                        "entity sample size for large jaccard-knn");
    analyze->callback([&] {
        apply_backend(backend);
        cmd_analyze(codes_path, mode, out_path, ks, steps, seed, trials,
                    cardinality, sample_size);
    });

    CLI::App* sweep = app.add_subcommand("sweep", "variant x seed matrix");
    add_config(sweep, true);
    sweep->add_option("--out", out_path, "output directory")->required();
    sweep->add_option("--variants", variants, "variant names (default: all)");
    sweep->add_option("--seeds", seeds, "seed list (default: train.seeds)");
    sweep->add_flag("--parallel", parallel, "run cells concurrently");
    sweep->callback([&] {
        apply_backend(backend);
        cmd_sweep(load_config(config_path, sets), out_path, variants, seeds,
                  parallel);
    });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const PartialFailure& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
