#include "kgq/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "kgq/rng.hpp"

namespace kgq {

std::vector<Segment> param_segments(ModelState& model) {
    return {
        {"table", model.table.data.data(), model.table.data.size()},
        {"w1", model.encoder.w1.data(), model.encoder.w1.size()},
        {"b1", model.encoder.b1.data(), model.encoder.b1.size()},
        {"w2", model.encoder.w2.data(), model.encoder.w2.size()},
        {"b2", model.encoder.b2.data(), model.encoder.b2.size()},
        {"phases", model.phases.data(), model.phases.size()},
    };
}

std::vector<ConstSegment> param_segments(const ModelState& model) {
    std::vector<ConstSegment> out;
    for (const Segment& s : param_segments(const_cast<ModelState&>(model)))
        out.push_back({s.name, s.data, s.size});
    return out;
}

std::size_t count_params(const ModelState& model) {
    std::size_t n = 0;
    for (const ConstSegment& s : param_segments(model)) n += s.size;
    return n;
}

ModelState init_model(std::uint64_t seed, std::uint32_t d,
                      std::uint32_t hidden, std::uint32_t l,
                      std::uint32_t relation_count) {
    if (relation_count < 1) throw Error("init_model: need >= 1 relation");
    ModelState m;
    m.d = d;
    m.relation_count = relation_count;
    auto [table, encoder] = init_params(seed, d, hidden, l);
    m.table = std::move(table);
    m.encoder = std::move(encoder);
    m.phases.resize(std::size_t(relation_count) * d);
    SplitMix64 rng = derived_rng(seed, Rs::PhaseInit, 0);
    for (double& p : m.phases)
        p = rng.range(-std::numbers::pi, std::numbers::pi);
    return m;
}

std::vector<double> encode_all(const ModelState& model,
                               const std::vector<EntityCode>& codes) {
    const std::size_t width = model.encoder.in_dim;
    std::vector<double> reps(codes.size() * width);
    EncodeScratch scratch;
    for (std::size_t e = 0; e < codes.size(); ++e)
        encode(codes[e], model.table, model.encoder, reps.data() + e * width,
               &scratch);
    return reps;
}

namespace {

void write_doubles(std::ostream& out, const double* data, std::size_t n) {
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::istream& in, double* data, std::size_t n,
                  const std::string& path) {
    in.read(reinterpret_cast<char*>(data),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double))
        throw ConfigError(path + ": truncated parameter block");
}

// Header lines up to and including "---"; returns key=value tokens.
std::vector<std::pair<std::string, std::string>> read_header(
    std::istream& in, const std::string& path, const std::string& magic) {
    std::string line;
    if (!std::getline(in, line) || line != magic)
        throw ConfigError(path + ": bad magic, expected '" + magic + "'");
    std::vector<std::pair<std::string, std::string>> kv;
    while (std::getline(in, line)) {
        if (line == "---") return kv;
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ": malformed header token '" + tok +
                                  "'");
            kv.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
        }
    }
    throw ConfigError(path + ": missing header terminator");
}

std::uint64_t header_u64(
    const std::vector<std::pair<std::string, std::string>>& kv,
    const std::string& key, const std::string& path) {
    for (const auto& [k, v] : kv)
        if (k == key) return std::stoull(v, nullptr, 0);
    throw ConfigError(path + ": header missing '" + key + "'");
}

}  // namespace

void save_checkpoint(const ModelState& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(path + ": cannot open for writing");
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(model.config_hash));
    out << "kgq-ckpt v1\n"
        << "d=" << model.d << " hidden=" << model.encoder.hidden
        << " l=" << model.table.rows << " relations=" << model.relation_count
        << "\n"
        << "config=0x" << hash << " params=" << count_params(model) << "\n"
        << "---\n";
    for (const ConstSegment& s : param_segments(model))
        write_doubles(out, s.data, s.size);
    if (!out) throw ConfigError(path + ": write failed");
}

ModelState load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open");
    const auto kv = read_header(in, path, "kgq-ckpt v1");
    ModelState m;
    m.d = static_cast<std::uint32_t>(header_u64(kv, "d", path));
    const auto hidden =
        static_cast<std::uint32_t>(header_u64(kv, "hidden", path));
    const auto l = static_cast<std::uint32_t>(header_u64(kv, "l", path));
    m.relation_count =
        static_cast<std::uint32_t>(header_u64(kv, "relations", path));
    m.config_hash = header_u64(kv, "config", path);

    m.table.rows = l;
    m.table.width = 2 * m.d;
    m.table.data.resize(std::size_t(l) * m.table.width);
    m.encoder.in_dim = 2 * m.d;
    m.encoder.hidden = hidden;
    m.encoder.w1.resize(std::size_t(hidden) * m.encoder.in_dim);
    m.encoder.b1.resize(hidden);
    m.encoder.w2.resize(std::size_t(m.encoder.in_dim) * hidden);
    m.encoder.b2.resize(m.encoder.in_dim);
    m.phases.resize(std::size_t(m.relation_count) * m.d);

    if (count_params(m) != header_u64(kv, "params", path))
        throw ConfigError(path + ": header param count mismatch");
    for (Segment& s : param_segments(m)) read_doubles(in, s.data, s.size, path);
    char extra;
    if (in.read(&extra, 1))
        throw ConfigError(path + ": trailing bytes after parameters");
    return m;
}

void save_opt_state(const OptState& opt, std::uint64_t config_hash,
                    const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(path + ": cannot open for writing");
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(config_hash));
    out << "kgq-opt v1\n"
        << "step=" << opt.step << " epochs=" << opt.epochs_done
        << " config=0x" << hash << " params=" << opt.m.size() << "\n"
        << "---\n";
    write_doubles(out, opt.m.data(), opt.m.size());
    write_doubles(out, opt.v.data(), opt.v.size());
    if (!out) throw ConfigError(path + ": write failed");
}

OptState load_opt_state(const std::string& path, std::uint64_t config_hash,
                        std::size_t param_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open");
    const auto kv = read_header(in, path, "kgq-opt v1");
    if (header_u64(kv, "config", path) != config_hash)
        throw ConfigError(path + ": optimizer state belongs to a different "
                          "config (hash mismatch); refusing to resume");
    if (header_u64(kv, "params", path) != param_count)
        throw ConfigError(path + ": optimizer state size mismatch");
    OptState opt;
    opt.step = header_u64(kv, "step", path);
    opt.epochs_done = static_cast<std::uint32_t>(header_u64(kv, "epochs", path));
    opt.m.resize(param_count);
    opt.v.resize(param_count);
    read_doubles(in, opt.m.data(), param_count, path);
    read_doubles(in, opt.v.data(), param_count, path);
    return opt;
}

}  // namespace kgq
