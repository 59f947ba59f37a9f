#include "kgq/results.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <sys/stat.h>

#include "kgq/error.hpp"

namespace kgq {

namespace {

constexpr const char* kVersionLine = "# kgq-results v1";
constexpr const char* kHeaderLine = "dataset,strategy,seed,mrr,hits10,params,effi";

std::string format_double(double v) {
    // Shortest round-trip representation, locale-independent.
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("results: double format failure");
    return std::string(buf, ptr);
}

double parse_double(const std::string& s, const std::string& path) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError(path + ": bad numeric field '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& path) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError(path + ": bad integer field '" + s + "'");
    return v;
}

bool file_exists(const std::string& path) {
    struct stat st {};
    return ::stat(path.c_str(), &st) == 0;
}

}  // namespace

std::string format_result_row(const ResultRow& row) {
    std::ostringstream out;
    out << row.dataset << ',' << row.strategy << ',' << row.seed << ','
        << format_double(row.mrr) << ',' << format_double(row.hits10) << ','
        << row.params << ',' << format_double(row.effi);
    return out.str();
}

void append_result_row(const std::string& path, const ResultRow& row) {
    if (row.dataset.find(',') != std::string::npos ||
        row.strategy.find(',') != std::string::npos)
        throw ConfigError("results: dataset/strategy must not contain commas");
    const bool fresh = !file_exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw ConfigError(path + ": cannot open results file");
    if (fresh) out << kVersionLine << "\n" << kHeaderLine << "\n";
    out << format_result_row(row) << "\n";
    if (!out) throw ConfigError(path + ": write failed");
}

std::vector<ResultRow> read_result_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open results file");
    std::string line;
    if (!std::getline(in, line) || line != kVersionLine)
        throw ConfigError(path + ": unknown results version");
    if (!std::getline(in, line) || line != kHeaderLine)
        throw ConfigError(path + ": missing column header");
    std::vector<ResultRow> rows;
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 7)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected 7 fields");
        ResultRow row;
        row.dataset = fields[0];
        row.strategy = fields[1];
        row.seed = parse_u64(fields[2], path);
        row.mrr = parse_double(fields[3], path);
        row.hits10 = parse_double(fields[4], path);
        row.params = parse_u64(fields[5], path);
        row.effi = parse_double(fields[6], path);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace kgq
