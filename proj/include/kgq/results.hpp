#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Append-only results CSV shared by the train/eval/sweep commands.
// First line is a versioned header comment, second the column header:
//   # kgq-results v1
//   dataset,strategy,seed,mrr,hits10,params,effi

namespace kgq {

struct ResultRow {
    std::string dataset;
    std::string strategy;
    std::uint64_t seed = 0;
    double mrr = 0.0;
    double hits10 = 0.0;
    std::uint64_t params = 0;
    double effi = 0.0;
};

// Creates the file (with header) when missing, appends otherwise.
void append_result_row(const std::string& path, const ResultRow& row);

// Parses a file written by append_result_row; rejects unknown versions.
std::vector<ResultRow> read_result_rows(const std::string& path);

std::string format_result_row(const ResultRow& row);

}  // namespace kgq
