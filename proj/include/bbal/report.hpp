#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bbal {

struct ResultRow {
    std::string method;
    std::size_t trial = 0;
    std::size_t round = 0;
    std::size_t n_train = 0;
    std::string metric;
    double value = 0.0;
    double seconds = 0.0;
};

/// Reads the long-format results CSV written by emit_results.
std::vector<ResultRow> parse_results_csv(std::string_view text);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

/// Per-method mean +- standard error of final-round metrics across trials, followed by the
/// mean log-RMSE learning curve (arithmetic mean of per-trial log RMSE). "no records" if empty.
std::string format_report(const std::vector<ResultRow>& rows);

/// Mean log-RMSE versus labeled-set size, one polyline per method.
std::string format_report_svg(const std::vector<ResultRow>& rows);

}  // namespace bbal
