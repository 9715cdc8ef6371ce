#pragma once

#include <array>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "bbal/prediction_matrix.hpp"

namespace bbal {

struct MetricSet {
    double mae = 0.0;
    double rmse = 0.0;
    double q95 = 0.0;
    double q99 = 0.0;
    double maxe = 0.0;

    /// Values in the order of metric_names().
    std::array<double, 5> values() const { return {mae, maxe, rmse, q95, q99}; }
};

/// Sorted lexicographically, the order used in results files.
constexpr std::array<std::string_view, 5> metric_names() { return {"MAE", "MAXE", "RMSE", "q95", "q99"}; }

enum class EvaluationMode {
    /// Metrics per ensemble member, then averaged over members.
    per_member,
    /// Metrics of the ensemble-mean prediction.
    ensemble_mean,
};

/// Metrics over absolute errors; quantiles use the nearest-rank definition
/// (the ceil(p n)-th smallest error). Throws InputError on empty input.
MetricSet metrics_from_errors(std::span<const double> abs_errors);

/// `predictions` is N x K (one column per member), `targets` has N entries.
MetricSet compute_metrics(const RowMatrix& predictions, const Eigen::VectorXd& targets,
                          EvaluationMode mode = EvaluationMode::per_member);

}  // namespace bbal
