#include "bbal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "bbal/errors.hpp"

namespace bbal {

namespace {

double nearest_rank(const std::vector<double>& sorted, double p) {
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(p * n));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

}  // namespace

MetricSet metrics_from_errors(std::span<const double> abs_errors) {
    if (abs_errors.empty()) throw InputError("metrics: no errors to summarize");
    std::vector<double> sorted(abs_errors.begin(), abs_errors.end());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0, sum_sq = 0.0;
    for (double e : sorted) {
        sum += e;
        sum_sq += e * e;
    }
    const auto n = static_cast<double>(sorted.size());
    MetricSet m;
    m.mae = sum / n;
    m.rmse = std::sqrt(sum_sq / n);
    m.q95 = nearest_rank(sorted, 0.95);
    m.q99 = nearest_rank(sorted, 0.99);
    m.maxe = sorted.back();
    return m;
}

MetricSet compute_metrics(const RowMatrix& predictions, const Eigen::VectorXd& targets, EvaluationMode mode) {
    if (predictions.rows() != targets.size()) throw InputError("metrics: prediction and target counts differ");
    if (predictions.cols() < 1) throw InputError("metrics: no prediction columns");
    std::vector<double> errors(static_cast<std::size_t>(targets.size()));

    if (mode == EvaluationMode::ensemble_mean) {
        const Eigen::VectorXd mean = predictions.rowwise().mean();
        for (Eigen::Index i = 0; i < targets.size(); ++i) errors[static_cast<std::size_t>(i)] = std::abs(mean(i) - targets(i));
        return metrics_from_errors(errors);
    }

    MetricSet avg;
    for (Eigen::Index k = 0; k < predictions.cols(); ++k) {
        for (Eigen::Index i = 0; i < targets.size(); ++i)
            errors[static_cast<std::size_t>(i)] = std::abs(predictions(i, k) - targets(i));
        auto m = metrics_from_errors(errors);
        avg.mae += m.mae;
        avg.rmse += m.rmse;
        avg.q95 += m.q95;
        avg.q99 += m.q99;
        avg.maxe += m.maxe;
    }
    const auto k = static_cast<double>(predictions.cols());
    avg.mae /= k;
    avg.rmse /= k;
    avg.q95 /= k;
    avg.q99 /= k;
    avg.maxe /= k;
    return avg;
}

}  // namespace bbal
