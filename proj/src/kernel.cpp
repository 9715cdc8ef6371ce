#include "bbal/kernel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bbal/errors.hpp"

namespace bbal {

NoiseModel::NoiseModel(double sigma) : sigma_(sigma) {
    if (!std::isfinite(sigma) || sigma <= 0.0)
        throw InputError("noise sigma must be finite and positive, got " + std::to_string(sigma));
}

FeatureMap::FeatureMap(std::vector<PointId> ids, RowMatrix rows) : index_(std::move(ids)), rows_(std::move(rows)) {
    if (static_cast<Eigen::Index>(index_.size()) != rows_.rows())
        throw InputError("feature map: id count does not match row count");
}

FeatureMap center_predictions(const PredictionMatrix& predictions) {
    const auto& mu = predictions.values();
    for (Eigen::Index i = 0; i < mu.rows(); ++i)
        for (Eigen::Index k = 0; k < mu.cols(); ++k)
            if (!std::isfinite(mu(i, k)))
                throw InputError("non-finite prediction at (" + std::to_string(i) + ", " + std::to_string(k) + ")");

    const double scale = 1.0 / std::sqrt(static_cast<double>(mu.cols()));
    RowMatrix phi(mu.rows(), mu.cols());
    for (Eigen::Index i = 0; i < mu.rows(); ++i) {
        // Shifted mean: exact for constant rows, so they get exactly zero features.
        double shift = 0.0;
        for (Eigen::Index k = 0; k < mu.cols(); ++k) shift += mu(i, k) - mu(i, 0);
        const double mean = mu(i, 0) + shift / static_cast<double>(mu.cols());
        for (Eigen::Index k = 0; k < mu.cols(); ++k) phi(i, k) = (mu(i, k) - mean) * scale;
    }
    return FeatureMap({predictions.ids().begin(), predictions.ids().end()}, std::move(phi));
}

KernelState::KernelState(FeatureMap base, NoiseModel noise)
    : KernelState(std::make_shared<const FeatureMap>(std::move(base)), noise) {}

KernelState::KernelState(std::shared_ptr<const FeatureMap> base, NoiseModel noise)
    : base_(std::move(base)), noise_(noise) {
    const auto d = base_->dimension();
    precision_ = std::make_shared<const Eigen::MatrixXd>(Eigen::MatrixXd::Identity(d, d));
    whitened_ = std::make_shared<const RowMatrix>(base_->rows());
}

KernelState::KernelState(std::shared_ptr<const FeatureMap> base, NoiseModel noise,
                         std::shared_ptr<const Eigen::MatrixXd> precision,
                         std::shared_ptr<const RowMatrix> whitened, std::vector<PointId> conditioned)
    : base_(std::move(base)),
      noise_(noise),
      precision_(std::move(precision)),
      whitened_(std::move(whitened)),
      conditioned_(std::move(conditioned)) {}

double KernelState::kernel_value(PointId i, PointId j) const {
    return kernel_at(row_of(i), row_of(j));
}

double KernelState::observation_covariance(PointId i, PointId j) const {
    double k = kernel_value(i, j);
    return i == j ? k + noise_.variance() : k;
}

KernelState KernelState::condition_on(PointId i) const {
    return condition_on_row(row_of(i));
}

KernelState KernelState::condition_on(std::span<const PointId> ids) const {
    KernelState state = *this;
    for (auto id : ids) state = state.condition_on(id);
    return state;
}

KernelState KernelState::condition_on_row(Eigen::Index row) const {
    const Eigen::RowVectorXd phi = base_->rows().row(row);
    auto precision = std::make_shared<Eigen::MatrixXd>(*precision_);
    precision->noalias() += phi.transpose() * phi / noise_.variance();

    std::vector<PointId> conditioned = conditioned_;
    conditioned.push_back(base_->ids()[static_cast<std::size_t>(row)]);

    // In whitened coordinates the update is psi <- psi (I - beta u u^T) with
    // u = psi_row / |psi_row| and (1 - beta)^2 = sigma^2 / (s + sigma^2).
    const Eigen::RowVectorXd psi = whitened_->row(row);
    const double s = variance_at(row);
    if (s == 0.0)
        return KernelState(base_, noise_, std::move(precision), whitened_, std::move(conditioned));

    const Eigen::RowVectorXd u = psi / std::sqrt(s);
    const double beta = 1.0 - noise_.sigma() / std::sqrt(s + noise_.variance());
    auto whitened = std::make_shared<RowMatrix>(*whitened_);
    const auto d = whitened_->cols();
    for (Eigen::Index r = 0; r < whitened->rows(); ++r) {
        const double projection = beta * sequential_dot(whitened_->row(r).data(), u.data(), d);
        if (projection != 0.0) whitened->row(r) -= projection * u;
    }
    return KernelState(base_, noise_, std::move(precision), std::move(whitened), std::move(conditioned));
}

double KernelState::distance2_at(Eigen::Index a, Eigen::Index b) const {
    const double* pa = whitened_->row(a).data();
    const double* pb = whitened_->row(b).data();
    double s = 0.0;
    for (Eigen::Index i = 0; i < whitened_->cols(); ++i) s += (pa[i] - pb[i]) * (pa[i] - pb[i]);
    return s;
}

Eigen::MatrixXd KernelState::gram(std::span<const PointId> ids) const {
    const auto n = static_cast<Eigen::Index>(ids.size());
    RowMatrix rows(n, whitened_->cols());
    for (Eigen::Index r = 0; r < n; ++r) rows.row(r) = whitened_->row(row_of(ids[static_cast<std::size_t>(r)]));
    Eigen::MatrixXd g = rows * rows.transpose();
    return (g + g.transpose()) / 2.0;
}

double logdet_spd(const Eigen::MatrixXd& matrix) {
    Eigen::LLT<Eigen::MatrixXd> llt(matrix);
    if (llt.info() != Eigen::Success) {
        const auto n = matrix.rows();
        Eigen::MatrixXd jittered = matrix;
        jittered.diagonal().array() += 1e-10 * matrix.trace() / static_cast<double>(n);
        llt.compute(jittered);
        if (llt.info() != Eigen::Success) throw Error("logdet_spd: matrix is not positive definite");
    }
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double joint_entropy(const KernelState& state, std::span<const PointId> subset) {
    if (subset.empty()) return 0.0;
    const double n = static_cast<double>(subset.size());
    Eigen::MatrixXd cov = state.gram(subset);
    cov.diagonal().array() += state.noise().variance();
    return 0.5 * logdet_spd(cov) + 0.5 * n * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

double batch_mutual_information(const KernelState& state, std::span<const PointId> subset) {
    if (subset.empty()) return 0.0;
    Eigen::MatrixXd scaled = state.gram(subset) / state.noise().variance();
    scaled.diagonal().array() += 1.0;
    return std::max(0.0, 0.5 * logdet_spd(scaled));
}

double bald_score(const KernelState& state, PointId i) {
    return 0.5 * std::log1p(state.kernel_value(i, i) / state.noise().variance());
}

MultinomialHypothesis::MultinomialHypothesis(Eigen::VectorXd weights) : weights_(std::move(weights)) {
    if (weights_.size() < 1) throw InputError("multinomial hypothesis needs at least one weight");
    for (double q : weights_)
        if (!std::isfinite(q) || q < 0.0) throw InputError("multinomial weights must be finite and non-negative");
    if (std::abs(weights_.sum() - 1.0) > 1e-12) throw InputError("multinomial weights must sum to 1");
}

MultinomialHypothesis MultinomialHypothesis::uniform(Eigen::Index members) {
    return MultinomialHypothesis(Eigen::VectorXd::Constant(members, 1.0 / static_cast<double>(members)));
}

Eigen::MatrixXd multinomial_posterior_gradient_kernel(const PredictionMatrix& predictions,
                                                      const MultinomialHypothesis& hypothesis) {
    const auto& mu = predictions.values();
    const auto& q = hypothesis.weights();
    if (q.size() != mu.cols()) throw InputError("hypothesis size does not match member count");
    // Cov(Psi) = diag(q) - q q^T, applied as mu diag(q) mu^T - (mu q)(mu q)^T.
    const Eigen::VectorXd bma = mu * q;
    Eigen::MatrixXd g = mu * q.asDiagonal() * mu.transpose();
    g.noalias() -= bma * bma.transpose();
    return g;
}

}  // namespace bbal
