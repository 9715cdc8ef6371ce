#include "bbal/bayes_linear.hpp"

#include "bbal/errors.hpp"
#include "bbal/rng.hpp"

namespace bbal {

BayesLinearPosterior::BayesLinearPosterior(Eigen::VectorXd mean, Eigen::MatrixXd precision, NoiseModel noise)
    : mean_(std::move(mean)), precision_(std::move(precision)), factor_(precision_), noise_(noise) {
    if (factor_.info() != Eigen::Success) throw Error("posterior precision is not positive definite");
}

BayesLinearPosterior BayesLinearPosterior::fit(const RowMatrix& x, const Eigen::VectorXd& y, NoiseModel noise) {
    if (x.rows() != y.size()) throw InputError("bayes linear: row and target counts differ");
    if (x.cols() < 1) throw InputError("bayes linear: need at least one feature");
    const double inv_noise = 1.0 / noise.variance();
    Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(x.cols(), x.cols());
    precision.noalias() += inv_noise * x.transpose() * x;
    const Eigen::VectorXd rhs = inv_noise * x.transpose() * y;
    Eigen::VectorXd mean = precision.llt().solve(rhs);
    return BayesLinearPosterior(std::move(mean), std::move(precision), noise);
}

BayesLinearPosterior BayesLinearPosterior::prior(Eigen::Index dimension, NoiseModel noise) {
    return BayesLinearPosterior(Eigen::VectorXd::Zero(dimension), Eigen::MatrixXd::Identity(dimension, dimension),
                                noise);
}

Eigen::MatrixXd BayesLinearPosterior::covariance() const {
    return factor_.solve(Eigen::MatrixXd::Identity(dimension(), dimension()));
}

Eigen::MatrixXd BayesLinearPosterior::analytic_gradient_kernel(const RowMatrix& x) const {
    if (x.cols() != dimension()) throw InputError("bayes linear: feature dimension mismatch");
    // L^-1 x^T gives whitened gradients; their Gram is the posterior gradient kernel.
    const Eigen::MatrixXd whitened = factor_.matrixL().solve(x.transpose());
    return whitened.transpose() * whitened;
}

Eigen::MatrixXd BayesLinearPosterior::predictive_covariance(const RowMatrix& x) const {
    if (x.cols() != dimension()) throw InputError("bayes linear: feature dimension mismatch");
    Eigen::MatrixXd cov = covariance();
    cov = (cov + cov.transpose()) / 2.0;
    return x * cov * x.transpose();
}

Eigen::VectorXd BayesLinearPosterior::sample_weights(Rng& rng) const {
    Eigen::VectorXd z(dimension());
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
    return mean_ + factor_.matrixU().solve(z);
}

PredictionMatrix BayesLinearPosterior::sample_posterior_predictions(const RowMatrix& x, Eigen::Index members,
                                                                    std::uint64_t seed,
                                                                    std::vector<PointId> ids) const {
    if (x.cols() != dimension()) throw InputError("bayes linear: feature dimension mismatch");
    if (members < 2) throw InputError("bayes linear: need at least 2 samples");
    Rng rng(seed);
    Eigen::MatrixXd z(dimension(), members);
    for (Eigen::Index k = 0; k < members; ++k)
        for (Eigen::Index j = 0; j < dimension(); ++j) z(j, k) = rng.normal();
    Eigen::MatrixXd weights = factor_.matrixU().solve(z);
    weights.colwise() += mean_;
    RowMatrix values = x * weights;
    if (ids.empty()) {
        ids.resize(static_cast<std::size_t>(x.rows()));
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    }
    return PredictionMatrix(std::move(ids), std::move(values));
}

}  // namespace bbal
