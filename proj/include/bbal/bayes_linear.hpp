#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bbal/kernel.hpp"
#include "bbal/prediction_matrix.hpp"
#include "bbal/rng.hpp"

namespace bbal {

/// Conjugate Bayesian linear regression y = x w + eps with prior w ~ N(0, I) and
/// eps ~ N(0, sigma^2). Serves as the exact reference model: its mean function is linear
/// in w, so the gradient kernel and the predictive covariance kernel coincide.
class BayesLinearPosterior {
public:
    /// Posterior after observing rows of `x` with targets `y`; zero rows gives the prior.
    static BayesLinearPosterior fit(const RowMatrix& x, const Eigen::VectorXd& y, NoiseModel noise);
    static BayesLinearPosterior prior(Eigen::Index dimension, NoiseModel noise);

    Eigen::Index dimension() const { return mean_.size(); }
    const Eigen::VectorXd& mean() const { return mean_; }
    /// X^T X / sigma^2 + I.
    const Eigen::MatrixXd& precision() const { return precision_; }
    Eigen::MatrixXd covariance() const;
    const NoiseModel& noise() const { return noise_; }

    /// g(x_i) (X^T X / sigma^2 + I)^-1 g(x_j)^T with g(x) = x, via a Cholesky solve.
    Eigen::MatrixXd analytic_gradient_kernel(const RowMatrix& x) const;

    /// Cov_w(x_i w, x_j w) from the explicit posterior covariance.
    Eigen::MatrixXd predictive_covariance(const RowMatrix& x) const;

    /// Noise-free mean-function samples: column k is x w_k with w_k drawn from the posterior.
    PredictionMatrix sample_posterior_predictions(const RowMatrix& x, Eigen::Index members, std::uint64_t seed,
                                                  std::vector<PointId> ids = {}) const;

    /// w = mean + L^-T z, where precision = L L^T and z ~ N(0, I) from `rng`.
    Eigen::VectorXd sample_weights(Rng& rng) const;

private:
    BayesLinearPosterior(Eigen::VectorXd mean, Eigen::MatrixXd precision, NoiseModel noise);

    Eigen::VectorXd mean_;
    Eigen::MatrixXd precision_;
    Eigen::LLT<Eigen::MatrixXd> factor_;
    NoiseModel noise_;
};

}  // namespace bbal
