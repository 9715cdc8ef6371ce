#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bbal/prediction_matrix.hpp"

namespace bbal {

/// Homoscedastic Gaussian observation noise, sigma in target units.
class NoiseModel {
public:
    /// Throws InputError unless sigma is finite and strictly positive.
    explicit NoiseModel(double sigma);

    double sigma() const { return sigma_; }
    double variance() const { return sigma_ * sigma_; }

private:
    double sigma_;
};

/// Feature vectors phi(x_i), one row per point, with k(x, y) = <phi(x), phi(y)>.
class FeatureMap {
public:
    FeatureMap(std::vector<PointId> ids, RowMatrix rows);

    std::span<const PointId> ids() const { return index_.ids(); }
    const IdIndex& index() const { return index_; }
    const RowMatrix& rows() const { return rows_; }
    Eigen::Index dimension() const { return rows_.cols(); }
    Eigen::Index size() const { return rows_.rows(); }

private:
    IdIndex index_;
    RowMatrix rows_;
};

/// Left-to-right sum of a[i] * b[i]. Unlike Eigen's vectorized reductions the result does
/// not depend on memory alignment, so identical rows always produce identical scores.
inline double sequential_dot(const double* a, const double* b, Eigen::Index n) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

/// Row i becomes (mu_i - mean_i) / sqrt(K): the empirical predictive covariance
/// kernel is then a plain inner product.
FeatureMap center_predictions(const PredictionMatrix& predictions);

/// Predictive covariance kernel over a fixed point set, optionally conditioned on
/// noisy hypothetical observations.
///
/// The posterior is kept in feature space as the precision
///   P = I + sum_c phi_c phi_c^T / sigma^2
/// together with whitened features psi_i satisfying <psi_i, psi_j> = phi_i P^-1 phi_j^T.
/// Each conditioning step updates psi with an O(N D) rank-one contraction, so greedy
/// selection over large pools never refactorizes P.
///
/// States are immutable; condition_on returns a new state and leaves this one valid.
class KernelState {
public:
    KernelState(FeatureMap base, NoiseModel noise);
    KernelState(std::shared_ptr<const FeatureMap> base, NoiseModel noise);

    const FeatureMap& base() const { return *base_; }
    const NoiseModel& noise() const { return noise_; }
    const Eigen::MatrixXd& posterior_precision() const { return *precision_; }
    std::span<const PointId> conditioned_ids() const { return conditioned_; }
    std::span<const PointId> ids() const { return base_->ids(); }
    bool contains(PointId id) const { return base_->index().contains(id); }

    double kernel_value(PointId i, PointId j) const;
    /// kernel_value(i, j) + sigma^2 [i == j].
    double observation_covariance(PointId i, PointId j) const;

    /// k'(x, y) = k(x, y) - k(x, i) k(i, y) / (k(i, i) + sigma^2).
    /// Conditioning twice on the same point models two independent observations.
    KernelState condition_on(PointId i) const;
    KernelState condition_on(std::span<const PointId> ids) const;

    /// Dense kernel matrix over `ids` (rows and columns in the given order).
    Eigen::MatrixXd gram(std::span<const PointId> ids) const;

    // Row-level access for the selection algorithms.
    Eigen::Index row_of(PointId id) const { return base_->index().row_of(id); }
    const RowMatrix& whitened() const { return *whitened_; }
    double kernel_at(Eigen::Index a, Eigen::Index b) const {
        return sequential_dot(whitened_->row(a).data(), whitened_->row(b).data(), whitened_->cols());
    }
    double variance_at(Eigen::Index a) const {
        return sequential_dot(whitened_->row(a).data(), whitened_->row(a).data(), whitened_->cols());
    }
    /// Squared kernel distance k(a,a) - 2k(a,b) + k(b,b), evaluated as ||psi_a - psi_b||^2.
    double distance2_at(Eigen::Index a, Eigen::Index b) const;
    KernelState condition_on_row(Eigen::Index row) const;

private:
    KernelState(std::shared_ptr<const FeatureMap> base, NoiseModel noise,
                std::shared_ptr<const Eigen::MatrixXd> precision,
                std::shared_ptr<const RowMatrix> whitened, std::vector<PointId> conditioned);

    std::shared_ptr<const FeatureMap> base_;
    NoiseModel noise_;
    std::shared_ptr<const Eigen::MatrixXd> precision_;
    std::shared_ptr<const RowMatrix> whitened_;
    std::vector<PointId> conditioned_;
};

/// Gaussian joint entropy of noisy observations at `subset`:
/// 1/2 logdet(K_SS + sigma^2 I) + n/2 log(2 pi e). Empty subset gives 0.
double joint_entropy(const KernelState& state, std::span<const PointId> subset);

/// BatchBALD in prediction space: 1/2 logdet(K_SS / sigma^2 + I). Never negative.
double batch_mutual_information(const KernelState& state, std::span<const PointId> subset);

/// 1/2 log(1 + k(i, i) / sigma^2).
double bald_score(const KernelState& state, PointId i);

/// Categorical distribution over the K ensemble members.
class MultinomialHypothesis {
public:
    /// Weights must be non-negative and sum to 1 (within 1e-12).
    explicit MultinomialHypothesis(Eigen::VectorXd weights);
    static MultinomialHypothesis uniform(Eigen::Index members);

    const Eigen::VectorXd& weights() const { return weights_; }

private:
    Eigen::VectorXd weights_;
};

/// Gradient kernel of the member-selection model w.r.t. q:
/// G_ij = mu_i^T diag(q) mu_j - (mu_i^T q)(q^T mu_j).
Eigen::MatrixXd multinomial_posterior_gradient_kernel(const PredictionMatrix& predictions,
                                                      const MultinomialHypothesis& hypothesis);

/// Log-determinant of a symmetric positive definite matrix via Cholesky. If the first
/// factorization fails, retries once with 1e-10 * trace / n added to the diagonal.
double logdet_spd(const Eigen::MatrixXd& matrix);

}  // namespace bbal
