#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bbal/dataset.hpp"
#include "bbal/prediction_matrix.hpp"
#include "bbal/rng.hpp"

namespace bbal {

enum class EnsembleKind { random_feature_ridge, bagged_trees, exact_bayes_linear };

std::string_view kind_name(EnsembleKind kind);
std::optional<EnsembleKind> parse_kind(std::string_view name);

struct RandomFeatureRidgeParams {
    Eigen::Index feature_count = 256;
    double ridge = 1e-2;
};

struct BaggedTreesParams {
    int max_depth = 12;
    Eigen::Index min_leaf = 3;
    /// Features tried per split; 0 means ceil(d / 3).
    Eigen::Index features_per_split = 0;
};

struct BayesLinearParams {
    double noise_sigma = 0.1;
};

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::random_feature_ridge;
    Eigen::Index member_count = 10;
    std::uint64_t seed = 0;
    /// Each member trains on a bootstrap resample of the training rows.
    bool bootstrap = true;
    /// Members also differ in random features / split feature draws. Off gives the
    /// pure-bootstrap ablation (and, together with bootstrap = false, identical members).
    bool member_randomness = true;
    RandomFeatureRidgeParams rff{};
    BaggedTreesParams trees{};
    BayesLinearParams bayes{};

    /// 10 members for the ridge and linear kinds, 100 trees for bagged_trees.
    static EnsembleSpec defaults(EnsembleKind kind);
};

/// Member seed: mix64({spec seed, member index}).
std::uint64_t member_seed(std::uint64_t seed, Eigen::Index member);

class EnsembleMember {
public:
    virtual ~EnsembleMember() = default;
    virtual Eigen::VectorXd predict(const RowMatrix& x) const = 0;
};

/// Ridge regression on random cosine features z(x) = sqrt(2/M) cos(x W + b).
class RandomFeatureRidgeMember final : public EnsembleMember {
public:
    /// Draws W ~ N(0, 1/bandwidth^2) (d x M) and b ~ U[0, 2pi) from `rng`, then solves
    /// (Z^T Z + ridge I) w = Z^T y.
    static RandomFeatureRidgeMember fit(const RowMatrix& x, const Eigen::VectorXd& y,
                                        const RandomFeatureRidgeParams& params, double bandwidth, Rng& rng);

    RandomFeatureRidgeMember(Eigen::MatrixXd frequencies, Eigen::RowVectorXd offsets, Eigen::VectorXd weights);

    RowMatrix features(const RowMatrix& x) const;
    Eigen::VectorXd predict(const RowMatrix& x) const override;
    const Eigen::VectorXd& weights() const { return weights_; }

private:
    Eigen::MatrixXd frequencies_;
    Eigen::RowVectorXd offsets_;
    Eigen::VectorXd weights_;
};

/// CART regression tree grown by greedy variance reduction.
class RegressionTree final : public EnsembleMember {
public:
    static RegressionTree fit(const RowMatrix& x, const Eigen::VectorXd& y, std::span<const Eigen::Index> rows,
                              const BaggedTreesParams& params, bool random_features, Rng& rng);

    Eigen::VectorXd predict(const RowMatrix& x) const override;
    double predict_one(const double* row) const;
    std::size_t node_count() const { return nodes_.size(); }
    int depth() const;

private:
    struct Node {
        Eigen::Index feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        double value = 0.0;
    };
    std::vector<Node> nodes_;
    friend class TreeBuilder;
};

/// Fixed weight vector drawn from a Gaussian posterior; predicts x w.
class LinearMember final : public EnsembleMember {
public:
    explicit LinearMember(Eigen::VectorXd weights) : weights_(std::move(weights)) {}
    Eigen::VectorXd predict(const RowMatrix& x) const override { return x * weights_; }
    const Eigen::VectorXd& weights() const { return weights_; }

private:
    Eigen::VectorXd weights_;
};

class FittedEnsemble {
public:
    FittedEnsemble(EnsembleSpec spec, std::vector<PointId> train_ids,
                   std::vector<std::shared_ptr<const EnsembleMember>> members, Eigen::Index input_dimension);

    const EnsembleSpec& spec() const { return spec_; }
    std::span<const PointId> train_ids() const { return train_ids_; }
    Eigen::Index member_count() const { return static_cast<Eigen::Index>(members_.size()); }
    const EnsembleMember& member(Eigen::Index k) const { return *members_[static_cast<std::size_t>(k)]; }

    /// N x K member predictions; ids default to 0..N-1. Throws InputError on a column mismatch.
    PredictionMatrix predict_members(const RowMatrix& x, std::vector<PointId> ids = {}) const;

private:
    EnsembleSpec spec_;
    std::vector<PointId> train_ids_;
    std::vector<std::shared_ptr<const EnsembleMember>> members_;
    Eigen::Index input_dimension_;
};

/// Rows drawn with replacement, |rows| draws, each floor(u * |rows|).
std::vector<Eigen::Index> bootstrap_rows(std::span<const Eigen::Index> rows, Rng& rng);

/// Median pairwise Euclidean distance over (at most the first 256 of) `rows`; 1 if degenerate.
double median_pairwise_distance(const RowMatrix& x, std::span<const Eigen::Index> rows);

/// Trains K members. Member k draws its bootstrap and then its own randomness from
/// Rng(member_seed(spec.seed, k)). Throws InputError for empty training sets and for
/// fewer than 2 training points with tree members.
FittedEnsemble fit_ensemble(const Dataset& data, std::span<const PointId> train_ids, const EnsembleSpec& spec);

}  // namespace bbal
