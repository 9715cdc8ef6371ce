#include "bbal/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "bbal/bayes_linear.hpp"
#include "bbal/errors.hpp"

namespace bbal {

std::string_view kind_name(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::random_feature_ridge: return "random_feature_ridge";
        case EnsembleKind::bagged_trees: return "bagged_trees";
        case EnsembleKind::exact_bayes_linear: return "exact_bayes_linear";
    }
    return "unknown";
}

std::optional<EnsembleKind> parse_kind(std::string_view name) {
    if (name == "random_feature_ridge" || name == "rff") return EnsembleKind::random_feature_ridge;
    if (name == "bagged_trees" || name == "forest") return EnsembleKind::bagged_trees;
    if (name == "exact_bayes_linear") return EnsembleKind::exact_bayes_linear;
    return std::nullopt;
}

EnsembleSpec EnsembleSpec::defaults(EnsembleKind kind) {
    EnsembleSpec spec;
    spec.kind = kind;
    spec.member_count = kind == EnsembleKind::bagged_trees ? 100 : 10;
    return spec;
}

std::uint64_t member_seed(std::uint64_t seed, Eigen::Index member) {
    return mix64({seed, static_cast<std::uint64_t>(member)});
}

// ---------------------------------------------------------------------------
// Random feature ridge

RandomFeatureRidgeMember::RandomFeatureRidgeMember(Eigen::MatrixXd frequencies, Eigen::RowVectorXd offsets,
                                                   Eigen::VectorXd weights)
    : frequencies_(std::move(frequencies)), offsets_(std::move(offsets)), weights_(std::move(weights)) {}

RandomFeatureRidgeMember RandomFeatureRidgeMember::fit(const RowMatrix& x, const Eigen::VectorXd& y,
                                                       const RandomFeatureRidgeParams& params, double bandwidth,
                                                       Rng& rng) {
    if (params.feature_count < 1) throw InputError("random features: feature_count must be positive");
    if (!(params.ridge > 0.0)) throw InputError("random features: ridge must be positive");
    const auto d = x.cols();
    const auto m = params.feature_count;
    Eigen::MatrixXd freq(d, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < d; ++i) freq(i, j) = rng.normal() / bandwidth;
    Eigen::RowVectorXd offsets(m);
    for (Eigen::Index j = 0; j < m; ++j) offsets(j) = 2.0 * std::numbers::pi * rng.uniform();

    RandomFeatureRidgeMember member(std::move(freq), std::move(offsets), Eigen::VectorXd::Zero(m));
    const RowMatrix z = member.features(x);
    const auto n = z.rows();
    if (n < m) {
        // Dual form: w = Z^T (Z Z^T + ridge I)^-1 y.
        Eigen::MatrixXd gram = z * z.transpose();
        gram.diagonal().array() += params.ridge;
        member.weights_ = z.transpose() * gram.ldlt().solve(y);
    } else {
        Eigen::MatrixXd normal = z.transpose() * z;
        normal.diagonal().array() += params.ridge;
        member.weights_ = normal.ldlt().solve(z.transpose() * y);
    }
    return member;
}

RowMatrix RandomFeatureRidgeMember::features(const RowMatrix& x) const {
    if (x.cols() != frequencies_.rows()) throw InputError("random features: input dimension mismatch");
    RowMatrix z = x * frequencies_;
    z.rowwise() += offsets_;
    const double scale = std::sqrt(2.0 / static_cast<double>(frequencies_.cols()));
    return (z.array().cos() * scale).matrix();
}

Eigen::VectorXd RandomFeatureRidgeMember::predict(const RowMatrix& x) const {
    return features(x) * weights_;
}

// ---------------------------------------------------------------------------
// Regression trees

class TreeBuilder {
public:
    TreeBuilder(const RowMatrix& x, const Eigen::VectorXd& y, const BaggedTreesParams& params, bool random_features,
                Rng& rng)
        : x_(x), y_(y), params_(params), random_features_(random_features), rng_(rng) {
        const auto d = x.cols();
        mtry_ = params.features_per_split > 0 ? std::min(params.features_per_split, d) : (d + 2) / 3;
        if (!random_features_) mtry_ = d;
        feature_order_.resize(static_cast<std::size_t>(d));
        std::iota(feature_order_.begin(), feature_order_.end(), Eigen::Index{0});
    }

    RegressionTree build(std::vector<Eigen::Index> rows) {
        RegressionTree tree;
        nodes_ = &tree.nodes_;
        grow(rows, 0);
        return tree;
    }

private:
    struct Split {
        Eigen::Index feature = -1;
        double threshold = 0.0;
        double score = -1.0;
    };

    std::int32_t grow(std::vector<Eigen::Index>& rows, int depth) {
        const auto index = static_cast<std::int32_t>(nodes_->size());
        nodes_->emplace_back();
        double sum = 0.0;
        for (auto r : rows) sum += y_(r);
        const auto n = static_cast<Eigen::Index>(rows.size());
        (*nodes_)[static_cast<std::size_t>(index)].value = sum / static_cast<double>(n);

        if (depth >= params_.max_depth || n < 2 * params_.min_leaf) return index;
        auto split = best_split(rows, sum);
        if (split.feature < 0) return index;

        std::vector<Eigen::Index> left, right;
        for (auto r : rows) (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const auto l = grow(left, depth + 1);
        const auto rgt = grow(right, depth + 1);
        auto& node = (*nodes_)[static_cast<std::size_t>(index)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = rgt;
        return index;
    }

    Split best_split(const std::vector<Eigen::Index>& rows, double total) {
        const auto d = static_cast<Eigen::Index>(feature_order_.size());
        // Partial Fisher-Yates: the first mtry entries become this node's features.
        if (random_features_) {
            for (Eigen::Index i = 0; i < mtry_; ++i) {
                auto j = i + static_cast<Eigen::Index>(rng_.below(static_cast<std::size_t>(d - i)));
                std::swap(feature_order_[static_cast<std::size_t>(i)], feature_order_[static_cast<std::size_t>(j)]);
            }
        }
        const auto n = static_cast<Eigen::Index>(rows.size());
        const double base = total * total / static_cast<double>(n);
        Split best;
        std::vector<std::pair<double, double>> column(rows.size());
        for (Eigen::Index f = 0; f < mtry_; ++f) {
            const auto feature = feature_order_[static_cast<std::size_t>(f)];
            for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x_(rows[i], feature), y_(rows[i])};
            std::sort(column.begin(), column.end());
            double left_sum = 0.0;
            for (Eigen::Index i = 0; i + 1 < n; ++i) {
                left_sum += column[static_cast<std::size_t>(i)].second;
                const Eigen::Index nl = i + 1, nr = n - nl;
                if (nl < params_.min_leaf || nr < params_.min_leaf) continue;
                const double lo = column[static_cast<std::size_t>(i)].first;
                const double hi = column[static_cast<std::size_t>(i + 1)].first;
                if (!(lo < hi)) continue;
                const double right_sum = total - left_sum;
                // Reduction in squared error relative to the unsplit node.
                const double gain = left_sum * left_sum / static_cast<double>(nl) +
                                    right_sum * right_sum / static_cast<double>(nr) - base;
                if (gain > best.score && gain > 1e-12 * std::abs(base) ) {
                    double mid = lo + (hi - lo) / 2.0;
                    if (!(mid < hi)) mid = lo;
                    best = {feature, mid, gain};
                }
            }
        }
        return best;
    }

    const RowMatrix& x_;
    const Eigen::VectorXd& y_;
    BaggedTreesParams params_;
    bool random_features_;
    Rng& rng_;
    Eigen::Index mtry_ = 1;
    std::vector<Eigen::Index> feature_order_;
    std::vector<RegressionTree::Node>* nodes_ = nullptr;
};

RegressionTree RegressionTree::fit(const RowMatrix& x, const Eigen::VectorXd& y, std::span<const Eigen::Index> rows,
                                   const BaggedTreesParams& params, bool random_features, Rng& rng) {
    if (rows.empty()) throw InputError("regression tree: no training rows");
    if (params.max_depth < 0 || params.min_leaf < 1) throw InputError("regression tree: invalid parameters");
    TreeBuilder builder(x, y, params, random_features, rng);
    return builder.build({rows.begin(), rows.end()});
}

double RegressionTree::predict_one(const double* row) const {
    std::size_t node = 0;
    while (nodes_[node].feature >= 0)
        node = static_cast<std::size_t>(row[nodes_[node].feature] <= nodes_[node].threshold ? nodes_[node].left
                                                                                            : nodes_[node].right);
    return nodes_[node].value;
}

Eigen::VectorXd RegressionTree::predict(const RowMatrix& x) const {
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict_one(x.row(i).data());
    return out;
}

int RegressionTree::depth() const {
    std::vector<int> depth(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, depth[i]);
        if (nodes_[i].feature >= 0) {
            depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
            depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
        }
    }
    return deepest;
}

// ---------------------------------------------------------------------------

FittedEnsemble::FittedEnsemble(EnsembleSpec spec, std::vector<PointId> train_ids,
                               std::vector<std::shared_ptr<const EnsembleMember>> members, Eigen::Index input_dimension)
    : spec_(std::move(spec)),
      train_ids_(std::move(train_ids)),
      members_(std::move(members)),
      input_dimension_(input_dimension) {}

PredictionMatrix FittedEnsemble::predict_members(const RowMatrix& x, std::vector<PointId> ids) const {
    if (x.cols() != input_dimension_)
        throw InputError("predict_members: expected " + std::to_string(input_dimension_) + " features, got " +
                         std::to_string(x.cols()));
    RowMatrix values(x.rows(), member_count());
    for (Eigen::Index k = 0; k < member_count(); ++k) values.col(k) = member(k).predict(x);
    if (ids.empty()) {
        ids.resize(static_cast<std::size_t>(x.rows()));
        std::iota(ids.begin(), ids.end(), PointId{0});
    }
    return PredictionMatrix(std::move(ids), std::move(values));
}

std::vector<Eigen::Index> bootstrap_rows(std::span<const Eigen::Index> rows, Rng& rng) {
    std::vector<Eigen::Index> out(rows.size());
    for (auto& r : out) r = rows[rng.below(rows.size())];
    return out;
}

double median_pairwise_distance(const RowMatrix& x, std::span<const Eigen::Index> rows) {
    const std::size_t n = std::min<std::size_t>(rows.size(), 256);
    std::vector<double> dist;
    dist.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist.push_back((x.row(rows[i]) - x.row(rows[j])).norm());
    if (dist.empty()) return 1.0;
    auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    return *mid > 0.0 ? *mid : 1.0;
}

FittedEnsemble fit_ensemble(const Dataset& data, std::span<const PointId> train_ids, const EnsembleSpec& spec) {
    data.validate();
    if (train_ids.empty()) throw InputError("fit_ensemble: no training points");
    if (spec.member_count < 2) throw InputError("fit_ensemble: member_count must be at least 2");
    if (spec.kind == EnsembleKind::bagged_trees && train_ids.size() < 2)
        throw InputError("fit_ensemble: tree ensembles need at least 2 training points");

    std::vector<Eigen::Index> rows;
    rows.reserve(train_ids.size());
    for (auto id : train_ids) {
        if (id >= static_cast<PointId>(data.size())) throw InputError("fit_ensemble: train id out of range");
        rows.push_back(static_cast<Eigen::Index>(id));
    }

    std::vector<std::shared_ptr<const EnsembleMember>> members;
    members.reserve(static_cast<std::size_t>(spec.member_count));

    if (spec.kind == EnsembleKind::exact_bayes_linear) {
        RowMatrix x(static_cast<Eigen::Index>(rows.size()), data.dimension());
        Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            x.row(static_cast<Eigen::Index>(i)) = data.features.row(rows[i]);
            y(static_cast<Eigen::Index>(i)) = data.targets(rows[i]);
        }
        auto posterior = BayesLinearPosterior::fit(x, y, NoiseModel(spec.bayes.noise_sigma));
        for (Eigen::Index k = 0; k < spec.member_count; ++k) {
            Rng rng(member_seed(spec.seed, k));
            members.push_back(std::make_shared<LinearMember>(posterior.sample_weights(rng)));
        }
        return FittedEnsemble(spec, {train_ids.begin(), train_ids.end()}, std::move(members), data.dimension());
    }

    const double bandwidth = median_pairwise_distance(data.features, rows);
    const std::uint64_t shared_seed = mix64({spec.seed, 0x5ea7ed5ea7edULL});
    for (Eigen::Index k = 0; k < spec.member_count; ++k) {
        Rng rng(member_seed(spec.seed, k));
        std::vector<Eigen::Index> sample = spec.bootstrap ? bootstrap_rows(rows, rng) : rows;
        Rng shared(shared_seed);
        Rng& own = spec.member_randomness ? rng : shared;

        if (spec.kind == EnsembleKind::random_feature_ridge) {
            RowMatrix x(static_cast<Eigen::Index>(sample.size()), data.dimension());
            Eigen::VectorXd y(static_cast<Eigen::Index>(sample.size()));
            for (std::size_t i = 0; i < sample.size(); ++i) {
                x.row(static_cast<Eigen::Index>(i)) = data.features.row(sample[i]);
                y(static_cast<Eigen::Index>(i)) = data.targets(sample[i]);
            }
            members.push_back(std::make_shared<RandomFeatureRidgeMember>(
                RandomFeatureRidgeMember::fit(x, y, spec.rff, bandwidth, own)));
        } else {
            members.push_back(std::make_shared<RegressionTree>(
                RegressionTree::fit(data.features, data.targets, sample, spec.trees, spec.member_randomness, own)));
        }
    }
    return FittedEnsemble(spec, {train_ids.begin(), train_ids.end()}, std::move(members), data.dimension());
}

}  // namespace bbal
