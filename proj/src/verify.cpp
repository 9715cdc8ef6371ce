#include "bbal/verify.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "bbal/bayes_linear.hpp"
#include "bbal/kernel.hpp"
#include "bbal/rng.hpp"

namespace bbal {

namespace {

RowMatrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    RowMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

std::vector<PointId> iota_ids(Eigen::Index n) {
    std::vector<PointId> ids(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    return ids;
}

double rel_max_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    const double diff = (a - b).cwiseAbs().maxCoeff();
    return scale > 0.0 ? diff / scale : diff;
}

/// Dense GP conditioning: K - K_xC (K_CC + sigma^2 I)^-1 K_Cx.
Eigen::MatrixXd gram_space_posterior(const Eigen::MatrixXd& k, const std::vector<Eigen::Index>& cond, double noise) {
    const auto c = static_cast<Eigen::Index>(cond.size());
    if (c == 0) return k;
    Eigen::MatrixXd kcc(c, c), kxc(k.rows(), c);
    for (Eigen::Index a = 0; a < c; ++a) {
        for (Eigen::Index b = 0; b < c; ++b) kcc(a, b) = k(cond[static_cast<std::size_t>(a)], cond[static_cast<std::size_t>(b)]);
        kcc(a, a) += noise;
        kxc.col(a) = k.col(cond[static_cast<std::size_t>(a)]);
    }
    return k - kxc * kcc.ldlt().solve(kxc.transpose());
}

VerifyCheck run_check(std::string name, double tolerance, const std::function<double()>& body) {
    VerifyCheck check{std::move(name), std::numeric_limits<double>::infinity(), tolerance, {}};
    try {
        check.residual = body();
        if (std::isnan(check.residual)) check.residual = std::numeric_limits<double>::infinity();
    } catch (const std::exception& e) {
        check.error = e.what();
    }
    return check;
}

}  // namespace

std::vector<VerifyCheck> run_identity_suites(const VerifyOptions& opt) {
    std::vector<VerifyCheck> checks;

    checks.push_back(run_check("multinomial gradient kernel == empirical kernel", 1e-12, [&] {
        Rng rng(mix64({opt.seed, 1}));
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            PredictionMatrix p(iota_ids(50), normal_matrix(50, 10, rng));
            auto phi = center_predictions(p);
            Eigen::MatrixXd empirical = phi.rows() * phi.rows().transpose();
            Eigen::MatrixXd g = multinomial_posterior_gradient_kernel(p, MultinomialHypothesis::uniform(10));
            worst = std::max(worst, rel_max_diff(empirical, g));
        }
        return worst;
    }));

    checks.push_back(run_check("linear model: predictive covariance == gradient kernel", 1e-10, [&] {
        Rng rng(mix64({opt.seed, 2}));
        const NoiseModel noise(0.3);
        RowMatrix train = normal_matrix(20, 16, rng);
        Eigen::VectorXd y = normal_matrix(20, 1, rng).col(0);
        RowMatrix query = normal_matrix(30, 16, rng);
        auto post = BayesLinearPosterior::fit(train, y, noise);
        const Eigen::MatrixXd grad = post.analytic_gradient_kernel(query);
        double worst = rel_max_diff(post.predictive_covariance(query), grad);

        // Same kernel through feature-space conditioning of the prior on the training rows.
        RowMatrix all(50, 16);
        all << query, train;
        KernelState state(FeatureMap(iota_ids(50), all), noise);
        std::vector<PointId> train_ids;
        for (PointId i = 30; i < 50; ++i) train_ids.push_back(i);
        auto conditioned = state.condition_on(train_ids);
        std::vector<PointId> query_ids = iota_ids(30);
        worst = std::max(worst, rel_max_diff(conditioned.gram(query_ids), grad));
        return worst;
    }));

    const double sampled_tol = 5.0 / std::sqrt(static_cast<double>(opt.samples));
    checks.push_back(run_check("linear model: sampled empirical kernel -> gradient kernel", sampled_tol, [&] {
        Rng rng(mix64({opt.seed, 3}));
        const NoiseModel noise(0.3);
        RowMatrix train = normal_matrix(20, 16, rng);
        Eigen::VectorXd y = normal_matrix(20, 1, rng).col(0);
        RowMatrix query = normal_matrix(30, 16, rng);
        auto post = BayesLinearPosterior::fit(train, y, noise);
        auto samples = post.sample_posterior_predictions(query, opt.samples, mix64({opt.seed, 4}));
        auto phi = center_predictions(samples);
        const Eigen::MatrixXd empirical = phi.rows() * phi.rows().transpose();
        const Eigen::MatrixXd grad = post.analytic_gradient_kernel(query);
        return (empirical - grad).norm() / grad.norm();
    }));

    checks.push_back(run_check("feature-space == Gram-space conditioning", 1e-8, [&] {
        Rng rng(mix64({opt.seed, 5}));
        const NoiseModel noise(opt.sigma);
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const auto n = static_cast<Eigen::Index>(2 + rng.below(19));
            const auto k = static_cast<Eigen::Index>(2 + rng.below(9));
            PredictionMatrix p(iota_ids(n), normal_matrix(n, k, rng));
            KernelState state(center_predictions(p), noise);
            auto ids = iota_ids(n);
            const Eigen::MatrixXd prior = state.gram(ids);
            std::vector<Eigen::Index> cond;
            const auto c = rng.below(static_cast<std::size_t>(n)) + 1;
            for (std::size_t i = 0; i < c; ++i) cond.push_back(static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(n))));
            std::vector<PointId> cond_ids(cond.begin(), cond.end());
            const Eigen::MatrixXd feature_route = state.condition_on(cond_ids).gram(ids);
            const Eigen::MatrixXd gram_route = gram_space_posterior(prior, cond, noise.variance());
            const double scale = prior.cwiseAbs().maxCoeff();
            if (scale > 0.0) worst = std::max(worst, (feature_route - gram_route).cwiseAbs().maxCoeff() / scale);
        }
        return worst;
    }));

    checks.push_back(run_check("batch MI == sum of sequential gains", 1e-8, [&] {
        Rng rng(mix64({opt.seed, 6}));
        const NoiseModel noise(opt.sigma);
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            PredictionMatrix p(iota_ids(6), normal_matrix(6, 5, rng));
            KernelState state(center_predictions(p), noise);
            std::vector<PointId> order = iota_ids(6);
            for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
            order.resize(1 + rng.below(6));
            const double batch = batch_mutual_information(state, order);
            double chained = 0.0;
            KernelState s = state;
            for (auto id : order) {
                chained += bald_score(s, id);
                s = s.condition_on(id);
            }
            if (batch > 0.0) worst = std::max(worst, std::abs(batch - chained) / batch);
        }
        return worst;
    }));

    return checks;
}

}  // namespace bbal
