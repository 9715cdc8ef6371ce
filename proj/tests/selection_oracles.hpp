#pragma once

// Dense Gram-space reference implementations of the selection rules. Each works on the
// explicit posterior kernel matrix and recomputes everything from scratch at every step.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "bbal/selection.hpp"
#include "test_support.hpp"

namespace bbal::testing {

/// A random instance with non-contiguous, shuffled ids and its dense oracle kernels.
struct Instance {
    std::vector<PointId> ids;
    PredictionMatrix predictions;
    std::vector<PointId> train, pool;
    double sigma;
    Eigen::MatrixXd prior;      // brute-force covariance, rows in `ids` order
    Eigen::MatrixXd posterior;  // prior conditioned on train

    KernelState kernel() const { return KernelState(center_predictions(predictions), NoiseModel(sigma)); }
    Eigen::Index index(PointId id) const {
        return static_cast<Eigen::Index>(std::find(ids.begin(), ids.end(), id) - ids.begin());
    }
    SelectionRequest request(std::size_t b, UniformStream stream = UniformStream::seeded(0)) const {
        return SelectionRequest{kernel(), pool, train, b, std::move(stream), {}};
    }
    double variance(const Eigen::MatrixXd& k, PointId a) const { return k(index(a), index(a)); }
    double d2(const Eigen::MatrixXd& k, PointId a, PointId b) const {
        const auto i = index(a), j = index(b);
        return k(i, i) - 2.0 * k(i, j) + k(j, j);
    }
    std::vector<PointId> sorted_pool() const {
        auto p = pool;
        std::sort(p.begin(), p.end());
        return p;
    }
    /// Prior conditioned on train plus `picked`.
    Eigen::MatrixXd conditioned(const std::vector<PointId>& picked) const {
        std::vector<Eigen::Index> cond;
        for (auto id : train) cond.push_back(index(id));
        for (auto id : picked) cond.push_back(index(id));
        return dense_posterior(prior, cond, sigma * sigma);
    }
    double total_pool_variance(const std::vector<PointId>& picked) const {
        auto post = conditioned(picked);
        double total = 0.0;
        for (auto id : pool) total += variance(post, id);
        return total;
    }
};

inline Instance make_instance(std::uint64_t seed, std::size_t n, std::size_t n_train, Eigen::Index k = 6) {
    Rng rng(seed);
    std::vector<PointId> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(100 + 7 * i);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(ids[i], ids[rng.below(i + 1)]);
    RowMatrix mu = random_matrix(static_cast<Eigen::Index>(n), k, rng);
    Instance inst{ids, PredictionMatrix(ids, mu), {}, {}, 0.05 + 0.5 * rng.uniform(), {}, {}};
    std::vector<PointId> order = ids;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    inst.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    inst.pool.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    inst.prior = brute_force_covariance(mu);
    inst.posterior = inst.conditioned({});
    return inst;
}

struct OracleResult {
    std::vector<PointId> selected;
    std::vector<double> scores;
};

inline bool contains(const std::vector<PointId>& v, PointId id) { return std::find(v.begin(), v.end(), id) != v.end(); }

/// Greedy MaxDet by explicit determinant ratios of I + K_S / sigma^2 (prior, empty train).
inline OracleResult oracle_maxdet(const Instance& inst, std::size_t b) {
    OracleResult out;
    const double noise = inst.sigma * inst.sigma;
    std::vector<Eigen::Index> chosen;
    for (auto id : inst.train) chosen.push_back(inst.index(id));
    for (std::size_t t = 0; t < b; ++t) {
        const double base = dense_mi(inst.prior, chosen, noise);
        PointId best = 0;
        double best_gain = -1.0;
        for (auto id : inst.sorted_pool()) {
            if (contains(out.selected, id)) continue;
            auto with = chosen;
            with.push_back(inst.index(id));
            const double gain = dense_mi(inst.prior, with, noise) - base;
            if (gain > best_gain + 1e-12) best_gain = gain, best = id;
        }
        out.selected.push_back(best);
        out.scores.push_back(best_gain);
        chosen.push_back(inst.index(best));
    }
    return out;
}

/// k-means++ sampling with Gram-space distances, consuming `stream` like the library.
inline OracleResult oracle_badge(const Instance& inst, std::size_t b, UniformStream stream) {
    OracleResult out;
    auto pool = inst.sorted_pool();
    std::vector<double> mass;
    for (auto id : pool) mass.push_back(inst.variance(inst.posterior, id));
    std::vector<char> taken(pool.size(), 0);
    for (std::size_t t = 0; t < b; ++t) {
        const double u = stream.next();
        double total = 0.0;
        std::size_t remaining = 0;
        for (std::size_t p = 0; p < pool.size(); ++p)
            if (!taken[p]) total += mass[p], ++remaining;
        std::size_t pick = 0;
        if (!(total > 0.0)) {
            auto k = std::min(static_cast<std::size_t>(u * static_cast<double>(remaining)), remaining - 1);
            for (std::size_t p = 0; p < pool.size(); ++p)
                if (!taken[p] && k-- == 0) {
                    pick = p;
                    break;
                }
        } else {
            double cum = 0.0;
            for (std::size_t p = 0; p < pool.size(); ++p) {
                if (taken[p] || mass[p] <= 0.0) continue;
                cum += mass[p];
                pick = p;
                if (cum > u * total) break;
            }
        }
        out.selected.push_back(pool[pick]);
        out.scores.push_back(mass[pick]);
        taken[pick] = 1;
        for (std::size_t p = 0; p < pool.size(); ++p) {
            double m = std::numeric_limits<double>::infinity();
            for (auto c : out.selected) m = std::min(m, inst.d2(inst.posterior, pool[p], c));
            mass[p] = m;
        }
    }
    return out;
}

/// Farthest-first traversal; scores are min-distances (not squared).
inline OracleResult oracle_coreset(const Instance& inst, std::size_t b) {
    OracleResult out;
    std::vector<PointId> centers = inst.train;
    for (std::size_t t = 0; t < b; ++t) {
        PointId best = 0;
        double best_d = -1.0;
        for (auto id : inst.sorted_pool()) {
            if (contains(out.selected, id)) continue;
            double m = std::numeric_limits<double>::infinity();
            if (centers.empty()) m = inst.variance(inst.posterior, id);
            for (auto c : centers) m = std::min(m, inst.d2(inst.posterior, id, c));
            if (m > best_d + 1e-12) best_d = m, best = id;
        }
        out.selected.push_back(best);
        out.scores.push_back(centers.empty() ? std::numeric_limits<double>::infinity() : std::sqrt(best_d));
        centers.push_back(best);
    }
    return out;
}

/// Largest cluster, maximum distance with a full reassignment at every step.
inline OracleResult oracle_lcmd(const Instance& inst, std::size_t b) {
    OracleResult out;
    std::vector<PointId> centers = inst.train;
    for (std::size_t t = 0; t < b; ++t) {
        PointId pick = 0;
        double score = 0.0;
        if (centers.empty()) {
            double best = -1.0;
            for (auto id : inst.sorted_pool()) {
                const double v = inst.variance(inst.posterior, id);
                if (v > best + 1e-12) best = v, pick = id;
            }
            score = best;
        } else {
            std::map<PointId, double> weight;
            std::map<PointId, std::vector<std::pair<double, PointId>>> members;
            for (auto id : inst.pool) {
                if (contains(out.selected, id)) continue;
                PointId owner = 0;
                double m = std::numeric_limits<double>::infinity();
                for (auto c : centers) {
                    const double d = inst.d2(inst.posterior, id, c);
                    if (d < m - 1e-12 || (std::abs(d - m) <= 1e-12 && c < owner)) m = d, owner = c;
                }
                weight[owner] += m;
                members[owner].emplace_back(-m, id);
            }
            PointId heaviest = weight.begin()->first;
            for (auto [c, w] : weight)
                if (w > weight[heaviest] + 1e-12) heaviest = c;
            auto& ms = members[heaviest];
            std::sort(ms.begin(), ms.end());
            pick = ms.front().second;
            score = -ms.front().first;
        }
        out.selected.push_back(pick);
        out.scores.push_back(score);
        centers.push_back(pick);
    }
    return out;
}

/// Greedy total-pool-variance minimization by dense conditioning on every candidate.
inline OracleResult oracle_bait_forward(const Instance& inst, std::size_t b) {
    OracleResult out;
    for (std::size_t t = 0; t < b; ++t) {
        PointId best = 0;
        double best_total = std::numeric_limits<double>::infinity();
        for (auto id : inst.sorted_pool()) {
            if (contains(out.selected, id)) continue;
            auto with = out.selected;
            with.push_back(id);
            const double total = inst.total_pool_variance(with);
            if (total < best_total - 1e-12) best_total = total, best = id;
        }
        out.selected.push_back(best);
        out.scores.push_back(best_total);
    }
    return out;
}

/// Forward picks followed by removals, each removal chosen by refitting every subset.
inline std::vector<PointId> oracle_bait_backward(const Instance& inst, std::size_t b) {
    auto picked = oracle_bait_forward(inst, std::min(b + (b + 1) / 2, inst.pool.size())).selected;
    while (picked.size() > b) {
        std::size_t drop = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < picked.size(); ++i) {
            auto without = picked;
            without.erase(without.begin() + static_cast<std::ptrdiff_t>(i));
            const double total = inst.total_pool_variance(without);
            if (total < best - 1e-12 || (std::abs(total - best) <= 1e-12 && picked[i] < picked[drop])) best = total, drop = i;
        }
        picked.erase(picked.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    return picked;
}

/// Relative agreement of two score sequences (infinities must match exactly).
inline bool scores_match(const std::vector<double>& a, const std::vector<double>& b, double rel) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::isinf(a[i]) || std::isinf(b[i])) {
            if (a[i] != b[i]) return false;
            continue;
        }
        if (std::abs(a[i] - b[i]) > rel * std::max({1.0, std::abs(a[i]), std::abs(b[i])})) return false;
    }
    return true;
}

}  // namespace bbal::testing
