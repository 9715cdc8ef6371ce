#include "bbal/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <json.hpp>

#include "bbal/errors.hpp"

namespace bbal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
    PointId id;
    Eigen::Index row;
};

/// Train-conditioned kernel plus the pool sorted by id.
struct Prepared {
    KernelState state;
    std::vector<Candidate> pool;
    std::vector<Eigen::Index> train_rows;
};

Prepared prepare(const SelectionRequest& req) {
    validate(req);
    Prepared p{req.kernel.condition_on(req.train_ids), {}, {}};
    std::vector<PointId> sorted = req.pool_ids;
    std::sort(sorted.begin(), sorted.end());
    p.pool.reserve(sorted.size());
    for (auto id : sorted) p.pool.push_back({id, p.state.row_of(id)});
    for (auto id : req.train_ids) p.train_rows.push_back(p.state.row_of(id));
    return p;
}

/// Index (into `pool`) of the untaken candidate with the largest score; ties keep the
/// lowest id because the pool is sorted. Returns npos if nothing is left.
template <class Score>
std::size_t argmax_untaken(const std::vector<Candidate>& pool, const std::vector<char>& taken, Score&& score,
                           double* best_value = nullptr) {
    std::size_t best = std::string::npos;
    double best_score = -kInf;
    for (std::size_t p = 0; p < pool.size(); ++p) {
        if (taken[p]) continue;
        double s = score(p);
        if (best == std::string::npos || s > best_score) {
            best = p;
            best_score = s;
        }
    }
    if (best_value) *best_value = best_score;
    return best;
}

/// Draws one candidate with probability proportional to `mass` (one stream value).
/// Zero total mass falls back to a uniform draw over the untaken candidates.
std::size_t sample_proportional(const std::vector<Candidate>& pool, const std::vector<char>& taken,
                                const std::vector<double>& mass, UniformStream& rng) {
    const double u = rng.next();
    double total = 0.0;
    std::size_t remaining = 0;
    for (std::size_t p = 0; p < pool.size(); ++p) {
        if (taken[p]) continue;
        total += mass[p];
        ++remaining;
    }
    if (!(total > 0.0)) {
        auto k = std::min(static_cast<std::size_t>(u * static_cast<double>(remaining)), remaining - 1);
        for (std::size_t p = 0; p < pool.size(); ++p) {
            if (taken[p]) continue;
            if (k-- == 0) return p;
        }
    }
    const double target = u * total;
    double cumulative = 0.0;
    std::size_t last_positive = std::string::npos;
    for (std::size_t p = 0; p < pool.size(); ++p) {
        if (taken[p] || !(mass[p] > 0.0)) continue;
        cumulative += mass[p];
        last_positive = p;
        if (cumulative > target) return p;
    }
    return last_positive;
}

double total_variance(const KernelState& state, const std::vector<Eigen::Index>& rows) {
    double total = 0.0;
    for (auto r : rows) total += state.variance_at(r);
    return total;
}

}  // namespace

std::string_view method_name(Method method) {
    switch (method) {
        case Method::uniform: return "uniform";
        case Method::bald: return "bald";
        case Method::maxdet: return "maxdet";
        case Method::badge: return "badge";
        case Method::coreset: return "coreset";
        case Method::lcmd: return "lcmd";
        case Method::bait: return "bait";
    }
    return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
    if (name == "uniform" || name == "random") return Method::uniform;
    if (name == "bald" || name == "bald_topk") return Method::bald;
    if (name == "maxdet" || name == "batchbald" || name == "maxdet_batchbald") return Method::maxdet;
    if (name == "badge" || name == "badge_kmeanspp" || name == "kmeanspp") return Method::badge;
    if (name == "coreset" || name == "coreset_maxdist" || name == "maxdist") return Method::coreset;
    if (name == "lcmd") return Method::lcmd;
    if (name == "bait" || name == "bait_forward") return Method::bait;
    return std::nullopt;
}

std::vector<Method> all_methods() {
    return {Method::uniform, Method::bald, Method::maxdet, Method::badge, Method::coreset, Method::lcmd, Method::bait};
}

void validate(const SelectionRequest& req) {
    if (req.pool_ids.empty()) throw InputError("selection: pool is empty");
    if (req.batch_size < 1) throw InputError("selection: batch size must be at least 1");
    std::unordered_set<PointId> pool;
    for (auto id : req.pool_ids) {
        if (!req.kernel.contains(id)) throw InputError("selection: pool id " + std::to_string(id) + " not in kernel");
        if (!pool.insert(id).second) throw InputError("selection: duplicate pool id " + std::to_string(id));
    }
    std::unordered_set<PointId> train;
    for (auto id : req.train_ids) {
        if (!req.kernel.contains(id)) throw InputError("selection: train id " + std::to_string(id) + " not in kernel");
        if (pool.count(id)) throw InputError("selection: id " + std::to_string(id) + " is both pool and train");
        if (!train.insert(id).second) throw InputError("selection: duplicate train id " + std::to_string(id));
    }
    if (req.batch_size > req.pool_ids.size())
        throw InfeasibleError("selection: batch size " + std::to_string(req.batch_size) + " exceeds pool size " +
                              std::to_string(req.pool_ids.size()));
}

SelectionResult select_uniform(const SelectionRequest& req) {
    validate(req);
    auto rng = req.rng;
    std::vector<PointId> remaining = req.pool_ids;
    std::sort(remaining.begin(), remaining.end());
    SelectionResult out;
    for (std::size_t t = 0; t < req.batch_size; ++t) {
        const double u = rng.next();
        auto k = std::min(static_cast<std::size_t>(u * static_cast<double>(remaining.size())), remaining.size() - 1);
        out.selected.push_back(remaining[k]);
        out.step_scores.push_back(u);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return out;
}

SelectionResult select_bald_topk(const SelectionRequest& req) {
    auto prep = prepare(req);
    const double noise = prep.state.noise().variance();
    std::vector<std::pair<double, PointId>> scored;
    scored.reserve(prep.pool.size());
    for (const auto& c : prep.pool) scored.emplace_back(0.5 * std::log1p(prep.state.variance_at(c.row) / noise), c.id);
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    SelectionResult out;
    for (std::size_t t = 0; t < req.batch_size; ++t) {
        out.selected.push_back(scored[t].second);
        out.step_scores.push_back(scored[t].first);
    }
    return out;
}

SelectionResult select_maxdet_batchbald(const SelectionRequest& req) {
    auto prep = prepare(req);
    const double noise = prep.state.noise().variance();
    std::vector<char> taken(prep.pool.size(), 0);
    KernelState state = prep.state;
    SelectionResult out;
    for (std::size_t t = 0; t < req.batch_size; ++t) {
        double variance = 0.0;
        auto best = argmax_untaken(prep.pool, taken, [&](std::size_t p) { return state.variance_at(prep.pool[p].row); },
                                   &variance);
        taken[best] = 1;
        out.selected.push_back(prep.pool[best].id);
        out.step_scores.push_back(0.5 * std::log1p(variance / noise));
        state = state.condition_on_row(prep.pool[best].row);
    }
    return out;
}

SelectionResult select_badge_kmeanspp(const SelectionRequest& req) {
    auto prep = prepare(req);
    auto rng = req.rng;
    const auto& state = prep.state;
    std::vector<char> taken(prep.pool.size(), 0);
    std::vector<double> mass(prep.pool.size());
    for (std::size_t p = 0; p < prep.pool.size(); ++p) mass[p] = state.variance_at(prep.pool[p].row);

    SelectionResult out;
    for (std::size_t t = 0; t < req.batch_size; ++t) {
        auto pick = sample_proportional(prep.pool, taken, mass, rng);
        taken[pick] = 1;
        out.selected.push_back(prep.pool[pick].id);
        out.step_scores.push_back(mass[pick]);
        const auto center = prep.pool[pick].row;
        for (std::size_t p = 0; p < prep.pool.size(); ++p) {
            if (taken[p]) continue;
            const double d2 = state.distance2_at(prep.pool[p].row, center);
            // The first center replaces the k(x,x) seeding mass outright.
            mass[p] = t == 0 ? d2 : std::min(mass[p], d2);
        }
    }
    return out;
}

SelectionResult select_coreset_maxdist(const SelectionRequest& req) {
    auto prep = prepare(req);
    const auto& state = prep.state;
    std::vector<char> taken(prep.pool.size(), 0);
    std::vector<double> min_d2(prep.pool.size(), kInf);
    auto add_center = [&](Eigen::Index center) {
        for (std::size_t p = 0; p < prep.pool.size(); ++p)
            if (!taken[p]) min_d2[p] = std::min(min_d2[p], state.distance2_at(prep.pool[p].row, center));
    };
    for (auto r : prep.train_rows) add_center(r);

    SelectionResult out;
    for (std::size_t t = 0; t < req.batch_size; ++t) {
        std::size_t pick;
        double score;
        if (t == 0 && prep.train_rows.empty()) {
            pick = argmax_untaken(prep.pool, taken, [&](std::size_t p) { return state.variance_at(prep.pool[p].row); });
            score = kInf;
        } else {
            double d2 = 0.0;
            pick = argmax_untaken(prep.pool, taken, [&](std::size_t p) { return min_d2[p]; }, &d2);
            score = std::sqrt(std::max(0.0, d2));
        }
        taken[pick] = 1;
        out.selected.push_back(prep.pool[pick].id);
        out.step_scores.push_back(score);
        add_center(prep.pool[pick].row);
    }
    return out;
}

SelectionResult select_lcmd(const SelectionRequest& req) {
    auto prep = prepare(req);
    const auto& state = prep.state;
    const std::size_t n = prep.pool.size();
    std::vector<char> taken(n, 0);

    // Centers in insertion order; ties in assignment go to the lowest center id.
    std::vector<PointId> center_ids;
    std::vector<double> min_d2(n, kInf);
    std::vector<std::size_t> owner(n, std::string::npos);
    auto add_center = [&](PointId id, Eigen::Index row) {
        const std::size_t c = center_ids.size();
        center_ids.push_back(id);
        for (std::size_t p = 0; p < n; ++p) {
            if (taken[p]) continue;
            const double d2 = state.distance2_at(prep.pool[p].row, row);
            if (d2 < min_d2[p] || (d2 == min_d2[p] && id < center_ids[owner[p]])) {
                min_d2[p] = d2;
                owner[p] = c;
            }
        }
    };
    for (std::size_t t = 0; t < req.train_ids.size(); ++t) add_center(req.train_ids[t], prep.train_rows[t]);

    SelectionResult out;
    for (std::size_t t = 0; t < req.batch_size; ++t) {
        std::size_t pick = std::string::npos;
        double score = 0.0;
        if (center_ids.empty()) {
            pick = argmax_untaken(prep.pool, taken, [&](std::size_t p) { return state.variance_at(prep.pool[p].row); },
                                  &score);
        } else {
            std::vector<double> weight(center_ids.size(), 0.0);
            for (std::size_t p = 0; p < n; ++p)
                if (!taken[p]) weight[owner[p]] += min_d2[p];
            std::size_t heaviest = std::string::npos;
            for (std::size_t c = 0; c < center_ids.size(); ++c) {
                if (heaviest == std::string::npos || weight[c] > weight[heaviest] ||
                    (weight[c] == weight[heaviest] && center_ids[c] < center_ids[heaviest]))
                    heaviest = c;
            }
            if (!(weight[heaviest] > 0.0)) {
                pick = argmax_untaken(prep.pool, taken, [](std::size_t) { return 0.0; });
                score = 0.0;
            } else {
                pick = argmax_untaken(
                    prep.pool, taken, [&](std::size_t p) { return owner[p] == heaviest ? min_d2[p] : -kInf; }, &score);
            }
        }
        taken[pick] = 1;
        out.selected.push_back(prep.pool[pick].id);
        out.step_scores.push_back(score);
        add_center(prep.pool[pick].id, prep.pool[pick].row);
    }
    return out;
}

namespace {

/// Greedy forward picks for BAIT; returns (pool positions, totals after each pick).
std::pair<std::vector<std::size_t>, std::vector<double>> bait_forward(const Prepared& prep, std::size_t count) {
    const double noise = prep.state.noise().variance();
    std::vector<Eigen::Index> pool_rows;
    for (const auto& c : prep.pool) pool_rows.push_back(c.row);
    const auto n = static_cast<Eigen::Index>(pool_rows.size());

    std::vector<char> taken(prep.pool.size(), 0);
    std::vector<std::size_t> picks;
    std::vector<double> totals;
    KernelState state = prep.state;
    RowMatrix w(n, state.whitened().cols());
    for (std::size_t t = 0; t < count; ++t) {
        for (Eigen::Index r = 0; r < n; ++r) w.row(r) = state.whitened().row(pool_rows[static_cast<std::size_t>(r)]);
        // sum_y k(y,x)^2 = psi_x^T (W^T W) psi_x, so every candidate costs O(D^2).
        const RowMatrix m = w.transpose() * w;
        const auto d = w.cols();
        Eigen::RowVectorXd q(d);
        auto best = argmax_untaken(prep.pool, taken, [&](std::size_t p) {
            const double* wr = w.row(static_cast<Eigen::Index>(p)).data();
            for (Eigen::Index j = 0; j < d; ++j) q(j) = sequential_dot(wr, m.row(j).data(), d);
            return sequential_dot(wr, q.data(), d) / (sequential_dot(wr, wr, d) + noise);
        });
        taken[best] = 1;
        picks.push_back(best);
        state = state.condition_on_row(prep.pool[best].row);
        totals.push_back(total_variance(state, pool_rows));
    }
    return {picks, totals};
}

}  // namespace

SelectionResult select_bait_forward(const SelectionRequest& req) {
    auto prep = prepare(req);
    const std::size_t b = req.batch_size;
    SelectionResult out;
    if (!req.options.bait_backward) {
        auto [picks, totals] = bait_forward(prep, b);
        for (auto p : picks) out.selected.push_back(prep.pool[p].id);
        out.step_scores = std::move(totals);
        return out;
    }

    const std::size_t forward = std::min(b + (b + 1) / 2, prep.pool.size());
    auto [picks, totals] = bait_forward(prep, forward);
    std::vector<Eigen::Index> pool_rows;
    for (const auto& c : prep.pool) pool_rows.push_back(c.row);
    const double noise = prep.state.noise().variance();

    // Removing r from S raises the total pool variance by |C A^-1 e_r|^2 / (A^-1)_rr with
    // A = K_SS + sigma^2 I and C = K_PS; A^-1 is recomputed from scratch after each removal.
    while (picks.size() > b) {
        const auto s = static_cast<Eigen::Index>(picks.size());
        Eigen::MatrixXd a(s, s), c(static_cast<Eigen::Index>(pool_rows.size()), s);
        for (Eigen::Index i = 0; i < s; ++i) {
            const auto ri = prep.pool[picks[static_cast<std::size_t>(i)]].row;
            for (Eigen::Index j = 0; j < s; ++j) a(i, j) = prep.state.kernel_at(ri, prep.pool[picks[static_cast<std::size_t>(j)]].row);
            a(i, i) += noise;
            for (Eigen::Index y = 0; y < c.rows(); ++y) c(y, i) = prep.state.kernel_at(pool_rows[static_cast<std::size_t>(y)], ri);
        }
        const Eigen::MatrixXd a_inv = a.ldlt().solve(Eigen::MatrixXd::Identity(s, s));
        const Eigen::MatrixXd ca = c * a_inv;
        std::size_t drop = 0;
        double best_increase = kInf;
        for (Eigen::Index i = 0; i < s; ++i) {
            const double increase = ca.col(i).squaredNorm() / a_inv(i, i);
            const auto id = prep.pool[picks[static_cast<std::size_t>(i)]].id;
            if (increase < best_increase ||
                (increase == best_increase && id < prep.pool[picks[drop]].id)) {
                best_increase = increase;
                drop = static_cast<std::size_t>(i);
            }
        }
        picks.erase(picks.begin() + static_cast<std::ptrdiff_t>(drop));
    }

    KernelState state = prep.state;
    for (auto p : picks) {
        out.selected.push_back(prep.pool[p].id);
        state = state.condition_on_row(prep.pool[p].row);
        out.step_scores.push_back(total_variance(state, pool_rows));
    }
    return out;
}

SelectionResult select(Method method, const SelectionRequest& request) {
    switch (method) {
        case Method::uniform: return select_uniform(request);
        case Method::bald: return select_bald_topk(request);
        case Method::maxdet: return select_maxdet_batchbald(request);
        case Method::badge: return select_badge_kmeanspp(request);
        case Method::coreset: return select_coreset_maxdist(request);
        case Method::lcmd: return select_lcmd(request);
        case Method::bait: return select_bait_forward(request);
    }
    throw InputError("unknown selection method");
}

std::string format_selection_json(Method method, const SelectionResult& result) {
    nlohmann::json j;
    j["method"] = std::string(method_name(method));
    j["selected"] = result.selected;
    auto scores = nlohmann::json::array();
    for (double s : result.step_scores) scores.push_back(std::isfinite(s) ? nlohmann::json(s) : nlohmann::json());
    j["step_scores"] = std::move(scores);
    return j.dump(2) + "\n";
}

}  // namespace bbal
