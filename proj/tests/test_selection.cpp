#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>

#include <json.hpp>

#include "bbal/errors.hpp"
#include "bbal/selection.hpp"
#include "selection_oracles.hpp"

using namespace bbal;
using namespace bbal::testing;

namespace {

KernelState state_from(const std::vector<PointId>& ids, const RowMatrix& features, double sigma) {
    return KernelState(FeatureMap(ids, features), NoiseModel(sigma));
}

void check_batch_invariants(const SelectionRequest& req, const SelectionResult& res) {
    CHECK(res.selected.size() == req.batch_size);
    CHECK(res.step_scores.size() == req.batch_size);
    std::set<PointId> seen(res.selected.begin(), res.selected.end());
    CHECK(seen.size() == res.selected.size());
    for (auto id : res.selected) CHECK(std::find(req.pool_ids.begin(), req.pool_ids.end(), id) != req.pool_ids.end());
}

std::vector<PointId> sorted(std::vector<PointId> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

// ---------------------------------------------------------------- validation

TEST_CASE("validate rejects malformed requests") {
    auto inst = make_instance(1, 6, 2);
    auto base = inst.request(2);
    auto r = base;
    r.pool_ids.clear();
    CHECK_THROWS_AS(validate(r), InputError);
    r = base;
    r.batch_size = 0;
    CHECK_THROWS_AS(validate(r), InputError);
    r = base;
    r.pool_ids.push_back(r.pool_ids[0]);
    CHECK_THROWS_AS(validate(r), InputError);
    r = base;
    r.train_ids.push_back(r.pool_ids[0]);
    CHECK_THROWS_AS(validate(r), InputError);
    r = base;
    r.pool_ids.push_back(99999);
    CHECK_THROWS_AS(validate(r), InputError);
    r = base;
    r.batch_size = r.pool_ids.size() + 1;
    for (auto m : all_methods()) CHECK_THROWS_AS(select(m, r), InfeasibleError);
}

TEST_CASE("method names round-trip and aliases parse") {
    for (auto m : all_methods()) CHECK(parse_method(method_name(m)) == m);
    CHECK(parse_method("random") == Method::uniform);
    CHECK(parse_method("batchbald") == Method::maxdet);
    CHECK_FALSE(parse_method("nope").has_value());
}

// ---------------------------------------------------------------- uniform

TEST_CASE("uniform: B=|pool| selects the entire pool") {
    auto inst = make_instance(2, 9, 3);
    auto res = select_uniform(inst.request(6));
    CHECK(sorted(res.selected) == sorted(inst.pool));
}

TEST_CASE("uniform: constant-zero stream selects ascending lowest ids") {
    auto inst = make_instance(3, 10, 2);
    auto res = select_uniform(inst.request(4, UniformStream::constant(0.0)));
    auto expect = sorted(inst.pool);
    expect.resize(4);
    CHECK(res.selected == expect);
}

TEST_CASE("uniform: a stream just below one picks the largest remaining id") {
    auto inst = make_instance(4, 8, 0);
    auto res = select_uniform(inst.request(3, UniformStream::constant(std::nextafter(1.0, 0.0))));
    auto s = sorted(inst.pool);
    CHECK(res.selected == std::vector<PointId>{s[7], s[6], s[5]});
}

// ---------------------------------------------------------------- BALD top-k

TEST_CASE("bald: B=1 is the argmax of posterior variance") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto inst = make_instance(100 + seed, 10, 3);
        auto res = select_bald_topk(inst.request(1));
        PointId best = 0;
        double best_var = -1.0;
        for (auto id : sorted(inst.pool)) {
            const double v = inst.posterior(inst.index(id), inst.index(id));
            if (v > best_var) best_var = v, best = id;
        }
        CHECK(res.selected[0] == best);
    }
}

TEST_CASE("bald: duplicated points appear consecutively") {
    Rng rng(5);
    RowMatrix mu = random_matrix(6, 5, rng);
    mu.row(4) = mu.row(1) * 3.0;  // the largest-variance pair
    mu.row(1) = mu.row(4);
    PredictionMatrix p(iota_ids(6), mu);
    SelectionRequest req{KernelState(center_predictions(p), NoiseModel(0.1)), iota_ids(6), {}, 3, UniformStream::seeded(0), {}};
    auto res = select_bald_topk(req);
    CHECK(res.selected[0] == 1);
    CHECK(res.selected[1] == 4);
    CHECK(res.step_scores[0] == res.step_scores[1]);
}

TEST_CASE("bald: 12-point instances match a brute-force sort") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto inst = make_instance(200 + seed, 12, 3);
        const double noise = inst.sigma * inst.sigma;
        std::vector<std::pair<double, PointId>> scored;
        for (auto id : inst.pool) {
            const auto i = inst.index(id);
            scored.emplace_back(-0.5 * std::log(1.0 + inst.posterior(i, i) / noise), id);
        }
        std::sort(scored.begin(), scored.end());
        auto res = select_bald_topk(inst.request(5));
        for (std::size_t t = 0; t < 5; ++t) {
            CHECK(res.selected[t] == scored[t].second);
            CHECK(res.step_scores[t] == doctest::Approx(-scored[t].first).epsilon(1e-9));
        }
    }
}

// ---------------------------------------------------------------- MaxDet

TEST_CASE("maxdet: duplicate pair plus a distinct point") {
    // a and a' identical with variance 1; c orthogonal with variance 0.9025.
    RowMatrix phi(3, 2);
    phi << 1.0, 0.0, 1.0, 0.0, 0.0, 0.95;
    auto kernel = state_from({0, 1, 2}, phi, 0.1);
    SelectionRequest req{kernel, {0, 1, 2}, {}, 2, UniformStream::seeded(0), {}};
    auto res = select_maxdet_batchbald(req);
    CHECK(res.selected == std::vector<PointId>{0, 2});
    // Hand computation: after conditioning on a, var(a') = 1 * 0.01 / 1.01, far below 0.9025.
    CHECK(kernel.condition_on(PointId{0}).kernel_value(1, 1) == doctest::Approx(0.01 / 1.01).epsilon(1e-14));
    CHECK(res.step_scores[0] == doctest::Approx(0.5 * std::log(101.0)).epsilon(1e-14));
    CHECK(res.step_scores[1] == doctest::Approx(0.5 * std::log1p(0.9025 / 0.01)).epsilon(1e-14));
    // Top-k would take both duplicates.
    CHECK(select_bald_topk(req).selected == std::vector<PointId>{0, 1});
}

TEST_CASE("maxdet: B=1 agrees with bald top-k") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto inst = make_instance(300 + seed, 11, seed % 4);
        CHECK(select_maxdet_batchbald(inst.request(1)).selected == select_bald_topk(inst.request(1)).selected);
    }
}

TEST_CASE("maxdet: stepwise winners match determinant ratios; greedy within 1-1/e of the optimum") {
    const double bound = 1.0 - 1.0 / std::numbers::e;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto inst = make_instance(400 + seed, 12, 0, 5);
        auto res = select_maxdet_batchbald(inst.request(3));
        auto oracle = oracle_maxdet(inst, 3);
        CHECK(res.selected == oracle.selected);
        CHECK(scores_match(res.step_scores, oracle.scores, 1e-8));

        const double noise = inst.sigma * inst.sigma;
        std::vector<Eigen::Index> chosen;
        for (auto id : res.selected) chosen.push_back(inst.index(id));
        const double greedy = dense_mi(inst.prior, chosen, noise);
        double optimum = 0.0;
        for (Eigen::Index a = 0; a < 12; ++a)
            for (Eigen::Index b = a + 1; b < 12; ++b)
                for (Eigen::Index c = b + 1; c < 12; ++c) optimum = std::max(optimum, dense_mi(inst.prior, {a, b, c}, noise));
        CHECK(greedy >= bound * optimum);
        CHECK(greedy <= optimum * (1.0 + 1e-12));
    }
}

TEST_CASE("maxdet: oracle agreement with training points") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto inst = make_instance(450 + seed, 12, 1 + seed % 4);
        CHECK(select_maxdet_batchbald(inst.request(4)).selected == oracle_maxdet(inst, 4).selected);
    }
}

TEST_CASE("maxdet: step scores sum to the batch mutual information under the train-conditioned kernel") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto inst = make_instance(500 + seed, 14, 1 + seed % 5);
        auto req = inst.request(5);
        auto res = select_maxdet_batchbald(req);
        double sum = 0.0;
        for (double s : res.step_scores) sum += s;
        const double mi = batch_mutual_information(req.kernel.condition_on(req.train_ids), res.selected);
        CHECK(std::abs(sum - mi) <= 1e-8 * mi);
        std::vector<Eigen::Index> sel;
        for (auto id : res.selected) sel.push_back(inst.index(id));
        CHECK(std::abs(sum - dense_mi(inst.posterior, sel, inst.sigma * inst.sigma)) <= 1e-8 * mi);
    }
}

// ---------------------------------------------------------------- BADGE

TEST_CASE("badge: B=|pool| selects all") {
    auto inst = make_instance(6, 7, 2);
    CHECK(sorted(select_badge_kmeanspp(inst.request(5)).selected) == sorted(inst.pool));
}

TEST_CASE("badge: zero stream picks the lowest-id positive-mass candidate each step") {
    // id 0 has zero variance, so it is skipped on the first step.
    RowMatrix phi(4, 2);
    phi << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
    SelectionRequest req{state_from({0, 1, 2, 3}, phi, 0.1), {0, 1, 2, 3}, {}, 3, UniformStream::constant(0.0), {}};
    auto res = select_badge_kmeanspp(req);
    // Step 1: masses (0,1,1,2) -> id 1. Step 2: d^2 to (1,0) = (1,-,2,1) -> id 0.
    // Step 3: min d^2 to {(1,0),(0,0)} = (-,-,1,1) -> id 2.
    CHECK(res.selected == std::vector<PointId>{1, 0, 2});
    CHECK(res.step_scores == std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("badge: kernel distances match direct feature arithmetic") {
    Rng rng(7);
    RowMatrix phi = random_matrix(4, 3, rng);
    auto s = state_from(iota_ids(4), phi, 0.2);
    for (Eigen::Index a = 0; a < 4; ++a)
        for (Eigen::Index b = 0; b < 4; ++b) {
            double direct = 0.0;
            for (Eigen::Index k = 0; k < 3; ++k) direct += (phi(a, k) - phi(b, k)) * (phi(a, k) - phi(b, k));
            CHECK(s.distance2_at(a, b) == doctest::Approx(direct).epsilon(1e-13));
        }
}

TEST_CASE("badge: replay with a Gram-space sampling oracle") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto inst = make_instance(600 + seed, 12, seed % 4);
        auto res = select_badge_kmeanspp(inst.request(5, UniformStream::seeded(seed)));
        auto oracle = oracle_badge(inst, 5, UniformStream::seeded(seed));
        CHECK(res.selected == oracle.selected);
        CHECK(scores_match(res.step_scores, oracle.scores, 1e-8));
    }
}

TEST_CASE("coreset: collinear 0, 1, 10 with train {0}") {
    RowMatrix phi(3, 1);
    phi << 0.0, 1.0, 10.0;
    SelectionRequest req{state_from({0, 1, 2}, phi, 0.1), {1, 2}, {0}, 2, UniformStream::seeded(0), {}};
    auto res = select_coreset_maxdist(req);
    CHECK(res.selected == std::vector<PointId>{2, 1});
    CHECK(res.step_scores[0] == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(res.step_scores[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("coreset: a duplicate of a training point is selected last") {
    RowMatrix phi(4, 2);
    phi << 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 2.0, 2.0;
    SelectionRequest req{state_from({0, 1, 2, 3}, phi, 0.1), {1, 2, 3}, {0}, 3, UniformStream::seeded(0), {}};
    auto res = select_coreset_maxdist(req);
    CHECK(res.selected.back() == 1);
    CHECK(res.step_scores.back() == 0.0);
}

TEST_CASE("coreset: empty train starts at the max-variance point with an infinite score") {
    auto inst = make_instance(8, 9, 0);
    auto res = select_coreset_maxdist(inst.request(3));
    CHECK(res.selected[0] == select_bald_topk(inst.request(1)).selected[0]);
    CHECK(std::isinf(res.step_scores[0]));
}

TEST_CASE("coreset: matches brute-force min-distance recomputation; scores non-increasing") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto inst = make_instance(700 + seed, 12, seed % 3);
        auto res = select_coreset_maxdist(inst.request(6));
        auto oracle = oracle_coreset(inst, 6);
        CHECK(res.selected == oracle.selected);
        CHECK(scores_match(res.step_scores, oracle.scores, 1e-7));
        for (std::size_t t = 1; t < 6; ++t) CHECK(res.step_scores[t] <= res.step_scores[t - 1]);
    }
}

TEST_CASE("lcmd: the heavier cluster wins even though its points are not the farthest") {
    // Centers at 0 (id 0) and 100 (id 1). Loose cluster near 0: 3, -4, 12 (d^2 9+16+144 = 169).
    // Dense cluster near 100: 110, 111, 109 (d^2 100+121+81 = 302). A farthest-point rule would
    // take 12 (d^2 144); the cluster rule takes 111. Conditioning in 1-D rescales every
    // distance by the same factor, so the comparison is unchanged.
    RowMatrix phi(8, 1);
    phi << 0.0, 100.0, 3.0, -4.0, 12.0, 110.0, 111.0, 109.0;
    std::vector<PointId> ids = iota_ids(8);
    auto kernel = state_from(ids, phi, 1.0);
    SelectionRequest req{kernel, {2, 3, 4, 5, 6, 7}, {0, 1}, 1, UniformStream::seeded(0), {}};
    auto res = select_lcmd(req);
    CHECK(res.selected[0] == 6);
}

TEST_CASE("lcmd: all pool points identical to a training point fall back to lowest id") {
    RowMatrix phi(4, 2);
    phi << 1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0;
    SelectionRequest req{state_from({5, 9, 2, 7}, phi, 0.1), {9, 2, 7}, {5}, 3, UniformStream::seeded(0), {}};
    auto res = select_lcmd(req);
    CHECK(res.selected == std::vector<PointId>{2, 7, 9});
    CHECK(res.step_scores == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("lcmd: every pick lies in the heaviest cluster (brute-force assignment oracle)") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto inst = make_instance(800 + seed, 12, seed % 4);
        auto res = select_lcmd(inst.request(5));
        auto oracle = oracle_lcmd(inst, 5);
        CHECK(res.selected == oracle.selected);
        CHECK(scores_match(res.step_scores, oracle.scores, 1e-7));
    }
}

// ---------------------------------------------------------------- BAIT

TEST_CASE("bait: a candidate duplicated across the pool is picked first") {
    RowMatrix phi(6, 2);
    phi << 0.9, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.2, 1.0, 0.0;
    SelectionRequest req{state_from(iota_ids(6), phi, 0.1), iota_ids(6), {}, 1, UniformStream::seeded(0), {}};
    // id 4 has the largest variance, but conditioning on any copy of (1,0) removes far more.
    CHECK(select_bait_forward(req).selected[0] == 1);
}

TEST_CASE("bait: forward picks match brute-force total-variance minimization") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto inst = make_instance(900 + seed, 8 + seed % 5, seed % 3);
        const std::size_t b = 2 + seed % 3;
        auto res = select_bait_forward(inst.request(b));
        auto oracle = oracle_bait_forward(inst, b);
        CHECK(res.selected == oracle.selected);
        CHECK(scores_match(res.step_scores, oracle.scores, 1e-8));
        for (std::size_t t = 1; t < b; ++t) CHECK(res.step_scores[t] <= res.step_scores[t - 1]);
    }
}

TEST_CASE("bait: backward pass matches a brute-force removal oracle") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto inst = make_instance(1000 + seed, 12, seed % 3);
        const std::size_t b = 2 + seed % 3;
        auto req = inst.request(b);
        req.options.bait_backward = true;
        auto res = select_bait_forward(req);
        auto expected = oracle_bait_backward(inst, b);
        CHECK(res.selected == expected);
        CHECK(res.step_scores.back() == doctest::Approx(inst.total_pool_variance(expected)).epsilon(1e-8));
    }
}

TEST_CASE("every method: batch invariants and determinism") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto inst = make_instance(1100 + seed, 15, seed % 4);
        for (auto m : all_methods()) {
            auto req = inst.request(5, UniformStream::seeded(seed));
            auto a = select(m, req), b = select(m, req);
            check_batch_invariants(req, a);
            CHECK(a.selected == b.selected);
            CHECK(a.step_scores == b.step_scores);
            req.options.bait_backward = true;
            check_batch_invariants(req, select(m, req));
        }
    }
}

TEST_CASE("every method: permutation equivariance under relabeling and row permutation") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto inst = make_instance(1200 + seed, 12, seed % 3);
        // Order-preserving relabel (needed for the stochastic methods) and a row shuffle.
        auto relabel = [](PointId id) { return 3 * id + 11; };
        Rng rng(seed);
        std::vector<Eigen::Index> perm(12);
        for (Eigen::Index i = 0; i < 12; ++i) perm[static_cast<std::size_t>(i)] = i;
        for (std::size_t i = 11; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        std::vector<PointId> ids2;
        RowMatrix mu2(12, inst.predictions.values().cols());
        for (Eigen::Index r = 0; r < 12; ++r) {
            const auto src = perm[static_cast<std::size_t>(r)];
            ids2.push_back(relabel(inst.ids[static_cast<std::size_t>(src)]));
            mu2.row(r) = inst.predictions.values().row(src);
        }
        KernelState k2(center_predictions(PredictionMatrix(ids2, mu2)), NoiseModel(inst.sigma));
        std::vector<PointId> pool2, train2;
        for (auto id : inst.pool) pool2.push_back(relabel(id));
        for (auto id : inst.train) train2.push_back(relabel(id));
        std::reverse(pool2.begin(), pool2.end());
        for (auto m : all_methods()) {
            auto a = select(m, inst.request(4, UniformStream::seeded(seed)));
            auto b = select(m, SelectionRequest{k2, pool2, train2, 4, UniformStream::seeded(seed), {}});
            std::vector<PointId> mapped;
            for (auto id : a.selected) mapped.push_back(relabel(id));
            CHECK_MESSAGE(b.selected == mapped, method_name(m));
        }
    }
}

TEST_CASE("rankings are invariant when predictions are scaled (no conditioning involved)") {
    // With an empty train set, bald, coreset and lcmd compare quantities proportional to c^2;
    // maxdet's first pick is the variance argmax. Later maxdet steps and any train
    // conditioning mix c^2 k with the fixed sigma^2, so they are not covered here.
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto inst = make_instance(1300 + seed, 12, 0);
        for (double c : {-2.0, 0.1, 7.0}) {
            PredictionMatrix scaled(inst.ids, inst.predictions.values() * c);
            SelectionRequest req2{KernelState(center_predictions(scaled), NoiseModel(inst.sigma)), inst.pool, {}, 4,
                                  UniformStream::seeded(0), {}};
            for (auto m : {Method::bald, Method::coreset, Method::lcmd})
                CHECK_MESSAGE(select(m, inst.request(4)).selected == select(m, req2).selected, method_name(m));
            auto one = req2;
            one.batch_size = 1;
            CHECK(select_maxdet_batchbald(inst.request(1)).selected == select_maxdet_batchbald(one).selected);
        }
    }
}

TEST_CASE("selection JSON: null for non-finite scores") {
    SelectionResult r{{3, 1}, {std::numeric_limits<double>::infinity(), 0.5}};
    auto text = format_selection_json(Method::coreset, r);
    auto j = nlohmann::json::parse(text);
    CHECK(j["method"] == "coreset");
    CHECK(j["selected"] == nlohmann::json::array({3, 1}));
    CHECK(j["step_scores"][0].is_null());
    CHECK(j["step_scores"][1] == 0.5);
}
