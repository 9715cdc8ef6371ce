#include "bbal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "bbal/errors.hpp"
#include "bbal/io.hpp"
#include "bbal/kernel.hpp"

namespace bbal {

// ---------------------------------------------------------------------------
// Config

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw InputError(std::string(where) + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw InputError(std::string(where) + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InputError(std::string("config key '") + key + "': " + e.what());
    }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    reject_unknown(j,
                   {"dataset", "initial_train", "batch_size", "rounds", "ensemble", "methods", "sigma", "trials",
                    "seed", "standardize", "test_fraction", "evaluation", "bait_backward", "record_timing", "output"},
                   "config");
    ExperimentConfig cfg;
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        reject_unknown(d, {"generator", "n", "noise_sd", "seed", "path"}, "dataset");
        if (d.contains("path")) {
            if (d.contains("generator")) throw InputError("dataset: give either 'generator' or 'path', not both");
            cfg.generator.reset();
            cfg.dataset_path = d.at("path").get<std::string>();
        } else {
            GeneratorConfig g;
            read(d, "generator", g.name);
            read(d, "n", g.n);
            read(d, "noise_sd", g.noise_sd);
            if (d.contains("seed")) g.seed = d.at("seed").get<std::uint64_t>();
            if (g.name != "friedman1") throw InputError("dataset: unknown generator '" + g.name + "'");
            cfg.generator = g;
        }
    }
    read(j, "initial_train", cfg.initial_train);
    read(j, "batch_size", cfg.batch_size);
    read(j, "rounds", cfg.rounds);
    if (j.contains("ensemble")) {
        const auto& e = j.at("ensemble");
        reject_unknown(e,
                       {"kind", "members", "seed", "bootstrap", "member_randomness", "feature_count", "ridge",
                        "max_depth", "min_leaf", "features_per_split", "noise_sigma"},
                       "ensemble");
        std::string kind = std::string(kind_name(cfg.ensemble.kind));
        read(e, "kind", kind);
        auto parsed = parse_kind(kind);
        if (!parsed) throw InputError("ensemble: unknown kind '" + kind + "'");
        cfg.ensemble = EnsembleSpec::defaults(*parsed);
        read(e, "members", cfg.ensemble.member_count);
        read(e, "seed", cfg.ensemble.seed);
        read(e, "bootstrap", cfg.ensemble.bootstrap);
        read(e, "member_randomness", cfg.ensemble.member_randomness);
        read(e, "feature_count", cfg.ensemble.rff.feature_count);
        read(e, "ridge", cfg.ensemble.rff.ridge);
        read(e, "max_depth", cfg.ensemble.trees.max_depth);
        read(e, "min_leaf", cfg.ensemble.trees.min_leaf);
        read(e, "features_per_split", cfg.ensemble.trees.features_per_split);
        read(e, "noise_sigma", cfg.ensemble.bayes.noise_sigma);
    }
    if (j.contains("methods")) {
        cfg.methods.clear();
        for (const auto& m : j.at("methods")) {
            auto parsed = parse_method(m.get<std::string>());
            if (!parsed) throw InputError("methods: unknown method '" + m.get<std::string>() + "'");
            cfg.methods.push_back(*parsed);
        }
    }
    read(j, "sigma", cfg.sigma);
    read(j, "trials", cfg.trials);
    read(j, "seed", cfg.seed);
    read(j, "standardize", cfg.standardize);
    read(j, "test_fraction", cfg.test_fraction);
    if (j.contains("evaluation")) {
        auto mode = j.at("evaluation").get<std::string>();
        if (mode == "per_member")
            cfg.evaluation = EvaluationMode::per_member;
        else if (mode == "ensemble_mean")
            cfg.evaluation = EvaluationMode::ensemble_mean;
        else
            throw InputError("evaluation: expected 'per_member' or 'ensemble_mean'");
    }
    read(j, "bait_backward", cfg.selection.bait_backward);
    read(j, "record_timing", cfg.record_timing);
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    NoiseModel check(cfg.sigma);
    (void)check;
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
    try {
        return parse_config(j);
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    if (cfg.dataset_path) {
        j["dataset"] = {{"path", cfg.dataset_path->string()}};
    } else if (cfg.generator) {
        j["dataset"] = {{"generator", cfg.generator->name}, {"n", cfg.generator->n}, {"noise_sd", cfg.generator->noise_sd}};
        if (cfg.generator->seed) j["dataset"]["seed"] = *cfg.generator->seed;
    }
    j["initial_train"] = cfg.initial_train;
    j["batch_size"] = cfg.batch_size;
    j["rounds"] = cfg.rounds;
    const auto& e = cfg.ensemble;
    j["ensemble"] = {{"kind", std::string(kind_name(e.kind))},
                     {"members", e.member_count},
                     {"seed", e.seed},
                     {"bootstrap", e.bootstrap},
                     {"member_randomness", e.member_randomness},
                     {"feature_count", e.rff.feature_count},
                     {"ridge", e.rff.ridge},
                     {"max_depth", e.trees.max_depth},
                     {"min_leaf", e.trees.min_leaf},
                     {"features_per_split", e.trees.features_per_split},
                     {"noise_sigma", e.bayes.noise_sigma}};
    auto methods = json::array();
    for (auto m : cfg.methods) methods.push_back(std::string(method_name(m)));
    j["methods"] = methods;
    j["sigma"] = cfg.sigma;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["standardize"] = cfg.standardize;
    j["test_fraction"] = cfg.test_fraction;
    j["evaluation"] = cfg.evaluation == EvaluationMode::per_member ? "per_member" : "ensemble_mean";
    j["bait_backward"] = cfg.selection.bait_backward;
    j["record_timing"] = cfg.record_timing;
    j["output"] = cfg.output.string();
    return j;
}

// ---------------------------------------------------------------------------
// Seeds, data, plans

std::uint64_t trial_seed(std::uint64_t master, std::size_t trial) {
    return mix64({master, 0x7419a1ULL, trial});
}

std::uint64_t round_model_seed(std::uint64_t master, std::size_t trial, std::size_t round) {
    return mix64({trial_seed(master, trial), 0x30de1ULL, round});
}

std::uint64_t round_selection_seed(std::uint64_t master, std::size_t trial, Method method, std::size_t round) {
    return mix64({master, trial, static_cast<std::uint64_t>(method), round});
}

Dataset make_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset_path) return load_dataset_csv(*cfg.dataset_path);
    if (!cfg.generator) throw InputError("config: no dataset source");
    const auto& g = *cfg.generator;
    return generate_friedman1(g.n, g.noise_sd, g.seed.value_or(mix64({cfg.seed, 0xda7aULL})));
}

namespace {

std::size_t test_count(const ExperimentConfig& cfg, Eigen::Index n) {
    const auto total = static_cast<double>(n);
    auto count = static_cast<std::size_t>(std::llround(total * cfg.test_fraction));
    return std::clamp<std::size_t>(count, 1, static_cast<std::size_t>(n) - 1);
}

}  // namespace

void validate_config(const ExperimentConfig& cfg, Eigen::Index dataset_size) {
    if (cfg.initial_train < 1) throw InputError("config: initial_train must be at least 1");
    if (cfg.batch_size < 1) throw InputError("config: batch_size must be at least 1");
    if (cfg.trials < 1) throw InputError("config: trials must be at least 1");
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) throw InputError("config: test_fraction must be in (0, 1)");
    if (dataset_size < 2) throw InputError("config: dataset needs at least 2 rows");
    NoiseModel check(cfg.sigma);
    (void)check;
    const std::size_t pool = static_cast<std::size_t>(dataset_size) - test_count(cfg, dataset_size);
    if (cfg.initial_train + cfg.batch_size * cfg.rounds > pool)
        throw InputError("config: label exhaustion: initial_train + batch_size * rounds = " +
                         std::to_string(cfg.initial_train + cfg.batch_size * cfg.rounds) + " exceeds pool size " +
                         std::to_string(pool));
    if (cfg.ensemble.kind == EnsembleKind::bagged_trees && cfg.initial_train < 2)
        throw InputError("config: tree ensembles need initial_train >= 2");
}

TrialPlan make_trial_plan(const ExperimentConfig& cfg, Eigen::Index dataset_size, std::size_t trial) {
    const auto seed = trial_seed(cfg.seed, trial);
    std::vector<PointId> order(static_cast<std::size_t>(dataset_size));
    std::iota(order.begin(), order.end(), PointId{0});
    Rng split_rng(mix64({seed, 1}));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[split_rng.below(i + 1)]);

    const std::size_t n_test = test_count(cfg, dataset_size);
    TrialPlan plan;
    plan.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    plan.pool.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(plan.test.begin(), plan.test.end());
    std::sort(plan.pool.begin(), plan.pool.end());

    std::vector<PointId> candidates = plan.pool;
    Rng init_rng(mix64({seed, 2}));
    const std::size_t k = std::min(cfg.initial_train, candidates.size());
    for (std::size_t i = 0; i < k; ++i) {
        auto j = i + init_rng.below(candidates.size() - i);
        std::swap(candidates[i], candidates[j]);
        plan.initial.push_back(candidates[i]);
    }
    return plan;
}

Standardizer Standardizer::identity(Eigen::Index dimension) {
    return {Eigen::RowVectorXd::Zero(dimension), Eigen::RowVectorXd::Ones(dimension), 0.0, 1.0};
}

Standardizer Standardizer::fit(const Dataset& data, std::span<const PointId> rows) {
    if (rows.empty()) throw InputError("standardizer: no rows");
    const auto d = data.dimension();
    const auto n = static_cast<double>(rows.size());
    Standardizer s = identity(d);
    for (auto r : rows) {
        s.feature_mean += data.features.row(static_cast<Eigen::Index>(r));
        s.target_mean += data.targets(static_cast<Eigen::Index>(r));
    }
    s.feature_mean /= n;
    s.target_mean /= n;
    Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(d);
    double target_var = 0.0;
    for (auto r : rows) {
        var += (data.features.row(static_cast<Eigen::Index>(r)) - s.feature_mean).array().square().matrix();
        const double dy = data.targets(static_cast<Eigen::Index>(r)) - s.target_mean;
        target_var += dy * dy;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
        const double sd = std::sqrt(var(j) / n);
        s.feature_scale(j) = sd > 1e-12 ? sd : 1.0;
    }
    const double target_sd = std::sqrt(target_var / n);
    s.target_scale = target_sd > 1e-12 ? target_sd : 1.0;
    return s;
}

RowMatrix Standardizer::transform_features(const RowMatrix& x) const {
    return ((x.rowwise() - feature_mean).array().rowwise() / feature_scale.array()).matrix();
}

Dataset Standardizer::apply(const Dataset& data) const {
    Dataset out{transform_features(data.features), (data.targets.array() - target_mean) / target_scale, data.name};
    return out;
}

// ---------------------------------------------------------------------------
// Loop

namespace {

RowMatrix gather_rows(const RowMatrix& x, std::span<const PointId> ids) {
    RowMatrix out(static_cast<Eigen::Index>(ids.size()), x.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(ids[i]));
    return out;
}

std::vector<RoundRecord> run_unit(const ExperimentConfig& cfg, const Dataset& data, Method method, std::size_t trial) {
    const auto plan = make_trial_plan(cfg, data.size(), trial);
    std::vector<PointId> train = plan.initial;
    std::sort(train.begin(), train.end());
    std::set<PointId> remaining(plan.pool.begin(), plan.pool.end());
    for (auto id : train) remaining.erase(id);

    Eigen::VectorXd test_targets(static_cast<Eigen::Index>(plan.test.size()));
    for (std::size_t i = 0; i < plan.test.size(); ++i)
        test_targets(static_cast<Eigen::Index>(i)) = data.targets(static_cast<Eigen::Index>(plan.test[i]));

    std::vector<RoundRecord> records;
    for (std::size_t round = 0; round <= cfg.rounds; ++round) {
        const auto started = std::chrono::steady_clock::now();
        RoundRecord rec{std::string(method_name(method)), trial, round, train.size(), {}, 0.0, {}};
        try {
            const auto scaler = cfg.standardize ? Standardizer::fit(data, train) : Standardizer::identity(data.dimension());
            const Dataset scaled = scaler.apply(data);
            EnsembleSpec spec = cfg.ensemble;
            spec.seed = mix64({round_model_seed(cfg.seed, trial, round), cfg.ensemble.seed});
            const auto model = fit_ensemble(scaled, train, spec);

            RowMatrix test_pred = model.predict_members(gather_rows(scaled.features, plan.test)).values();
            test_pred = ((test_pred.array() * scaler.target_scale) + scaler.target_mean).matrix();
            rec.metrics = compute_metrics(test_pred, test_targets, cfg.evaluation);

            if (round < cfg.rounds) {
                // Kernel over the labeled and unlabeled pool only; test rows never reach selection.
                std::vector<PointId> kernel_ids = train;
                kernel_ids.insert(kernel_ids.end(), remaining.begin(), remaining.end());
                auto predictions = model.predict_members(gather_rows(scaled.features, kernel_ids), kernel_ids);
                SelectionRequest req{KernelState(center_predictions(predictions), NoiseModel(cfg.sigma)),
                                     {remaining.begin(), remaining.end()},
                                     train,
                                     cfg.batch_size,
                                     UniformStream::seeded(round_selection_seed(cfg.seed, trial, method, round)),
                                     cfg.selection};
                auto result = select(method, req);
                for (auto id : result.selected) {
                    if (remaining.erase(id) != 1) throw Error("selection returned an unavailable id");
                    train.push_back(id);
                }
                // Models see the labeled set in id order, so equal sets give equal fits.
                std::sort(train.begin(), train.end());
                rec.acquired = std::move(result.selected);
            }
        } catch (const std::exception& e) {
            throw Error("method " + rec.method + ", trial " + std::to_string(trial) + ", round " +
                        std::to_string(round) + ": " + e.what());
        }
        if (cfg.record_timing)
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace

std::vector<RoundRecord> run_active_learning(const ExperimentConfig& cfg, std::size_t jobs) {
    return run_active_learning(cfg, make_dataset(cfg), jobs);
}

std::vector<RoundRecord> run_active_learning(const ExperimentConfig& cfg, const Dataset& data, std::size_t jobs) {
    data.validate();
    validate_config(cfg, data.size());

    std::vector<Method> methods{Method::uniform};
    for (auto m : cfg.methods)
        if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);

    const std::size_t units = methods.size() * cfg.trials;
    std::vector<std::vector<RoundRecord>> results(units);
    std::vector<std::exception_ptr> errors(units);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t u = next++; u < units; u = next++) {
            try {
                results[u] = run_unit(cfg, data, methods[u / cfg.trials], u % cfg.trials);
            } catch (...) {
                errors[u] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(jobs, 1, units);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<RoundRecord> out;
    for (auto& r : results) out.insert(out.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    return out;
}

// ---------------------------------------------------------------------------
// Results

std::string format_results(std::vector<RoundRecord> records) {
    std::stable_sort(records.begin(), records.end(), [](const RoundRecord& a, const RoundRecord& b) {
        return std::tie(a.method, a.trial, a.round) < std::tie(b.method, b.trial, b.round);
    });
    std::string out = "method,trial,round,n_train,metric,value,seconds\n";
    constexpr auto names = metric_names();
    for (const auto& r : records) {
        const auto values = r.metrics.values();
        const std::string prefix =
            r.method + "," + std::to_string(r.trial) + "," + std::to_string(r.round) + "," + std::to_string(r.n_train) + ",";
        const std::string seconds = io::format_double(r.seconds);
        for (std::size_t m = 0; m < names.size(); ++m)
            out += prefix + std::string(names[m]) + "," + io::format_double(values[m]) + "," + seconds + "\n";
    }
    return out;
}

void emit_results(const std::vector<RoundRecord>& records, const std::filesystem::path& path) {
    io::write_atomic(path, format_results(records));
}

}  // namespace bbal
