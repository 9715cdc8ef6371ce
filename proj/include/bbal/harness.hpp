#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bbal/dataset.hpp"
#include "bbal/ensemble.hpp"
#include "bbal/metrics.hpp"
#include "bbal/selection.hpp"

namespace bbal {

struct GeneratorConfig {
    std::string name = "friedman1";
    std::size_t n = 2500;
    double noise_sd = 1.0;
    /// Defaults to a value derived from the experiment's master seed.
    std::optional<std::uint64_t> seed;
};

struct ExperimentConfig {
    /// Exactly one of these describes the data.
    std::optional<GeneratorConfig> generator = GeneratorConfig{};
    std::optional<std::filesystem::path> dataset_path;

    std::size_t initial_train = 16;
    std::size_t batch_size = 32;
    std::size_t rounds = 8;
    EnsembleSpec ensemble = EnsembleSpec::defaults(EnsembleKind::random_feature_ridge);
    /// Uniform is always run, whether listed or not.
    std::vector<Method> methods = {Method::maxdet};
    double sigma = 0.1;
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    bool standardize = true;
    double test_fraction = 0.2;
    EvaluationMode evaluation = EvaluationMode::per_member;
    SelectionOptions selection{};
    /// Wall-clock seconds are written as 0 unless enabled, so results stay byte-reproducible.
    bool record_timing = false;
    std::filesystem::path output = "results.csv";
};

/// Parses the JSON config (unknown keys are rejected); see README for the schema.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Full effective configuration, every default spelled out.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

struct RoundRecord {
    std::string method;
    std::size_t trial = 0;
    std::size_t round = 0;
    std::size_t n_train = 0;
    MetricSet metrics;
    double seconds = 0.0;
    /// Ids acquired at the end of this round (empty for the last round).
    std::vector<PointId> acquired;
};

/// Pool/test split and initial labeled set of one trial. Shared by every method.
struct TrialPlan {
    std::vector<PointId> pool;      // sorted
    std::vector<PointId> test;      // sorted
    std::vector<PointId> initial;   // draw order
};

std::uint64_t trial_seed(std::uint64_t master, std::size_t trial);
/// Model seed for one round; independent of the method so methods are paired.
std::uint64_t round_model_seed(std::uint64_t master, std::size_t trial, std::size_t round);
/// Selection stream seed; depends on the method's stable code, not its list position.
std::uint64_t round_selection_seed(std::uint64_t master, std::size_t trial, Method method, std::size_t round);

/// Materializes the configured dataset (generated or loaded).
Dataset make_dataset(const ExperimentConfig& cfg);

/// Throws InputError if the schedule cannot be served (label exhaustion etc.).
void validate_config(const ExperimentConfig& cfg, Eigen::Index dataset_size);

TrialPlan make_trial_plan(const ExperimentConfig& cfg, Eigen::Index dataset_size, std::size_t trial);

/// Affine maps fitted on the labeled rows: features and target to zero mean, unit variance.
struct Standardizer {
    Eigen::RowVectorXd feature_mean;
    Eigen::RowVectorXd feature_scale;
    double target_mean = 0.0;
    double target_scale = 1.0;

    static Standardizer fit(const Dataset& data, std::span<const PointId> rows);
    static Standardizer identity(Eigen::Index dimension);
    Dataset apply(const Dataset& data) const;
    RowMatrix transform_features(const RowMatrix& x) const;
    double to_original(double standardized) const { return target_mean + target_scale * standardized; }
};

/// Runs methods x trials; `jobs` > 1 spreads (method, trial) units over threads with no
/// effect on the output. Records are ordered by (method, trial, round).
std::vector<RoundRecord> run_active_learning(const ExperimentConfig& cfg, std::size_t jobs = 1);
std::vector<RoundRecord> run_active_learning(const ExperimentConfig& cfg, const Dataset& data, std::size_t jobs = 1);

/// Long-format CSV `method,trial,round,n_train,metric,value,seconds`, sorted by
/// (method, trial, round, metric).
std::string format_results(std::vector<RoundRecord> records);
void emit_results(const std::vector<RoundRecord>& records, const std::filesystem::path& path);

}  // namespace bbal
