#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "bbal/prediction_matrix.hpp"

namespace bbal {

/// Features (N x d) and targets (N). Row r has point id r.
struct Dataset {
    RowMatrix features;
    Eigen::VectorXd targets;
    std::string name;

    Eigen::Index size() const { return features.rows(); }
    Eigen::Index dimension() const { return features.cols(); }

    /// Throws InputError unless N >= 1, d >= 1, sizes agree and all entries are finite.
    void validate() const;
};

/// Friedman #1: ten U[0,1] features, y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5 + eps,
/// eps ~ N(0, noise_sd^2). Features x6..x10 do not enter the target.
Dataset generate_friedman1(std::size_t n, double noise_sd, std::uint64_t seed);

/// Noise-free Friedman #1 response for one feature row (at least 5 entries).
double friedman1_response(std::span<const double> x);

/// CSV with header `f0,...,f{d-1},target`.
Dataset parse_dataset_csv(std::string_view text);
Dataset load_dataset_csv(const std::filesystem::path& path);
std::string format_dataset_csv(const Dataset& data);
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace bbal
