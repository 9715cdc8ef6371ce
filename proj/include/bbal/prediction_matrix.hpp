#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace bbal {

using PointId = std::uint64_t;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Maps point ids to row positions. Ids must be unique.
class IdIndex {
public:
    IdIndex() = default;
    explicit IdIndex(std::vector<PointId> ids);

    std::span<const PointId> ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }
    bool contains(PointId id) const { return rows_.count(id) != 0; }
    /// Throws InputError for an unknown id.
    Eigen::Index row_of(PointId id) const;

private:
    std::vector<PointId> ids_;
    std::unordered_map<PointId, Eigen::Index> rows_;
};

/// N x K ensemble predictions: entry (i, k) is member k's prediction for point ids[i].
/// The only thing the selection side ever learns about a model.
class PredictionMatrix {
public:
    /// Validates: K >= 2, unique ids, matching row count, all values finite.
    PredictionMatrix(std::vector<PointId> ids, RowMatrix values);

    std::span<const PointId> ids() const { return index_.ids(); }
    const IdIndex& index() const { return index_; }
    const RowMatrix& values() const { return values_; }
    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index member_count() const { return values_.cols(); }

    /// Rows restricted to `ids`, in that order.
    PredictionMatrix subset(std::span<const PointId> ids) const;

private:
    IdIndex index_;
    RowMatrix values_;
};

/// CSV contract: header `id,m0,...,m{K-1}`, one row per point, values with 17
/// significant digits, LF endings. Diagnostics carry 1-based line numbers.
PredictionMatrix parse_prediction_csv(std::string_view text);
PredictionMatrix read_prediction_csv(const std::filesystem::path& path);
std::string format_prediction_csv(const PredictionMatrix& predictions);
void write_prediction_csv(const PredictionMatrix& predictions, const std::filesystem::path& path);

}  // namespace bbal
