#include "bbal/prediction_matrix.hpp"

#include <cmath>

#include "bbal/errors.hpp"
#include "bbal/io.hpp"

namespace bbal {

IdIndex::IdIndex(std::vector<PointId> ids) : ids_(std::move(ids)) {
    rows_.reserve(ids_.size());
    for (std::size_t r = 0; r < ids_.size(); ++r) {
        if (!rows_.emplace(ids_[r], static_cast<Eigen::Index>(r)).second)
            throw InputError("duplicate point id " + std::to_string(ids_[r]));
    }
}

Eigen::Index IdIndex::row_of(PointId id) const {
    auto it = rows_.find(id);
    if (it == rows_.end()) throw InputError("unknown point id " + std::to_string(id));
    return it->second;
}

PredictionMatrix::PredictionMatrix(std::vector<PointId> ids, RowMatrix values)
    : index_(std::move(ids)), values_(std::move(values)) {
    if (static_cast<Eigen::Index>(index_.size()) != values_.rows())
        throw InputError("prediction matrix has " + std::to_string(values_.rows()) + " rows but " +
                         std::to_string(index_.size()) + " ids");
    if (values_.cols() < 2)
        throw InputError("prediction matrix needs at least 2 members, got " + std::to_string(values_.cols()));
    for (Eigen::Index i = 0; i < values_.rows(); ++i)
        for (Eigen::Index k = 0; k < values_.cols(); ++k)
            if (!std::isfinite(values_(i, k)))
                throw InputError("non-finite prediction at (" + std::to_string(i) + ", " + std::to_string(k) + ")");
}

PredictionMatrix PredictionMatrix::subset(std::span<const PointId> ids) const {
    RowMatrix out(static_cast<Eigen::Index>(ids.size()), values_.cols());
    for (std::size_t r = 0; r < ids.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = values_.row(index_.row_of(ids[r]));
    return PredictionMatrix({ids.begin(), ids.end()}, std::move(out));
}

namespace {

std::string expected_header(std::size_t members) {
    std::string h = "id";
    for (std::size_t k = 0; k < members; ++k) h += ",m" + std::to_string(k);
    return h;
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
    throw InputError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

PredictionMatrix parse_prediction_csv(std::string_view text) {
    auto lines = io::split_lines(text);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw InputError("line 1: missing header");

    auto header = io::split_fields(lines[0]);
    if (header.size() < 3) fail_at(1, "header needs id and at least two member columns");
    const std::size_t members = header.size() - 1;
    if (lines[0] != expected_header(members)) fail_at(1, "header must be '" + expected_header(members) + "'");

    std::vector<PointId> ids;
    RowMatrix values(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(members));
    ids.reserve(lines.size() - 1);
    for (std::size_t l = 1; l < lines.size(); ++l) {
        const std::size_t line_no = l + 1;
        auto fields = io::split_fields(lines[l]);
        if (fields.size() != members + 1)
            fail_at(line_no, "expected " + std::to_string(members + 1) + " fields, got " + std::to_string(fields.size()));
        auto id = io::parse_uint(fields[0]);
        if (!id) fail_at(line_no, "invalid id '" + std::string(fields[0]) + "'");
        ids.push_back(*id);
        for (std::size_t k = 0; k < members; ++k) {
            auto v = io::parse_double(fields[k + 1]);
            if (!v || !std::isfinite(*v)) fail_at(line_no, "invalid value in column m" + std::to_string(k));
            values(static_cast<Eigen::Index>(l - 1), static_cast<Eigen::Index>(k)) = *v;
        }
    }
    IdIndex check;
    try {
        check = IdIndex(ids);
    } catch (const InputError& e) {
        // Locate the duplicate for a line-numbered diagnostic.
        std::unordered_map<PointId, std::size_t> seen;
        for (std::size_t r = 0; r < ids.size(); ++r)
            if (!seen.emplace(ids[r], r).second) fail_at(r + 2, e.what());
        throw;
    }
    return PredictionMatrix(std::move(ids), std::move(values));
}

PredictionMatrix read_prediction_csv(const std::filesystem::path& path) {
    return parse_prediction_csv(io::read_file(path));
}

std::string format_prediction_csv(const PredictionMatrix& predictions) {
    std::string out = expected_header(static_cast<std::size_t>(predictions.member_count()));
    out += '\n';
    const auto& v = predictions.values();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        out += std::to_string(predictions.ids()[static_cast<std::size_t>(i)]);
        for (Eigen::Index k = 0; k < v.cols(); ++k) {
            out += ',';
            out += io::format_double(v(i, k));
        }
        out += '\n';
    }
    return out;
}

void write_prediction_csv(const PredictionMatrix& predictions, const std::filesystem::path& path) {
    io::write_atomic(path, format_prediction_csv(predictions));
}

}  // namespace bbal
