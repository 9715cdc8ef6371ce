#include "bbal/dataset.hpp"

#include <cmath>
#include <numbers>

#include "bbal/errors.hpp"
#include "bbal/io.hpp"
#include "bbal/rng.hpp"

namespace bbal {

void Dataset::validate() const {
    if (features.rows() < 1 || features.cols() < 1) throw InputError("dataset needs at least one row and one feature");
    if (targets.size() != features.rows()) throw InputError("dataset: target count does not match row count");
    if (!features.allFinite() || !targets.allFinite()) throw InputError("dataset contains non-finite values");
}

double friedman1_response(std::span<const double> x) {
    if (x.size() < 5) throw InputError("friedman1 needs at least 5 features");
    return 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] +
           5.0 * x[4];
}

Dataset generate_friedman1(std::size_t n, double noise_sd, std::uint64_t seed) {
    if (n < 1) throw InputError("friedman1: n must be at least 1");
    if (!std::isfinite(noise_sd) || noise_sd < 0.0) throw InputError("friedman1: noise_sd must be >= 0");
    Rng rng(seed);
    Dataset data{RowMatrix(static_cast<Eigen::Index>(n), 10), Eigen::VectorXd(static_cast<Eigen::Index>(n)), "friedman1"};
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        for (Eigen::Index j = 0; j < 10; ++j) data.features(i, j) = rng.uniform();
        const double eps = rng.normal();
        data.targets(i) = friedman1_response({data.features.row(i).data(), 10}) + noise_sd * eps;
    }
    return data;
}

Dataset parse_dataset_csv(std::string_view text) {
    auto lines = io::split_lines(text);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw InputError("line 1: missing header");
    auto header = io::split_fields(lines[0]);
    if (header.size() < 2 || header.back() != "target")
        throw InputError("line 1: header must be f0,...,f{d-1},target");
    const std::size_t d = header.size() - 1;
    for (std::size_t j = 0; j < d; ++j)
        if (header[j] != "f" + std::to_string(j))
            throw InputError("line 1: expected column 'f" + std::to_string(j) + "'");

    Dataset data{RowMatrix(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(d)),
                 Eigen::VectorXd(static_cast<Eigen::Index>(lines.size() - 1)), ""};
    for (std::size_t l = 1; l < lines.size(); ++l) {
        auto fields = io::split_fields(lines[l]);
        const auto row = static_cast<Eigen::Index>(l - 1);
        if (fields.size() != d + 1)
            throw InputError("line " + std::to_string(l + 1) + ": expected " + std::to_string(d + 1) + " fields");
        for (std::size_t j = 0; j <= d; ++j) {
            auto v = io::parse_double(fields[j]);
            if (!v || !std::isfinite(*v))
                throw InputError("line " + std::to_string(l + 1) + ": non-finite or invalid value in column " +
                                 std::to_string(j));
            if (j < d)
                data.features(row, static_cast<Eigen::Index>(j)) = *v;
            else
                data.targets(row) = *v;
        }
    }
    data.validate();
    return data;
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
    auto data = parse_dataset_csv(io::read_file(path));
    data.name = path.stem().string();
    return data;
}

std::string format_dataset_csv(const Dataset& data) {
    std::string out;
    for (Eigen::Index j = 0; j < data.dimension(); ++j) out += "f" + std::to_string(j) + ",";
    out += "target\n";
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        for (Eigen::Index j = 0; j < data.dimension(); ++j) out += io::format_double(data.features(i, j)) + ",";
        out += io::format_double(data.targets(i)) + "\n";
    }
    return out;
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    io::write_atomic(path, format_dataset_csv(data));
}

}  // namespace bbal
