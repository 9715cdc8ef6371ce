#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>

#include "bbal/errors.hpp"
#include "bbal/io.hpp"
#include "bbal/prediction_matrix.hpp"
#include "bbal/rng.hpp"
#include "test_support.hpp"

using namespace bbal;
using namespace bbal::testing;

namespace {

std::string error_of(std::string_view text) {
    try {
        parse_prediction_csv(text);
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("format_double round-trips 17 significant digits") {
    Rng rng(1);
    for (int t = 0; t < 2000; ++t) {
        const double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(40)) - 20.0);
        CHECK(*io::parse_double(io::format_double(v)) == v);
    }
    for (double v : {0.0, -0.0, 1.0, 0.1, 1e300, 5e-324, std::numeric_limits<double>::max()})
        CHECK(*io::parse_double(io::format_double(v)) == v);
    CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("parse helpers reject garbage") {
    CHECK_FALSE(io::parse_double("1.5x").has_value());
    CHECK_FALSE(io::parse_double("").has_value());
    CHECK(io::parse_double("+2") == 2.0);
    CHECK(io::parse_uint("42") == 42u);
    CHECK_FALSE(io::parse_uint("-1").has_value());
    CHECK_FALSE(io::parse_uint("3.0").has_value());
}

TEST_CASE("split_lines drops carriage returns and a trailing newline") {
    auto lines = io::split_lines("a,b\r\nc,d\n");
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "a,b");
    CHECK(lines[1] == "c,d");
}

TEST_CASE("prediction CSV: exact format and parse") {
    RowMatrix mu(2, 2);
    mu << 1.0, -1.0, 0.25, 3.0;
    PredictionMatrix p({5, 2}, mu);
    CHECK(format_prediction_csv(p) == "id,m0,m1\n5,1,-1\n2,0.25,3\n");
    auto back = parse_prediction_csv("id,m0,m1\n5,1,-1\n2,0.25,3\n");
    CHECK(back.ids()[0] == 5);
    CHECK(back.values() == mu);
}

TEST_CASE("prediction CSV: random round trips are bit-exact") {
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
        const auto n = 1 + rng.below(30);
        const auto k = static_cast<Eigen::Index>(2 + rng.below(12));
        std::vector<PointId> ids;
        for (std::size_t i = 0; i < n; ++i) ids.push_back(rng.next_u64() >> (rng.below(64)));
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        RowMatrix mu = random_matrix(static_cast<Eigen::Index>(ids.size()), k, rng, std::pow(10.0, rng.normal() * 5));
        PredictionMatrix p(ids, mu);
        auto back = parse_prediction_csv(format_prediction_csv(p));
        CHECK(back.values() == p.values());
        CHECK(std::equal(back.ids().begin(), back.ids().end(), p.ids().begin(), p.ids().end()));
    }
}

TEST_CASE("prediction CSV: diagnostics carry line numbers") {
    CHECK(error_of("id,m0\n1,2\n").find("line 1") != std::string::npos);
    CHECK_FALSE(error_of("idx,m0,m1\n1,2,3\n").empty());
    CHECK_FALSE(error_of("id,m1,m0\n1,2,3\n").empty());
    CHECK_FALSE(error_of("").empty());
    CHECK(error_of("id,m0,m1\n1,2,3\n2,4\n").find("line 3") != std::string::npos);
    CHECK(error_of("id,m0,m1\n1,2,3\n2,abc,4\n").find("line 3") != std::string::npos);
    CHECK(error_of("id,m0,m1\n1,2,3\n-2,4,5\n").find("line 3") != std::string::npos);
    CHECK(error_of("id,m0,m1\n1,2,3\n7,4,5\n1,0,0\n").find("line 4") != std::string::npos);
    CHECK(error_of("id,m0,m1\n1,2,inf\n").find("line 2") != std::string::npos);
}

TEST_CASE("prediction CSV: file helpers and subset") {
    Rng rng(3);
    auto p = random_predictions(6, 3, rng);
    auto path = std::filesystem::temp_directory_path() / ("bbal_pred_" + std::to_string(::getpid()) + ".csv");
    write_prediction_csv(p, path);
    auto back = read_prediction_csv(path);
    CHECK(back.values() == p.values());
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_prediction_csv(path), InputError);

    std::vector<PointId> want = {4, 1};
    auto sub = p.subset(want);
    CHECK(sub.values().row(0) == p.values().row(4));
    CHECK(sub.values().row(1) == p.values().row(1));
    std::vector<PointId> bad = {9};
    CHECK_THROWS_AS(p.subset(bad), InputError);
}

TEST_CASE("mix64 and Rng are stable") {
    // SplitMix64 reference values for input 0 and 1.
    CHECK(mix64(std::uint64_t{0}) == 0xe220a8397b1dcdafULL);
    CHECK(mix64({1, 2}) != mix64({2, 1}));
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
    Rng c(6);
    for (int i = 0; i < 1000; ++i) {
        const double u = c.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(c.below(7) < 7u);
    }
    auto s = UniformStream::sequence({0.1, 0.2});
    CHECK(s.next() == 0.1);
    auto copy = s;
    CHECK(s.next() == 0.2);
    CHECK(copy.next() == 0.2);
    CHECK(s.next() == 0.1);
}
