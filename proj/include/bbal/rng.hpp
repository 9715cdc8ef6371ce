#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <vector>

namespace bbal {

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// Order-sensitive combination of several words into one seed:
/// h = mix64(h ^ mix64(w + golden)) folded over the words, starting at h = 0.
std::uint64_t mix64(std::initializer_list<std::uint64_t> words);

/// Deterministic generator. Bit-identical across platforms: it only relies on
/// std::mt19937_64 (whose output sequence is fixed by the standard) and does its own
/// conversions to real numbers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal (Marsaglia polar method).
    double normal();
    /// Uniform integer in [0, n). n must be positive.
    std::size_t below(std::size_t n);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Source of uniform [0, 1) reals consumed by the stochastic selection methods.
/// Copies carry independent state, so replaying a copied stream reproduces the draws.
class UniformStream {
public:
    explicit UniformStream(std::function<double()> source) : source_(std::move(source)) {}

    static UniformStream seeded(std::uint64_t seed);
    static UniformStream constant(double value);
    /// Cycles through `values`.
    static UniformStream sequence(std::vector<double> values);

    double next() { return source_(); }

private:
    std::function<double()> source_;
};

}  // namespace bbal
