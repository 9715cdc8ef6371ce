#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bbal {

struct VerifyCheck {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    /// Set when the suite could not run (e.g. an invalid sigma).
    std::string error;

    bool passed() const { return error.empty() && residual <= tolerance; }
};

struct VerifyOptions {
    double sigma = 0.1;
    std::uint64_t seed = 1;
    /// Posterior samples for the sampled linear-model check.
    long samples = 20000;
};

/// Identity suites on generated instances: member-selection gradient kernel vs empirical
/// kernel, exact linear-model kernels, feature-space vs Gram-space conditioning, and the
/// mutual-information chain rule. Each check reports its worst relative residual.
std::vector<VerifyCheck> run_identity_suites(const VerifyOptions& options = {});

}  // namespace bbal
