#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bbal/kernel.hpp"
#include "bbal/rng.hpp"

namespace bbal {

enum class Method { uniform, bald, maxdet, badge, coreset, lcmd, bait };

std::string_view method_name(Method method);
/// Accepts the canonical names plus a few aliases ("random", "batchbald", "bald_topk", ...).
std::optional<Method> parse_method(std::string_view name);
std::vector<Method> all_methods();

struct SelectionOptions {
    /// BAIT: after B + ceil(B/2) forward picks, greedily drop points until B remain.
    bool bait_backward = false;
};

/// One acquisition request. `kernel` is the unconditioned pool kernel; every method
/// first conditions it on `train_ids` (which therefore must be rows of the kernel).
struct SelectionRequest {
    KernelState kernel;
    std::vector<PointId> pool_ids;
    std::vector<PointId> train_ids;
    std::size_t batch_size = 1;
    UniformStream rng = UniformStream::seeded(0);
    SelectionOptions options{};
};

struct SelectionResult {
    std::vector<PointId> selected;
    /// Meaning depends on the method; see the individual functions.
    std::vector<double> step_scores;
};

/// Throws InputError for an ill-formed request, InfeasibleError when B > |pool|.
void validate(const SelectionRequest& request);

// Ties between equal scores always go to the lowest id. Stochastic methods sort the
// candidates by id before consuming the stream, and the request's stream is copied,
// so the same request always yields the same result.

/// Uniform without replacement: index floor(u * remaining) into the sorted remainder.
/// step_scores are the consumed u values.
SelectionResult select_uniform(const SelectionRequest& request);

/// Top-B by BALD score under the train-conditioned kernel; step_scores are the scores.
SelectionResult select_bald_topk(const SelectionRequest& request);

/// Greedy BatchBALD / MaxDet. step_scores are incremental mutual-information gains;
/// they sum to batch_mutual_information(selected) under the train-conditioned kernel.
SelectionResult select_maxdet_batchbald(const SelectionRequest& request);

/// k-means++ seeding in kernel space. First center ~ k(x,x), then ~ d^2 to the nearest
/// selected center; uniform over the remainder when all mass is zero.
/// step_scores are the sampling masses of the chosen points.
SelectionResult select_badge_kmeanspp(const SelectionRequest& request);

/// Farthest-first traversal from the training points. step_scores are the chosen
/// min-distances (non-increasing); the first is +inf when there are no training points.
SelectionResult select_coreset_maxdist(const SelectionRequest& request);

/// Largest cluster, maximum distance. step_scores are the winners' squared distances.
SelectionResult select_lcmd(const SelectionRequest& request);

/// Greedy total-pool-variance reduction. step_scores are the total pool posterior
/// variance after conditioning on each prefix of the selection.
SelectionResult select_bait_forward(const SelectionRequest& request);

SelectionResult select(Method method, const SelectionRequest& request);

/// {"method": ..., "selected": [...], "step_scores": [...]}; non-finite scores become null.
std::string format_selection_json(Method method, const SelectionResult& result);

}  // namespace bbal
