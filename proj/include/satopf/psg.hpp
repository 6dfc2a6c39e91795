#pragma once

#include <cstdint>
#include <vector>

#include "satopf/costs.hpp"
#include "satopf/first_stage.hpp"
#include "satopf/recourse.hpp"
#include "satopf/sensitivity.hpp"
#include "satopf/uncertainty.hpp"

namespace satopf {

/// Step-length rules. Per-coordinate AdaGrad reduces to sign steps when the
/// gradient stops fluctuating, which a hyperplane projection can cancel
/// exactly; the norm variant and the literal fixed step of the algorithm
/// statement are provided for such degenerate instances.
enum class StepRule { adagrad_coordinate, adagrad_norm, fixed };

struct PsgConfig {
    int max_iters = 2000;          // T
    int batch_size = 20;           // K
    double base_step = 0.5;        // eta
    double adagrad_epsilon = 1e-8; // eps0 in eta / sqrt(eps0 + sum g^2)
    StepRule step_rule = StepRule::adagrad_coordinate;
    int eval_sample_size = 2000;   // N_eval, drawn once and reused (common random numbers)
    int eval_every = 25;
    int patience = 20;             // evaluations without improvement before stopping
    std::uint64_t seed = 0;
    double max_infeasible_fraction = 0.01;
};

struct IterateRecord {
    int iteration = 0;
    FirstStage x;
    double objective = 0.0;
    double std_error = 0.0;
    double wall_seconds = 0.0;  // informational; never serialized
};

struct PsgResult {
    FirstStage best;
    double best_objective = 0.0;
    double best_std_error = 0.0;
    std::vector<IterateRecord> trace;
    long skipped_samples = 0;  // infeasible or degenerate mini-batch draws
    int iterations_run = 0;
};

struct ObjectiveEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long infeasible = 0;
};

/// Mean and standard error of [first-stage cost + smooth recourse cost] over
/// a fixed scenario sample. Infeasible draws are excluded and counted; throws
/// ExcessiveInfeasibility when their fraction exceeds the limit.
ObjectiveEstimate estimate_objective(const Network& net, const CostConfig& costs,
                                     const SmoothingParams& smoothing, const FirstStage& x,
                                     const std::vector<Scenario>& sample,
                                     double max_infeasible_fraction = 0.01);

/// Projected stochastic gradient on the smooth approximation: mini-batch
/// gradients, AdaGrad steps, projection onto X each iteration, periodic
/// objective estimation on an independent fixed sample, best-iterate output.
/// Deterministic given (seed, config, data), independent of thread count.
PsgResult solve_smooth(const Network& net, const UncertaintyModel& model, const CostConfig& costs,
                       const FeasibleSetSpec& spec, const FirstStage& x1, const PsgConfig& cfg);

}  // namespace satopf
