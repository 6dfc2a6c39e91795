#pragma once

#include <cstdint>
#include <vector>

#include "satopf/costs.hpp"
#include "satopf/first_stage.hpp"
#include "satopf/psg.hpp"
#include "satopf/uncertainty.hpp"

namespace satopf {

/// Second stage of the alternative models: the pure affine policy
/// p_i = p0_i + alpha_i * Sigma_d with no saturation.
struct AffineRecourse {
    Eigen::VectorXd p;
    Eigen::VectorXd theta;
    Eigen::VectorXd flows;
    double reserve_up = 0.0;    // exact positive-part exceedance penalties
    double reserve_down = 0.0;
    double line_penalty = 0.0;
    double gen_penalty = 0.0;   // GP only
    bool any_gen_violation = false;

    double cost() const { return reserve_up + reserve_down + line_penalty + gen_penalty; }
};

AffineRecourse affine_evaluate(const Network& net, const FirstStage& x, const Scenario& scenario,
                               const CostConfig& costs, bool with_gen_penalty = false);

/// Deterministic reformulation of the two generator chance constraints for
/// one generator: upper p0 + z*sqrt(alpha^2 sS^2 + sw^2) <= upper_limit (the
/// sw term vanishing for regular units), lower p0 - z*sS*alpha >= lower_limit.
struct CapConstraint {
    bool wind = false;
    double z = 0.0;          // z_{1 - eps_gen}
    double sigma_sum = 0.0;  // sigma_{Sigma_d}
    double sigma_w = 0.0;    // capacity std, zero for regular units
    double upper = 0.0;      // p^max (regular) or mu_w (wind)
    double lower = 0.0;      // p^min

    double upper_margin(double alpha) const;  // z * std of the upper-side gap
    bool satisfied(double p0, double alpha, double tol = 1e-9) const;
    /// Largest alpha admitted by the upper constraint at a given p0
    /// (infinity when unconstrained).
    double alpha_bound(double p0) const;
};

CapConstraint cap_reformulate(const Generator& gen, double eps_gen, double sigma_sum,
                              double sigma_w);
std::vector<CapConstraint> cap_reformulate_all(const Network& net, const UncertaintyModel& model,
                                               double eps_gen);

/// Block projectors for the CAP cells, appended to the X blocks inside the
/// same Dykstra loop. Each cell acts on one generator's (p0, alpha) pair; the
/// wind upper set is projected by a scalar dual search.
std::vector<BlockProjector> cap_projectors(const std::vector<CapConstraint>& cells);

struct SaaConfig {
    int max_iters = 20000;
    double base_step = 0.5;
    double adagrad_epsilon = 1e-8;
    /// Deterministic full gradients keep their direction, so the norm-scaled
    /// AdaGrad (a diminishing-step subgradient scheme) is the default here.
    StepRule step_rule = StepRule::adagrad_norm;
    double pg_tol = 1e-6;   // stop when the unit-step projected gradient is this small
    int pg_check_every = 10;
};

struct SaaResult {
    FirstStage x;
    double objective = 0.0;  // SAA objective at the returned point
    int iterations = 0;
};

/// Deterministic full-gradient projected subgradient descent on the
/// 500-scenario SAA of the GP model over X.
SaaResult solve_gp(const Network& net, const UncertaintyModel& model, const CostConfig& costs,
                   const FeasibleSetSpec& spec, int n_scenarios, double gamma_gen,
                   std::uint64_t seed, const SaaConfig& cfg = {});

/// Same for the CAP model over X intersected with the chance-constraint cells.
/// Throws EmptyFeasibleSet when eps_gen is too tight for the instance.
SaaResult solve_cap(const Network& net, const UncertaintyModel& model, const CostConfig& costs,
                    const FeasibleSetSpec& spec, int n_scenarios, double eps_gen,
                    std::uint64_t seed, const SaaConfig& cfg = {});

}  // namespace satopf
