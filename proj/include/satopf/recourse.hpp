#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>

#include "satopf/costs.hpp"
#include "satopf/first_stage.hpp"
#include "satopf/network.hpp"
#include "satopf/uncertainty.hpp"

namespace satopf {

enum class RecourseMode { exact, smooth };

struct SmoothingParams {
    double tau_sat_factor = 1e-4;  // tau_sat,i = factor * (p^max_i(w) - p^min_i(w))
    double tau_pos = 1e-4;

    static SmoothingParams from_costs(const CostConfig& c) {
        return SmoothingParams{c.tau_sat_factor, c.tau_pos};
    }
};

struct CostTerms {
    double deviation = 0.0;     // q1, identically zero in this parameterization
    double reserve_up = 0.0;    // sum of q2 terms
    double reserve_down = 0.0;  // sum of q3 terms
    double line = 0.0;          // sum of q4 terms
    double total() const { return deviation + reserve_up + reserve_down + line; }
};

struct FeasibilityInterval {
    double lower = 0.0;
    double upper = 0.0;
    bool contains_strictly(double x, double margin = 1e-12) const {
        return x > lower + margin && x < upper - margin;
    }
};

struct RecourseSolution {
    RecourseMode mode = RecourseMode::exact;
    double slack = 0.0;    // s(omega)
    double sigma_d = 0.0;  // net demand fluctuation of the scenario
    Eigen::VectorXd p_target;  // p^T_i(omega)
    Eigen::VectorXd p;         // p_i(omega)
    Eigen::VectorXd p_min_eff, p_max_eff;  // realized generation limits
    Eigen::VectorXd tau;       // per-generator smoothing width (zero in exact mode)
    Eigen::VectorXd theta;     // per-bus angles, reference pinned to zero
    Eigen::VectorXd flows;     // per-line flows
    CostTerms cost_terms;
};

/// Piecewise-affine saturation: median(target, lo, hi).
double saturate(double target, double lo, double hi);

/// Five-piece smooth saturation g_tau. Continuously differentiable, monotone
/// nondecreasing, within tau/4 of the exact saturation. tau = 0 degenerates to
/// the exact clamp. Throws OverlappingSmoothing when hi - lo <= 2*tau.
double smooth_saturate(double x, double lo, double hi, double tau);
double smooth_saturate_deriv(double x, double lo, double hi, double tau);

/// Overflow-safe softplus g+_{tau}(z) = tau*log(1 + exp(z/tau)) and its
/// mirror g-(z) = -g+(-z); logistic derivative of g+.
double softplus(double z, double tau_pos);
double softminus(double z, double tau_pos);
double softplus_deriv(double z, double tau_pos);

/// Realized generation limits for one scenario: wind upper limits come from
/// the sampled capacities, everything else from the static data.
void effective_limits(const Network& net, const Scenario& scenario, Eigen::VectorXd& p_min_eff,
                      Eigen::VectorXd& p_max_eff);

/// The interval D_F of net demand fluctuations for which the saturation
/// recourse is balanceable (Theorem-1 endpoints, with zero-participation
/// generators contributing their clamped nominal output).
FeasibilityInterval feasibility_interval(const Network& net, const FirstStage& x,
                                         const Scenario& scenario);

/// Inputs of the scalar slack equation, all scenario-resolved.
struct SlackProblem {
    Eigen::VectorXd p0, alpha;
    Eigen::VectorXd p_min, p_max;  // realized limits
    Eigen::VectorXd tau;           // zero entries select the exact clamp
    double sigma_d = 0.0;
    double demand_mean = 0.0;  // sum of mean loads

    double total_demand() const { return demand_mean + sigma_d; }
    /// Sum of saturated outputs at slack s.
    double total_output(double s) const;
    /// Residual of the total balance at slack s.
    double residual(double s) const { return total_output(s) - total_demand(); }
    /// d(total_output)/ds, the sum of participating saturation slopes.
    double output_slope(double s) const;
};

/// Solve the one-dimensional balance equation for the slack reserves by
/// bisection, using the delta-d bracket rule (up-reserves when the zero-slack
/// residual is negative, down-reserves when positive). An explicit bracket
/// can be supplied to exercise uniqueness from different starting intervals.
/// Throws ScenarioInfeasible when no slack can balance the system and
/// BisectionStall when the bracket logic fails to converge.
double solve_slack(const SlackProblem& prob, double tol_s,
                   std::optional<std::pair<double, double>> bracket = std::nullopt);

/// Scale-aware default slack tolerance: 1e-9 * (|sum d_j| + 1).
double slack_tolerance(const Network& net);

/// Full per-scenario recourse: slack, targets, saturated outputs, angles,
/// flows and the cost decomposition. Throws ScenarioInfeasible when
/// sigma_d lies outside the feasibility interval.
RecourseSolution solve_recourse(const Network& net, const FirstStage& x, const Scenario& scenario,
                                RecourseMode mode, const SmoothingParams& smoothing,
                                const CostConfig& costs);

/// Total second-stage cost q(x, omega) of a solved scenario.
double recourse_cost(const RecourseSolution& solution);

}  // namespace satopf
