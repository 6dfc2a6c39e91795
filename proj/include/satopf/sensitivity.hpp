#pragma once

#include <Eigen/Dense>

#include "satopf/recourse.hpp"

namespace satopf {

/// Partial derivatives of the smooth recourse solution with respect to the
/// first-stage variables q in {p0_l, alpha_l}. Column l of each matrix holds
/// the derivatives with respect to the l-th variable.
struct RecourseJacobian {
    Eigen::VectorXd ds_dp0, ds_dalpha;      // |G|
    Eigen::MatrixXd dp_dp0, dp_dalpha;      // |G| x |G|
    Eigen::MatrixXd dtheta_dp0, dtheta_dalpha;  // |V| x |G|, reference row zero
};

struct StochasticGradient {
    Eigen::VectorXd g_p0, g_rplus, g_rminus, g_alpha;

    Eigen::VectorXd pack() const {
        const auto g = g_p0.size();
        Eigen::VectorXd v(4 * g);
        v << g_p0, g_rplus, g_rminus, g_alpha;
        return v;
    }
};

/// Solve the sensitivity system for a smooth-mode recourse solution: the
/// scalar slack derivative is eliminated first, then all right-hand sides are
/// batched against the cached Laplacian factorization.
/// Throws DegenerateSensitivity when every participating generator is fully
/// saturated (sum_i g'_i alpha_i ~ 0).
RecourseJacobian recourse_jacobian(const Network& net, const FirstStage& x,
                                   const RecourseSolution& solution);

/// Gradient of [first-stage cost + q(x, omega)] at x for one scenario, using
/// the chain rule through the recourse sensitivities. The recourse solution is
/// independent of the scheduled reserves; their partials enter only through
/// the exceedance penalties. Line-penalty partials are accumulated through a
/// single adjoint angle solve.
StochasticGradient gradient_from_solution(const Network& net, const FirstStage& x,
                                          const RecourseSolution& solution,
                                          const CostConfig& costs,
                                          const SmoothingParams& smoothing);

/// Convenience wrapper: solve the smooth recourse for the scenario, then
/// differentiate.
StochasticGradient stochastic_gradient(const Network& net, const FirstStage& x,
                                       const Scenario& scenario, const CostConfig& costs,
                                       const SmoothingParams& smoothing);

}  // namespace satopf
