#include "satopf/sensitivity.hpp"

#include <cmath>

namespace satopf {

namespace {

constexpr double kDegenerateTol = 1e-12;

Eigen::VectorXd saturation_derivs(const RecourseSolution& sol) {
    const auto g = sol.p_target.size();
    Eigen::VectorXd d(g);
    for (Eigen::Index i = 0; i < g; ++i)
        d[i] = smooth_saturate_deriv(sol.p_target[i], sol.p_min_eff[i], sol.p_max_eff[i],
                                     sol.tau[i]);
    return d;
}

void require_smooth(const RecourseSolution& sol) {
    if (sol.mode != RecourseMode::smooth)
        throw Error("sensitivities are defined for smooth-mode recourse solutions only");
}

}  // namespace

RecourseJacobian recourse_jacobian(const Network& net, const FirstStage& x,
                                   const RecourseSolution& sol) {
    require_smooth(sol);
    const int g = net.num_generators();
    const Eigen::VectorXd gp = saturation_derivs(sol);
    const double denom = gp.dot(x.alpha);
    if (denom < kDegenerateTol)
        throw DegenerateSensitivity("all participating generators saturated (sum g' alpha = " +
                                    std::to_string(denom) + ")");
    const double shift = sol.slack + sol.sigma_d;

    RecourseJacobian jac;
    jac.ds_dp0 = -gp / denom;
    jac.ds_dalpha = shift * jac.ds_dp0;
    jac.dp_dp0.resize(g, g);
    for (int l = 0; l < g; ++l) {
        for (int i = 0; i < g; ++i) {
            const double d_target = (i == l ? 1.0 : 0.0) + x.alpha[i] * jac.ds_dp0[l];
            jac.dp_dp0(i, l) = gp[i] * d_target;
        }
    }
    // d pT_i / d alpha_l = shift * delta_il + alpha_i * ds_dalpha_l, which is
    // shift times the p0 case, so the output sensitivities scale likewise.
    jac.dp_dalpha = shift * jac.dp_dp0;

    Eigen::MatrixXd bus_rhs = Eigen::MatrixXd::Zero(net.num_buses(), 2 * g);
    for (int i = 0; i < g; ++i) {
        const int bus = net.generators()[static_cast<std::size_t>(i)].bus;
        for (int l = 0; l < g; ++l) {
            bus_rhs(bus, l) += jac.dp_dp0(i, l);
            bus_rhs(bus, g + l) += jac.dp_dalpha(i, l);
        }
    }
    const Eigen::MatrixXd angles = net.solve_angles(bus_rhs);
    jac.dtheta_dp0 = angles.leftCols(g);
    jac.dtheta_dalpha = angles.rightCols(g);
    return jac;
}

StochasticGradient gradient_from_solution(const Network& net, const FirstStage& x,
                                          const RecourseSolution& sol, const CostConfig& costs,
                                          const SmoothingParams& smoothing) {
    require_smooth(sol);
    const int g = net.num_generators();
    const Eigen::VectorXd gp = saturation_derivs(sol);
    const double denom = gp.dot(x.alpha);
    if (denom < kDegenerateTol)
        throw DegenerateSensitivity("all participating generators saturated (sum g' alpha = " +
                                    std::to_string(denom) + ")");
    const double shift = sol.slack + sol.sigma_d;
    const Eigen::VectorXd c_bar = reserve_unit_costs(net, costs);

    // Reserve-exceedance pieces. phi_i multiplies dp_i/dq; the q2/q3 terms
    // also carry direct p0 and r+- partials.
    Eigen::VectorXd up_deriv(g), down_deriv(g), phi(g);
    for (int i = 0; i < g; ++i) {
        const Generator& gen = net.generators()[static_cast<std::size_t>(i)];
        const double u = sol.p[i] - x.p0[i] - x.r_plus[i];
        const double v = x.p0[i] - sol.p[i] - x.r_minus[i];
        up_deriv[i] = costs.gamma_res * c_bar[i] * softplus_deriv(u, smoothing.tau_pos);
        down_deriv[i] =
            gen.free_spill ? 0.0
                           : costs.gamma_res * c_bar[i] * softplus_deriv(v, smoothing.tau_pos);
        phi[i] = up_deriv[i] - down_deriv[i];
    }

    // Line-penalty adjoint: one reduced-Laplacian solve replaces the 2|G|
    // angle sensitivity solves.
    Eigen::VectorXd y = Eigen::VectorXd::Zero(net.num_buses());
    for (int e = 0; e < net.num_lines(); ++e) {
        const Line& line = net.lines()[static_cast<std::size_t>(e)];
        const double excess =
            std::max(0.0, std::abs(sol.flows[e]) - costs.delta_line * line.flow_limit);
        if (excess <= 0.0) continue;
        const double w = 2.0 * costs.gamma_line * excess * (sol.flows[e] > 0.0 ? 1.0 : -1.0);
        y[line.from] += w * line.susceptance;
        y[line.to] -= w * line.susceptance;
    }
    const Eigen::VectorXd lambda = net.solve_angles(y);
    Eigen::VectorXd psi(g);
    for (int i = 0; i < g; ++i)
        psi[i] = lambda[net.generators()[static_cast<std::size_t>(i)].bus];

    // kappa = sum_i (phi_i + psi_i) g'_i alpha_i folds the slack response
    // into every coordinate.
    const double kappa = ((phi + psi).array() * gp.array() * x.alpha.array()).sum();

    StochasticGradient out;
    out.g_p0.resize(g);
    out.g_alpha.resize(g);
    out.g_rplus.resize(g);
    out.g_rminus.resize(g);
    for (int l = 0; l < g; ++l) {
        const double through_p = gp[l] * (phi[l] + psi[l]) - kappa * gp[l] / denom;
        out.g_p0[l] = generation_unit_cost(net, l) - phi[l] + through_p;
        out.g_alpha[l] = shift * through_p;
        out.g_rplus[l] = c_bar[l] - up_deriv[l];
        out.g_rminus[l] = c_bar[l] - down_deriv[l];
    }
    return out;
}

StochasticGradient stochastic_gradient(const Network& net, const FirstStage& x,
                                       const Scenario& scenario, const CostConfig& costs,
                                       const SmoothingParams& smoothing) {
    const RecourseSolution sol =
        solve_recourse(net, x, scenario, RecourseMode::smooth, smoothing, costs);
    return gradient_from_solution(net, x, sol, costs, smoothing);
}

}  // namespace satopf
