#include <doctest.h>

#include <cmath>
#include <random>

#include "satopf/case_io.hpp"
#include "satopf/sensitivity.hpp"
#include "test_helpers.hpp"

using namespace satopf;
using namespace satopf::testing;

namespace {

FirstStage two_gen_x(double p01, double p02, double a1, double a2) {
    FirstStage x = FirstStage::zeros(2);
    x.p0 << p01, p02;
    x.alpha << a1, a2;
    return x;
}

double objective_at(const Network& net, const FirstStage& x, const Scenario& s,
                    const CostConfig& costs, const SmoothingParams& smoothing) {
    return first_stage_cost(net, costs, x) +
           recourse_cost(solve_recourse(net, x, s, RecourseMode::smooth, smoothing, costs));
}

Eigen::VectorXd fd_gradient(const Network& net, const FirstStage& x, const Scenario& s,
                            const CostConfig& costs, const SmoothingParams& smoothing) {
    const Eigen::VectorXd base = x.pack();
    Eigen::VectorXd g(base.size());
    for (Eigen::Index j = 0; j < base.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(base[j]));
        Eigen::VectorXd up = base, dn = base;
        up[j] += h;
        dn[j] -= h;
        g[j] = (objective_at(net, FirstStage::unpack(up), s, costs, smoothing) -
                objective_at(net, FirstStage::unpack(dn), s, costs, smoothing)) /
               (2.0 * h);
    }
    return g;
}

/// True when every target sits well away from the smoothing piece joints,
/// every exceedance argument away from the softplus transition, and every
/// flow away from the soft-limit kink, so central differences see a locally
/// smooth objective.
bool away_from_kinks(const Network& net, const FirstStage& x, const RecourseSolution& sol,
                     const CostConfig& costs, const SmoothingParams& smoothing) {
    for (int i = 0; i < net.num_generators(); ++i) {
        const double tau = sol.tau[i];
        if (tau <= 0.0) return false;
        for (double joint : {sol.p_min_eff[i] - tau, sol.p_min_eff[i] + tau,
                             sol.p_max_eff[i] - tau, sol.p_max_eff[i] + tau}) {
            if (std::abs(sol.p_target[i] - joint) <= 10.0 * tau) return false;
        }
        const double up = sol.p[i] - x.p0[i] - x.r_plus[i];
        const double down = x.p0[i] - sol.p[i] - x.r_minus[i];
        if (std::abs(up) <= 10.0 * smoothing.tau_pos) return false;
        if (std::abs(down) <= 10.0 * smoothing.tau_pos) return false;
    }
    for (int e = 0; e < net.num_lines(); ++e) {
        const double soft = costs.delta_line * net.lines()[static_cast<std::size_t>(e)].flow_limit;
        if (std::abs(std::abs(sol.flows[e]) - soft) <= 1e-4 * soft) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("slack pins the single free generator") {
    const Network net = two_gen_network(8.0, 20.0, 10.0);
    const FirstStage x = two_gen_x(5.0, 5.0, 0.5, 0.5);
    // sigma_d = 8: generator 1 saturates, generator 2 stays free
    const RecourseSolution sol =
        solve_recourse(net, x, fluct_scenario(net, 8.0), RecourseMode::smooth, {}, {});
    const RecourseJacobian jac = recourse_jacobian(net, x, sol);
    CHECK(jac.dp_dp0(1, 0) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(jac.dp_dp0(1, 1) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(jac.ds_dp0[0] == doctest::Approx(0.0));
    CHECK(jac.ds_dp0[1] == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("unsaturated participation sensitivities are +-(s + sigma_d) shares") {
    const Network net = two_gen_network(8.0, 20.0, 10.0);
    const FirstStage x = two_gen_x(5.0, 5.0, 0.5, 0.5);
    const RecourseSolution sol =
        solve_recourse(net, x, fluct_scenario(net, 4.0), RecourseMode::smooth, {}, {});
    REQUIRE(sol.slack == doctest::Approx(0.0).epsilon(1e-8));
    const RecourseJacobian jac = recourse_jacobian(net, x, sol);
    CHECK(jac.dp_dalpha(0, 0) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(jac.dp_dalpha(1, 0) == doctest::Approx(-2.0).epsilon(1e-8));
    CHECK(jac.ds_dalpha[0] == doctest::Approx(-4.0).epsilon(1e-8));
}

TEST_CASE("output sensitivities balance to zero for every variable") {
    const CaseBundle bundle = load_case("bundled:case6_synthetic");
    const Network& net = bundle.net;
    const FeasibleSetSpec spec = make_feasible_spec(bundle);
    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const FirstStage x = random_feasible(spec, rng);
        const Scenario s = sample_one(bundle.model, 40u + static_cast<std::uint64_t>(trial), 0);
        RecourseSolution sol;
        try {
            sol = solve_recourse(net, x, s, RecourseMode::smooth, {}, {});
        } catch (const ScenarioInfeasible&) {
            continue;
        }
        RecourseJacobian jac;
        try {
            jac = recourse_jacobian(net, x, sol);
        } catch (const DegenerateSensitivity&) {
            continue;
        }
        for (int l = 0; l < net.num_generators(); ++l) {
            CHECK(std::abs(jac.dp_dp0.col(l).sum()) <= 1e-10);
            CHECK(std::abs(jac.dp_dalpha.col(l).sum()) <= 1e-10);
            CHECK(jac.dtheta_dp0(net.reference_bus(), l) == 0.0);
        }
    }
}

TEST_CASE("angle sensitivities match finite differences of perturbed solves") {
    const Network net = two_gen_network(8.0, 20.0, 10.0);
    const FirstStage x = two_gen_x(4.5, 5.5, 0.4, 0.6);
    const Scenario s = fluct_scenario(net, 3.0);
    const RecourseSolution sol = solve_recourse(net, x, s, RecourseMode::smooth, {}, {});
    const RecourseJacobian jac = recourse_jacobian(net, x, sol);
    const double h = 1e-6;
    for (int l = 0; l < 2; ++l) {
        FirstStage up = x, dn = x;
        up.p0[l] += h;
        dn.p0[l] -= h;
        const Eigen::VectorXd t_up = solve_recourse(net, up, s, RecourseMode::smooth, {}, {}).theta;
        const Eigen::VectorXd t_dn = solve_recourse(net, dn, s, RecourseMode::smooth, {}, {}).theta;
        const Eigen::VectorXd fd = (t_up - t_dn) / (2.0 * h);
        CHECK((jac.dtheta_dp0.col(l) - fd).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("degenerate saturation is reported rather than regularized") {
    const Network net = two_gen_network(8.0, 20.0, 10.0);
    const FirstStage x = two_gen_x(5.0, 5.0, 0.5, 0.5);
    RecourseSolution sol;
    sol.mode = RecourseMode::smooth;
    sol.p_target.resize(2);
    sol.p_target << 9.0, 21.5;  // both beyond the upper smoothing joint
    sol.p_min_eff = Eigen::VectorXd::Zero(2);
    sol.p_max_eff.resize(2);
    sol.p_max_eff << 8.0, 20.0;
    sol.tau = Eigen::VectorXd::Constant(2, 1e-3);
    CHECK_THROWS_AS(recourse_jacobian(net, x, sol), DegenerateSensitivity);
}

TEST_CASE("gradient at a calm zero-variance point is the first-stage gradient") {
    const Network net = two_gen_network(8.0, 20.0, 10.0);
    FirstStage x = two_gen_x(5.0, 5.0, 0.5, 0.5);
    x.r_plus << 1.0, 1.0;
    x.r_minus << 1.0, 1.0;
    const CostConfig costs;
    const StochasticGradient g =
        stochastic_gradient(net, x, fluct_scenario(net, 0.0), costs, {});
    CHECK(g.g_p0[0] == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(g.g_p0[1] == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(g.g_rplus[0] == doctest::Approx(10.0 * 1.5).epsilon(1e-9));
    CHECK(g.g_rminus[1] == doctest::Approx(20.0 * 1.5).epsilon(1e-9));
    CHECK(g.g_alpha.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("analytic gradient matches central finite differences") {
    const CaseBundle bundle = load_case("bundled:case6_synthetic");
    const Network& net = bundle.net;
    FeasibleSetSpec spec = make_feasible_spec(bundle);
    const CostConfig costs;
    const SmoothingParams smoothing;
    std::mt19937 rng(81);
    int accepted = 0;
    std::uint64_t draw = 0;
    while (accepted < 20 && draw < 4000) {
        const FirstStage x = random_feasible(spec, rng);
        const Scenario s = sample_one(bundle.model, 1234, draw++);
        if (x.alpha.minCoeff() < 0.05) continue;
        RecourseSolution sol;
        try {
            sol = solve_recourse(net, x, s, RecourseMode::smooth, smoothing, costs);
        } catch (const ScenarioInfeasible&) {
            continue;
        }
        if (!away_from_kinks(net, x, sol, costs, smoothing)) continue;
        ++accepted;
        const Eigen::VectorXd analytic =
            gradient_from_solution(net, x, sol, costs, smoothing).pack();
        const Eigen::VectorXd fd = fd_gradient(net, x, s, costs, smoothing);
        for (Eigen::Index j = 0; j < analytic.size(); ++j) {
            const double scale = std::max({1.0, std::abs(analytic[j]), std::abs(fd[j])});
            CHECK(std::abs(analytic[j] - fd[j]) / scale <= 1e-4);
        }
    }
    CHECK(accepted == 20);
}
