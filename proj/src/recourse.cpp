#include "satopf/recourse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace satopf {

double saturate(double target, double lo, double hi) {
    return std::min(std::max(target, lo), hi);
}

namespace {

/// Saturation value with tau = 0 meaning the exact clamp. Assumes the caller
/// guarantees hi - lo > 2*tau whenever tau > 0.
double sat_value(double x, double lo, double hi, double tau) {
    if (tau <= 0.0) return saturate(x, lo, hi);
    if (x < lo - tau) return lo;
    if (x <= lo + tau) {
        const double d = x - (lo - tau);
        return lo + d * d / (4.0 * tau);
    }
    if (x < hi - tau) return x;
    if (x <= hi + tau) {
        const double d = x - (hi + tau);
        return hi - d * d / (4.0 * tau);
    }
    return hi;
}

double sat_deriv(double x, double lo, double hi, double tau) {
    if (tau <= 0.0) return (x > lo && x < hi) ? 1.0 : 0.0;
    if (x < lo - tau) return 0.0;
    if (x <= lo + tau) return (x - (lo - tau)) / (2.0 * tau);
    if (x < hi - tau) return 1.0;
    if (x <= hi + tau) return ((hi + tau) - x) / (2.0 * tau);
    return 0.0;
}

}  // namespace

double smooth_saturate(double x, double lo, double hi, double tau) {
    if (tau < 0.0) throw OverlappingSmoothing("negative smoothing width");
    if (tau > 0.0 && !(hi - lo > 2.0 * tau))
        throw OverlappingSmoothing("smoothing pieces overlap: interval width " +
                                   std::to_string(hi - lo) + " <= 2*tau = " +
                                   std::to_string(2.0 * tau));
    if (tau == 0.0 && hi < lo) throw OverlappingSmoothing("empty saturation interval");
    return sat_value(x, lo, hi, tau);
}

double smooth_saturate_deriv(double x, double lo, double hi, double tau) {
    if (tau < 0.0) throw OverlappingSmoothing("negative smoothing width");
    if (tau > 0.0 && !(hi - lo > 2.0 * tau))
        throw OverlappingSmoothing("smoothing pieces overlap");
    return sat_deriv(x, lo, hi, tau);
}

double softplus(double z, double tau_pos) {
    const double t = z / tau_pos;
    if (t > 0.0) return z + tau_pos * std::log1p(std::exp(-t));
    return tau_pos * std::log1p(std::exp(t));
}

double softminus(double z, double tau_pos) { return -softplus(-z, tau_pos); }

double softplus_deriv(double z, double tau_pos) {
    const double t = z / tau_pos;
    if (t > 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

void effective_limits(const Network& net, const Scenario& scenario, Eigen::VectorXd& p_min_eff,
                      Eigen::VectorXd& p_max_eff) {
    const int g = net.num_generators();
    p_min_eff.resize(g);
    p_max_eff.resize(g);
    int w = 0;
    for (int i = 0; i < g; ++i) {
        const Generator& gen = net.generators()[static_cast<std::size_t>(i)];
        p_min_eff[i] = gen.p_min;
        if (gen.kind == GenKind::wind) {
            const double cap = scenario.wind_cap[w++];
            p_max_eff[i] = std::max(cap, gen.p_min);
        } else {
            p_max_eff[i] = gen.p_max;
        }
    }
}

namespace {

FeasibilityInterval interval_from(const Eigen::VectorXd& p0, const Eigen::VectorXd& alpha,
                                  const Eigen::VectorXd& p_min, const Eigen::VectorXd& p_max,
                                  double demand_mean) {
    double lo = -demand_mean, hi = -demand_mean;
    for (Eigen::Index i = 0; i < p0.size(); ++i) {
        if (alpha[i] > 0.0) {
            lo += p_min[i];
            hi += p_max[i];
        } else {
            const double clamped = saturate(p0[i], p_min[i], p_max[i]);
            lo += clamped;
            hi += clamped;
        }
    }
    return FeasibilityInterval{lo, hi};
}

}  // namespace

FeasibilityInterval feasibility_interval(const Network& net, const FirstStage& x,
                                         const Scenario& scenario) {
    Eigen::VectorXd p_min_eff, p_max_eff;
    effective_limits(net, scenario, p_min_eff, p_max_eff);
    return interval_from(x.p0, x.alpha, p_min_eff, p_max_eff, net.total_mean_demand());
}

double SlackProblem::total_output(double s) const {
    double out = 0.0;
    for (Eigen::Index i = 0; i < p0.size(); ++i) {
        const double target = p0[i] + alpha[i] * (sigma_d + s);
        out += sat_value(target, p_min[i], p_max[i], tau[i]);
    }
    return out;
}

double SlackProblem::output_slope(double s) const {
    double slope = 0.0;
    for (Eigen::Index i = 0; i < p0.size(); ++i) {
        const double target = p0[i] + alpha[i] * (sigma_d + s);
        slope += alpha[i] * sat_deriv(target, p_min[i], p_max[i], tau[i]);
    }
    return slope;
}

double slack_tolerance(const Network& net) {
    return 1e-9 * (std::abs(net.total_mean_demand()) + 1.0);
}

namespace {

/// Guarded Newton refinement from a bisection-converged point. The balance
/// residual is piecewise smooth and monotone, so accepting only improving
/// steps drives it to machine precision; this keeps the slack a continuous
/// function of the inputs, which finite-difference probes rely on.
double polish_slack(const SlackProblem& prob, double s) {
    const double floor = 1e-15 * (std::abs(prob.total_demand()) + 1.0);
    double r = prob.residual(s);
    for (int it = 0; it < 6 && std::abs(r) > floor; ++it) {
        const double slope = prob.output_slope(s);
        if (slope <= 0.0) break;
        const double candidate = s - r / slope;
        const double r_new = prob.residual(candidate);
        if (std::abs(r_new) >= std::abs(r)) break;
        s = candidate;
        r = r_new;
    }
    return s;
}

}  // namespace

double solve_slack(const SlackProblem& prob, double tol_s,
                   std::optional<std::pair<double, double>> bracket) {
    const Eigen::Index g = prob.p0.size();
    bool any_participating = false;
    for (Eigen::Index i = 0; i < g; ++i) any_participating |= prob.alpha[i] > 0.0;

    const auto infeasible = [&]() -> ScenarioInfeasible {
        const FeasibilityInterval df =
            interval_from(prob.p0, prob.alpha, prob.p_min, prob.p_max, prob.demand_mean);
        return ScenarioInfeasible(prob.sigma_d, df.lower, df.upper);
    };

    if (!any_participating) {
        if (std::abs(prob.residual(0.0)) <= tol_s) return 0.0;
        throw infeasible();
    }

    double lo, hi;
    if (bracket) {
        lo = bracket->first;
        hi = bracket->second;
        if (lo > hi) throw BisectionStall("bracket lower end above upper end");
    } else {
        const double delta_d = prob.residual(0.0);
        if (std::abs(delta_d) <= tol_s) return polish_slack(prob, 0.0);
        if (delta_d < 0.0) {
            // Up-reserves: slack at least -delta_d; all participating units hit
            // their upper limits at the max breakpoint.
            lo = -delta_d;
            hi = -std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < g; ++i) {
                if (prob.alpha[i] > 0.0)
                    hi = std::max(hi, (prob.p_max[i] + prob.tau[i] - prob.p0[i]) / prob.alpha[i] -
                                          prob.sigma_d);
            }
        } else {
            hi = -delta_d;
            lo = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < g; ++i) {
                if (prob.alpha[i] > 0.0)
                    lo = std::min(lo, (prob.p_min[i] - prob.tau[i] - prob.p0[i]) / prob.alpha[i] -
                                          prob.sigma_d);
            }
        }
    }

    // The delta-d end of the bracket assumes the participation factors sum to
    // at most one; repair with the saturation breakpoints when the residual
    // sign disagrees (e.g. finite-difference probes slightly off the simplex).
    double r_lo = prob.residual(lo);
    double r_hi = prob.residual(hi);
    if (r_lo > tol_s) {
        double glo = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < g; ++i) {
            if (prob.alpha[i] > 0.0)
                glo = std::min(glo, (prob.p_min[i] - prob.tau[i] - prob.p0[i]) / prob.alpha[i] -
                                        prob.sigma_d);
        }
        lo = glo;
        r_lo = prob.residual(lo);
    }
    if (r_hi < -tol_s) {
        double ghi = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < g; ++i) {
            if (prob.alpha[i] > 0.0)
                ghi = std::max(ghi, (prob.p_max[i] + prob.tau[i] - prob.p0[i]) / prob.alpha[i] -
                                        prob.sigma_d);
        }
        hi = ghi;
        r_hi = prob.residual(hi);
    }
    if (std::abs(r_lo) <= tol_s) return polish_slack(prob, lo);
    if (std::abs(r_hi) <= tol_s) return polish_slack(prob, hi);
    if (r_lo > 0.0 || r_hi < 0.0) {
        if (bracket) throw BisectionStall("supplied bracket does not straddle the balance root");
        throw infeasible();
    }

    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = prob.residual(mid);
        if (std::abs(r) <= tol_s) return polish_slack(prob, mid);
        (r < 0.0 ? lo : hi) = mid;
    }
    throw BisectionStall("slack bisection failed to reach tolerance " + std::to_string(tol_s));
}

RecourseSolution solve_recourse(const Network& net, const FirstStage& x, const Scenario& scenario,
                                RecourseMode mode, const SmoothingParams& smoothing,
                                const CostConfig& costs) {
    const int g = net.num_generators();
    RecourseSolution sol;
    sol.mode = mode;
    sol.sigma_d = scenario.sigma_d;
    effective_limits(net, scenario, sol.p_min_eff, sol.p_max_eff);

    sol.tau.resize(g);
    for (int i = 0; i < g; ++i)
        sol.tau[i] = mode == RecourseMode::smooth
                         ? smoothing.tau_sat_factor * (sol.p_max_eff[i] - sol.p_min_eff[i])
                         : 0.0;

    const FeasibilityInterval df =
        interval_from(x.p0, x.alpha, sol.p_min_eff, sol.p_max_eff, net.total_mean_demand());
    if (!df.contains_strictly(scenario.sigma_d))
        throw ScenarioInfeasible(scenario.sigma_d, df.lower, df.upper);

    SlackProblem prob;
    prob.p0 = x.p0;
    prob.alpha = x.alpha;
    prob.p_min = sol.p_min_eff;
    prob.p_max = sol.p_max_eff;
    prob.tau = sol.tau;
    prob.sigma_d = scenario.sigma_d;
    prob.demand_mean = net.total_mean_demand();
    sol.slack = solve_slack(prob, slack_tolerance(net));

    sol.p_target.resize(g);
    sol.p.resize(g);
    for (int i = 0; i < g; ++i) {
        sol.p_target[i] = x.p0[i] + x.alpha[i] * (scenario.sigma_d + sol.slack);
        sol.p[i] = sat_value(sol.p_target[i], sol.p_min_eff[i], sol.p_max_eff[i], sol.tau[i]);
    }

    Eigen::VectorXd injection = Eigen::VectorXd::Zero(net.num_buses());
    for (int i = 0; i < g; ++i)
        injection[net.generators()[static_cast<std::size_t>(i)].bus] += sol.p[i];
    for (int l = 0; l < net.num_loads(); ++l) {
        const Load& load = net.loads()[static_cast<std::size_t>(l)];
        injection[load.bus] -= load.mean + scenario.load_fluct[l];
    }
    sol.theta = net.solve_dc_flow(injection);
    sol.flows = net.line_flows(sol.theta);

    CostTerms terms;
    for (int i = 0; i < g; ++i) {
        const Generator& gen = net.generators()[static_cast<std::size_t>(i)];
        const double c_bar = reserve_unit_cost(net, costs, i);
        const double up = sol.p[i] - x.p0[i] - x.r_plus[i];
        const double down = x.p0[i] - sol.p[i] - x.r_minus[i];
        if (mode == RecourseMode::smooth) {
            terms.reserve_up += costs.gamma_res * c_bar * softplus(up, smoothing.tau_pos);
            if (!gen.free_spill)
                terms.reserve_down += costs.gamma_res * c_bar * softplus(down, smoothing.tau_pos);
        } else {
            terms.reserve_up += costs.gamma_res * c_bar * std::max(0.0, up);
            if (!gen.free_spill)
                terms.reserve_down += costs.gamma_res * c_bar * std::max(0.0, down);
        }
    }
    for (int e = 0; e < net.num_lines(); ++e) {
        const Line& line = net.lines()[static_cast<std::size_t>(e)];
        const double excess =
            std::max(0.0, std::abs(sol.flows[e]) - costs.delta_line * line.flow_limit);
        terms.line += costs.gamma_line * excess * excess;
    }
    sol.cost_terms = terms;
    return sol;
}

double recourse_cost(const RecourseSolution& solution) { return solution.cost_terms.total(); }

}  // namespace satopf
