#include "satopf/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "satopf/recourse.hpp"
#include "satopf/util.hpp"

namespace satopf {

AffineRecourse affine_evaluate(const Network& net, const FirstStage& x, const Scenario& scenario,
                               const CostConfig& costs, bool with_gen_penalty) {
    const int g = net.num_generators();
    AffineRecourse out;
    out.p.resize(g);
    for (int i = 0; i < g; ++i) out.p[i] = x.p0[i] + x.alpha[i] * scenario.sigma_d;

    Eigen::VectorXd injection = Eigen::VectorXd::Zero(net.num_buses());
    for (int i = 0; i < g; ++i)
        injection[net.generators()[static_cast<std::size_t>(i)].bus] += out.p[i];
    for (int l = 0; l < net.num_loads(); ++l) {
        const Load& load = net.loads()[static_cast<std::size_t>(l)];
        injection[load.bus] -= load.mean + scenario.load_fluct[l];
    }
    out.theta = net.solve_dc_flow(injection);
    out.flows = net.line_flows(out.theta);

    Eigen::VectorXd p_min_eff, p_max_eff;
    effective_limits(net, scenario, p_min_eff, p_max_eff);
    for (int i = 0; i < g; ++i) {
        const Generator& gen = net.generators()[static_cast<std::size_t>(i)];
        const double c_bar = reserve_unit_cost(net, costs, i);
        out.reserve_up += costs.gamma_res * c_bar * std::max(0.0, out.p[i] - x.p0[i] - x.r_plus[i]);
        if (!gen.free_spill)
            out.reserve_down +=
                costs.gamma_res * c_bar * std::max(0.0, x.p0[i] - out.p[i] - x.r_minus[i]);
        const double over = std::max(0.0, out.p[i] - p_max_eff[i]);
        const double under = std::max(0.0, p_min_eff[i] - out.p[i]);
        if (over > 1e-12 || under > 1e-12) out.any_gen_violation = true;
        if (with_gen_penalty) out.gen_penalty += costs.gamma_gen * (over * over + under * under);
    }
    for (int e = 0; e < net.num_lines(); ++e) {
        const Line& line = net.lines()[static_cast<std::size_t>(e)];
        const double excess =
            std::max(0.0, std::abs(out.flows[e]) - costs.delta_line * line.flow_limit);
        out.line_penalty += costs.gamma_line * excess * excess;
    }
    return out;
}

double CapConstraint::upper_margin(double alpha) const {
    return z * std::sqrt(alpha * alpha * sigma_sum * sigma_sum + sigma_w * sigma_w);
}

bool CapConstraint::satisfied(double p0, double alpha, double tol) const {
    if (p0 + upper_margin(alpha) > upper + tol) return false;
    if (p0 - z * sigma_sum * alpha < lower - tol) return false;
    return true;
}

double CapConstraint::alpha_bound(double p0) const {
    const double k = z * sigma_sum;
    if (k <= 0.0) return std::numeric_limits<double>::infinity();
    const double room = upper - p0;
    if (wind) {
        const double zsw = z * sigma_w;
        if (room < zsw) return -std::numeric_limits<double>::infinity();
        return std::sqrt(room * room - zsw * zsw) / k;
    }
    return room / k;
}

CapConstraint cap_reformulate(const Generator& gen, double eps_gen, double sigma_sum,
                              double sigma_w) {
    CapConstraint c;
    c.wind = gen.kind == GenKind::wind;
    c.z = inv_normal_cdf(1.0 - eps_gen);
    c.sigma_sum = sigma_sum;
    c.sigma_w = c.wind ? sigma_w : 0.0;
    c.upper = gen.p_max;  // mean capacity for wind
    c.lower = gen.p_min;
    return c;
}

std::vector<CapConstraint> cap_reformulate_all(const Network& net, const UncertaintyModel& model,
                                               double eps_gen) {
    const double sigma_sum = sigma_d_stats(model).second;
    std::vector<CapConstraint> cells;
    cells.reserve(static_cast<std::size_t>(net.num_generators()));
    int w = 0;
    for (int i = 0; i < net.num_generators(); ++i) {
        const Generator& gen = net.generators()[static_cast<std::size_t>(i)];
        const double sw = gen.kind == GenKind::wind ? model.wind_sigma[w++] : 0.0;
        cells.push_back(cap_reformulate(gen, eps_gen, sigma_sum, sw));
    }
    return cells;
}

namespace {

/// Project (p, a) onto the half-plane {p + k*a <= b} (k may be negative to
/// encode the mirrored lower constraint).
void project_halfplane(double& p, double& a, double k, double b) {
    const double viol = p + k * a - b;
    if (viol <= 0.0) return;
    const double scale = viol / (1.0 + k * k);
    p -= scale;
    a -= scale * k;
}

/// Project (p, a) onto {p + z*sqrt(a^2 s^2 + sw^2) <= U} with z, s, sw > 0 by
/// a scalar search on the dual multiplier; the inner stationarity equation in
/// a is monotone and solved by bisection.
void project_wind_upper(double& p, double& a, double z, double s, double sw, double U) {
    const auto margin = [&](double aa) { return z * std::hypot(aa * s, sw); };
    if (p + margin(a) <= U) return;
    const double p_bar = p, a_bar = a;

    const auto a_of_lambda = [&](double lambda) {
        // solve t * (1 + lambda*z*s^2 / hypot(t*s, sw)) = a_bar for t
        double lo = -std::abs(a_bar) - 1.0, hi = std::abs(a_bar) + 1.0;
        for (int it = 0; it < 120; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double f = mid * (1.0 + lambda * z * s * s / std::hypot(mid * s, sw)) - a_bar;
            (f < 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    const auto residual = [&](double lambda) {
        const double aa = a_of_lambda(lambda);
        return (p_bar - lambda) + margin(aa) - U;
    };
    double lam_lo = 0.0, lam_hi = 1.0;
    while (residual(lam_hi) > 0.0 && lam_hi < 1e12) lam_hi *= 2.0;
    for (int it = 0; it < 120; ++it) {
        const double mid = 0.5 * (lam_lo + lam_hi);
        (residual(mid) > 0.0 ? lam_lo : lam_hi) = mid;
    }
    const double lambda = 0.5 * (lam_lo + lam_hi);
    a = a_of_lambda(lambda);
    p = p_bar - lambda;
}

}  // namespace

std::vector<BlockProjector> cap_projectors(const std::vector<CapConstraint>& cells) {
    std::vector<BlockProjector> blocks;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const CapConstraint cell = cells[i];
        const int gi = static_cast<int>(i);
        // Lower constraint p0 - z*s*alpha >= lower, i.e. -p0 + z*s*alpha <= -lower.
        if (cell.z * cell.sigma_sum > 0.0) {
            blocks.push_back([cell, gi](FirstStage& x) {
                double p = -x.p0[gi], a = x.alpha[gi];
                project_halfplane(p, a, cell.z * cell.sigma_sum, -cell.lower);
                x.p0[gi] = -p;
                x.alpha[gi] = a;
            });
        } else {
            blocks.push_back([cell, gi](FirstStage& x) {
                x.p0[gi] = std::max(x.p0[gi], cell.lower);
            });
        }
        // Upper constraint.
        if (cell.wind && cell.z > 0.0 && cell.sigma_sum > 0.0 && cell.sigma_w > 0.0) {
            blocks.push_back([cell, gi](FirstStage& x) {
                project_wind_upper(x.p0[gi], x.alpha[gi], cell.z, cell.sigma_sum, cell.sigma_w,
                                   cell.upper);
            });
        } else if (cell.z > 0.0 && cell.sigma_sum > 0.0) {
            blocks.push_back([cell, gi](FirstStage& x) {
                double p = x.p0[gi], a = x.alpha[gi];
                project_halfplane(p, a, cell.z * cell.sigma_sum, cell.upper);
                x.p0[gi] = p;
                x.alpha[gi] = a;
            });
        } else {
            // Variance-free margin: a box constraint on p0 alone.
            blocks.push_back([cell, gi](FirstStage& x) {
                x.p0[gi] = std::min(x.p0[gi], cell.upper - cell.z * cell.sigma_w);
            });
        }
    }
    return blocks;
}

namespace {

struct SaaEvaluation {
    double objective = 0.0;
    Eigen::VectorXd gradient;  // packed (p0, r+, r-, alpha)
};

/// Full SAA objective and subgradient under the affine policy. Positive-part
/// kinks take subgradient zero at the kink.
SaaEvaluation saa_evaluate(const Network& net, const FirstStage& x,
                           const std::vector<Scenario>& scenarios, const CostConfig& costs,
                           bool with_gen_penalty) {
    const int g = net.num_generators();
    const std::size_t n = scenarios.size();
    const Eigen::VectorXd c_bar = reserve_unit_costs(net, costs);

    std::vector<double> obj_terms(n, 0.0);
    std::vector<Eigen::VectorXd> grad_terms(n);
    parallel_for(n, [&](std::size_t k) {
        const Scenario& sc = scenarios[k];
        const AffineRecourse rec = affine_evaluate(net, x, sc, costs, with_gen_penalty);
        obj_terms[k] = rec.cost();

        Eigen::VectorXd grad = Eigen::VectorXd::Zero(4 * g);
        // Line-penalty adjoint shared by the p0 and alpha coordinates.
        Eigen::VectorXd y = Eigen::VectorXd::Zero(net.num_buses());
        for (int e = 0; e < net.num_lines(); ++e) {
            const Line& line = net.lines()[static_cast<std::size_t>(e)];
            const double excess =
                std::max(0.0, std::abs(rec.flows[e]) - costs.delta_line * line.flow_limit);
            if (excess <= 0.0) continue;
            const double w =
                2.0 * costs.gamma_line * excess * (rec.flows[e] > 0.0 ? 1.0 : -1.0);
            y[line.from] += w * line.susceptance;
            y[line.to] -= w * line.susceptance;
        }
        const Eigen::VectorXd lambda = net.solve_angles(y);

        Eigen::VectorXd p_min_eff, p_max_eff;
        effective_limits(net, sc, p_min_eff, p_max_eff);
        for (int i = 0; i < g; ++i) {
            const Generator& gen = net.generators()[static_cast<std::size_t>(i)];
            const double dev = x.alpha[i] * sc.sigma_d;  // p_i - p0_i
            const double up_active = dev - x.r_plus[i] > 0.0 ? 1.0 : 0.0;
            const double down_active =
                (!gen.free_spill && -dev - x.r_minus[i] > 0.0) ? 1.0 : 0.0;
            double dq_dp = lambda[gen.bus];  // line penalty via the injection
            if (with_gen_penalty) {
                const double over = std::max(0.0, x.p0[i] + dev - p_max_eff[i]);
                const double under = std::max(0.0, p_min_eff[i] - x.p0[i] - dev);
                dq_dp += 2.0 * costs.gamma_gen * (over - under);
            }
            grad[i] += dq_dp;
            grad[3 * g + i] += sc.sigma_d * dq_dp +
                               costs.gamma_res * c_bar[i] * sc.sigma_d * (up_active - down_active);
            grad[g + i] += -costs.gamma_res * c_bar[i] * up_active;
            grad[2 * g + i] += -costs.gamma_res * c_bar[i] * down_active;
        }
        grad_terms[k] = grad;
    });

    SaaEvaluation out;
    out.objective = first_stage_cost(net, costs, x) + mean_of(obj_terms);
    out.gradient = Eigen::VectorXd::Zero(4 * g);
    for (std::size_t k = 0; k < n; ++k) out.gradient += grad_terms[k];
    if (n > 0) out.gradient /= static_cast<double>(n);
    for (int i = 0; i < g; ++i) {
        out.gradient[i] += generation_unit_cost(net, i);
        out.gradient[g + i] += c_bar[i];
        out.gradient[2 * g + i] += c_bar[i];
    }
    return out;
}

FirstStage default_start(const Network& net, const FeasibleSetSpec& spec) {
    const int g = net.num_generators();
    FirstStage x = FirstStage::zeros(g);
    for (int i = 0; i < g; ++i) {
        x.p0[i] = 0.5 * (spec.p0_lower[i] + spec.p0_upper[i]);
        x.alpha[i] = 1.0 / g;
    }
    return x;
}

SaaResult solve_affine_saa(const Network& net, const UncertaintyModel& model,
                           const CostConfig& costs, const FeasibleSetSpec& spec, int n_scenarios,
                           bool with_gen_penalty, const std::vector<BlockProjector>& blocks,
                           const std::vector<CapConstraint>& cells, std::uint64_t seed,
                           const SaaConfig& cfg) {
    const std::vector<Scenario> scenarios = sample(model, seed, n_scenarios);
    const int g = net.num_generators();

    const auto in_cells = [&cells](const FirstStage& y) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (!cells[i].satisfied(y.p0[static_cast<Eigen::Index>(i)],
                                    y.alpha[static_cast<Eigen::Index>(i)], 1e-6))
                return false;
        }
        return true;
    };
    FirstStage x = dykstra_project(default_start(net, spec), blocks);
    if (!is_feasible(x, spec, 1e-6) || !in_cells(x))
        throw EmptyFeasibleSet(
            "projection onto the constrained set failed to converge; the chance "
            "constraints appear infeasible for this instance");

    Eigen::VectorXd adagrad_acc = Eigen::VectorXd::Zero(4 * g);
    SaaResult best;
    best.x = x;
    best.objective = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= cfg.max_iters; ++it) {
        const SaaEvaluation ev = saa_evaluate(net, x, scenarios, costs, with_gen_penalty);
        if (ev.objective < best.objective) {
            best.objective = ev.objective;
            best.x = x;
        }
        best.iterations = it;

        if (it % std::max(1, cfg.pg_check_every) == 0 || it == cfg.max_iters) {
            const FirstStage natural =
                dykstra_project(FirstStage::unpack(x.pack() - ev.gradient), blocks);
            if (distance(x, natural) <= cfg.pg_tol) break;
        }

        Eigen::VectorXd step(4 * g);
        switch (cfg.step_rule) {
            case StepRule::adagrad_coordinate:
                adagrad_acc.array() += ev.gradient.array().square();
                step =
                    (cfg.base_step / (cfg.adagrad_epsilon + adagrad_acc.array()).sqrt()).matrix();
                break;
            case StepRule::adagrad_norm:
                adagrad_acc[0] += ev.gradient.squaredNorm();
                step.setConstant(cfg.base_step / std::sqrt(cfg.adagrad_epsilon + adagrad_acc[0]));
                break;
            case StepRule::fixed:
                step.setConstant(cfg.base_step);
                break;
        }
        x = dykstra_project(
            FirstStage::unpack(x.pack() - (step.array() * ev.gradient.array()).matrix()), blocks);
    }
    return best;
}

}  // namespace

SaaResult solve_gp(const Network& net, const UncertaintyModel& model, const CostConfig& costs,
                   const FeasibleSetSpec& spec, int n_scenarios, double gamma_gen,
                   std::uint64_t seed, const SaaConfig& cfg) {
    CostConfig c = costs;
    c.gamma_gen = gamma_gen;
    return solve_affine_saa(net, model, c, spec, n_scenarios, true,
                            feasible_set_projectors(spec), {}, seed, cfg);
}

SaaResult solve_cap(const Network& net, const UncertaintyModel& model, const CostConfig& costs,
                    const FeasibleSetSpec& spec, int n_scenarios, double eps_gen,
                    std::uint64_t seed, const SaaConfig& cfg) {
    std::vector<BlockProjector> blocks = feasible_set_projectors(spec);
    const std::vector<CapConstraint> cells = cap_reformulate_all(net, model, eps_gen);
    for (const CapConstraint& c : cells) {
        if (!std::isfinite(c.z))
            throw EmptyFeasibleSet("eps_gen = " + std::to_string(eps_gen) +
                                   " gives a non-finite chance-constraint quantile");
    }

    // Quick necessity check: even at the per-generator least-restrictive
    // participation, the nominal outputs must be able to meet demand.
    double attainable = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        double hi = spec.p0_upper[static_cast<Eigen::Index>(i)];
        if (cells[i].wind)
            hi = std::min(hi, cells[i].upper - cells[i].z * cells[i].sigma_w);
        else if (spec.regular[i])
            hi = std::min(hi, spec.p_max[static_cast<Eigen::Index>(i)]);
        attainable += std::max(hi, spec.p0_lower[static_cast<Eigen::Index>(i)]);
    }
    if (attainable < spec.demand - 1e-9)
        throw EmptyFeasibleSet("CAP chance constraints cap nominal generation at " +
                               std::to_string(attainable) + " < demand " +
                               std::to_string(spec.demand));

    for (auto& b : cap_projectors(cells)) blocks.push_back(std::move(b));
    return solve_affine_saa(net, model, costs, spec, n_scenarios, false, blocks, cells, seed, cfg);
}

}  // namespace satopf
