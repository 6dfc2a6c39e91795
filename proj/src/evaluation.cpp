#include "satopf/evaluation.hpp"

#include <cmath>
#include <limits>

#include "satopf/util.hpp"

namespace satopf {

EvaluationReport monte_carlo_evaluate(const Network& net, const UncertaintyModel& model,
                                      const FirstStage& x, const CostConfig& costs,
                                      const EvalOptions& options) {
    const std::vector<Scenario> scenarios =
        sample(model, options.seed, options.sample_size);
    const std::size_t n = scenarios.size();
    const SmoothingParams smoothing = SmoothingParams::from_costs(costs);

    std::uint64_t hash = 0xCBF29CE484222325ull;
    for (const Scenario& s : scenarios) {
        hash = hash_doubles({s.load_fluct.data(), static_cast<std::size_t>(s.load_fluct.size())},
                            hash);
        hash = hash_doubles({s.wind_cap.data(), static_cast<std::size_t>(s.wind_cap.size())}, hash);
    }

    constexpr double kSkip = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> penalty(n, kSkip), line_viol(n, 0.0), affine_viol(n, 0.0);
    std::vector<double> wind_prod(n, 0.0), wind_avail(n, 0.0);
    parallel_for(n, [&](std::size_t k) {
        const Scenario& sc = scenarios[k];
        try {
            const RecourseSolution sol =
                solve_recourse(net, x, sc, RecourseMode::exact, smoothing, costs);
            penalty[k] = sol.cost_terms.reserve_up + sol.cost_terms.reserve_down;
            bool violated = false;
            for (int e = 0; e < net.num_lines(); ++e) {
                const double limit = options.line_violation_factor *
                                     net.lines()[static_cast<std::size_t>(e)].flow_limit;
                if (std::abs(sol.flows[e]) > limit) {
                    violated = true;
                    break;
                }
            }
            line_viol[k] = violated ? 1.0 : 0.0;
            for (int w = 0; w < net.num_wind(); ++w) {
                wind_prod[k] += sol.p[net.wind_indices()[static_cast<std::size_t>(w)]];
                wind_avail[k] += sc.wind_cap[w];
            }
            if (options.include_affine_metrics) {
                const AffineRecourse aff = affine_evaluate(net, x, sc, costs, false);
                affine_viol[k] = aff.any_gen_violation ? 1.0 : 0.0;
            }
        } catch (const ScenarioInfeasible&) {
            // left as skip marker
        }
    });

    EvaluationReport rep;
    rep.sample_size = static_cast<long>(n);
    rep.seed = options.seed;
    rep.scenario_hash = hash;
    rep.first_stage_gen_cost = first_stage_generation_cost(net, costs, x);
    rep.first_stage_reserve_cost = first_stage_reserve_cost(net, costs, x);

    std::vector<double> pen_ok, line_ok, aff_ok, prod_ok, avail_ok;
    pen_ok.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (std::isnan(penalty[k])) {
            ++rep.infeasible_count;
            continue;
        }
        pen_ok.push_back(penalty[k]);
        line_ok.push_back(line_viol[k]);
        aff_ok.push_back(affine_viol[k]);
        prod_ok.push_back(wind_prod[k]);
        avail_ok.push_back(wind_avail[k]);
    }
    if (n > 0 && static_cast<double>(rep.infeasible_count) >
                     options.max_infeasible_fraction * static_cast<double>(n))
        throw ExcessiveInfeasibility("evaluation: " + std::to_string(rep.infeasible_count) +
                                     " of " + std::to_string(n) + " scenarios outside D_F");

    rep.expected_penalty_cost = pen_ok.empty() ? 0.0 : mean_of(pen_ok);
    rep.expected_total_cost =
        rep.first_stage_gen_cost + rep.first_stage_reserve_cost + rep.expected_penalty_cost;
    rep.joint_line_violation_prob = line_ok.empty() ? 0.0 : mean_of(line_ok);
    if (options.include_affine_metrics)
        rep.affine_gen_violation_prob = aff_ok.empty() ? 0.0 : mean_of(aff_ok);
    if (net.num_wind() > 0) {
        const double avail = pairwise_sum(avail_ok);
        rep.wind_utilization_pct = avail > 0.0 ? 100.0 * pairwise_sum(prod_ok) / avail : 100.0;
    }
    return rep;
}

void StudySpec::apply_default_grids() {
    if (sa_gamma_line.empty()) sa_gamma_line = logspace(1, 5, 17);
    if (gp_cap_gamma_line.empty()) gp_cap_gamma_line = logspace(1, 5, 9);
    if (gamma_gen_grid.empty()) gamma_gen_grid = logspace(0, 5, 16);
}

namespace {

SweepRecord run_point(const Network& net, const UncertaintyModel& model,
                      const FeasibleSetSpec& spec, const StudySpec& study, SweepPoint point) {
    SweepRecord rec;
    rec.point = point;
    CostConfig costs = study.costs;
    costs.gamma_line = point.gamma_line;
    try {
        FirstStage x;
        if (point.model == "SA") {
            const SaaResult init =
                solve_gp(net, model, costs, spec, study.saa_scenarios, study.gp_init_gamma_gen,
                         point.solve_seed, study.saa);
            PsgConfig cfg = study.psg;
            cfg.seed = derive_seed(point.solve_seed, 0x534Dull);
            x = solve_smooth(net, model, costs, spec, init.x, cfg).best;
        } else if (point.model == "GP") {
            x = solve_gp(net, model, costs, spec, study.saa_scenarios, point.gamma_gen,
                         point.solve_seed, study.saa)
                    .x;
        } else if (point.model == "CAP") {
            x = solve_cap(net, model, costs, spec, study.saa_scenarios, point.eps_gen,
                          point.solve_seed, study.saa)
                    .x;
        } else {
            throw Error("unknown sweep model tag: " + point.model);
        }
        EvalOptions eval = study.eval;
        eval.include_affine_metrics =
            eval.include_affine_metrics || point.model == "GP" || point.model == "CAP";
        rec.solution = x;
        rec.report = monte_carlo_evaluate(net, model, x, costs, eval);
        rec.solved = true;
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    return rec;
}

}  // namespace

std::vector<SweepRecord> pareto_sweep(const Network& net, const UncertaintyModel& model,
                                      const FeasibleSetSpec& spec, const StudySpec& study_in) {
    StudySpec study = study_in;
    study.apply_default_grids();

    std::vector<SweepPoint> points;
    for (const std::string& m : study.models) {
        for (int r = 0; r < study.replicates; ++r) {
            // One SAA/PSG sample per replicate, shared across models and
            // parameter values so replicate r is comparable everywhere.
            const std::uint64_t solve_seed = derive_seed(study.base_seed, 7700u + static_cast<std::uint64_t>(r));
            if (m == "SA") {
                for (double gl : study.sa_gamma_line)
                    points.push_back({m, gl, study.gp_init_gamma_gen, 0.0, r, solve_seed});
            } else if (m == "GP") {
                for (double gl : study.gp_cap_gamma_line)
                    for (double gg : study.gamma_gen_grid)
                        points.push_back({m, gl, gg, 0.0, r, solve_seed});
            } else if (m == "CAP") {
                for (double gl : study.gp_cap_gamma_line)
                    for (double eg : study.eps_gen_grid)
                        points.push_back({m, gl, 0.0, eg, r, solve_seed});
            }
        }
    }

    std::vector<SweepRecord> records(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        records[i] = run_point(net, model, spec, study, points[i]);
    return records;
}

std::optional<SweepRecord> select_best(const std::vector<SweepRecord>& records,
                                       double max_violation) {
    std::optional<SweepRecord> best;
    for (const SweepRecord& r : records) {
        if (!r.solved) continue;
        if (r.report.joint_line_violation_prob > max_violation) continue;
        if (!best || r.report.expected_total_cost < best->report.expected_total_cost) best = r;
    }
    return best;
}

double frontier_cost(const std::vector<SweepRecord>& records, const std::string& model,
                     double level) {
    double best = std::numeric_limits<double>::infinity();
    for (const SweepRecord& r : records) {
        if (!r.solved || r.point.model != model) continue;
        if (r.report.joint_line_violation_prob <= level)
            best = std::min(best, r.report.expected_total_cost);
    }
    return best;
}

}  // namespace satopf
