#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "satopf/comparison.hpp"
#include "satopf/costs.hpp"
#include "satopf/first_stage.hpp"
#include "satopf/psg.hpp"
#include "satopf/uncertainty.hpp"

namespace satopf {

struct EvaluationReport {
    double expected_total_cost = 0.0;       // fs gen + fs reserves + reserve penalties
    double first_stage_gen_cost = 0.0;
    double first_stage_reserve_cost = 0.0;
    double expected_penalty_cost = 0.0;      // exact positive-part reserve exceedance
    double joint_line_violation_prob = 0.0;  // any |flow| above the (full) line limit
    double affine_gen_violation_prob = -1.0; // -1 when not requested
    double wind_utilization_pct = -1.0;      // -1 when the case has no wind
    long sample_size = 0;
    std::uint64_t seed = 0;
    long infeasible_count = 0;
    std::uint64_t scenario_hash = 0;  // logs the common-random-number sample
};

struct EvalOptions {
    int sample_size = 100000;
    std::uint64_t seed = 1;
    bool include_affine_metrics = false;
    /// Violations are counted against factor * f^max (1.0 = the full limit;
    /// the optimizer's soft limit would be delta_line).
    double line_violation_factor = 1.0;
    double max_infeasible_fraction = 0.01;
};

/// Out-of-sample evaluation on the true saturation model (exact mode).
/// Deterministic given the seed; reuse one seed across candidate solutions
/// for common random numbers. Throws ExcessiveInfeasibility when more than
/// the allowed fraction of scenarios falls outside D_F.
EvaluationReport monte_carlo_evaluate(const Network& net, const UncertaintyModel& model,
                                      const FirstStage& x, const CostConfig& costs,
                                      const EvalOptions& options);

struct SweepPoint {
    std::string model;  // "SA" | "GP" | "CAP"
    double gamma_line = 0.0;
    double gamma_gen = 0.0;  // GP
    double eps_gen = 0.0;    // CAP
    int replicate = 0;
    std::uint64_t solve_seed = 0;
};

struct SweepRecord {
    SweepPoint point;
    bool solved = false;
    std::string error;
    FirstStage solution;
    EvaluationReport report;
};

struct StudySpec {
    std::vector<std::string> models{"SA", "GP", "CAP"};
    std::vector<double> sa_gamma_line;       // defaults to logspace(1,5,17)
    std::vector<double> gp_cap_gamma_line;   // defaults to logspace(1,5,9)
    std::vector<double> gamma_gen_grid;      // defaults to logspace(0,5,16)
    std::vector<double> eps_gen_grid{1e-3, 1e-2};
    int replicates = 5;
    int saa_scenarios = 500;
    double gp_init_gamma_gen = 20.0;  // warm start for the smooth approximation
    std::uint64_t base_seed = 1;
    CostConfig costs;    // gamma_line / gamma_gen / epsilon_gen overridden per point
    PsgConfig psg;
    SaaConfig saa;
    EvalOptions eval;    // one evaluation sample shared by every record

    void apply_default_grids();
};

/// One record per (model, parameter combination, replicate). Solve failures
/// are recorded and the sweep continues.
std::vector<SweepRecord> pareto_sweep(const Network& net, const UncertaintyModel& model,
                                      const FeasibleSetSpec& spec, const StudySpec& study);

/// Minimum-cost record among those with line violation probability at most
/// max_violation; empty when none qualifies.
std::optional<SweepRecord> select_best(const std::vector<SweepRecord>& records,
                                       double max_violation = 0.005);

/// Frontier query: cheapest cost achieved by `model` at violation <= level
/// (+infinity when the model has no qualifying record).
double frontier_cost(const std::vector<SweepRecord>& records, const std::string& model,
                     double level);

}  // namespace satopf
