#pragma once

#include <Eigen/Dense>

#include "satopf/network.hpp"

namespace satopf {

struct FirstStage;

/// Cost and penalty coefficients. Generator unit costs c_i live on the
/// Generator records; everything here is a global factor.
struct CostConfig {
    double c_res = 1.5;           // reserve capacity cost factor
    double c_wind = 0.1;          // relative cost factor for wind reserves
    double gamma_res = 10.0;      // penalty factor for reserves beyond schedule
    double gamma_line = 100.0;    // line flow penalty coefficient (swept)
    double gamma_gen = 20.0;      // GP generator violation penalty (swept)
    double delta_line = 0.95;     // soft line limit fraction delta_ij
    double tau_sat_factor = 1e-4; // tau_sat,i = factor * (p^max_i(w) - p^min_i(w))
    double tau_pos = 1e-4;        // softplus width
    double epsilon_gen = 1e-2;    // CAP chance-constraint violation allowance
};

/// c_bar_i: c_i * c_res for regular units, c_wind * c_res * min_{k regular} c_k
/// for wind units.
double reserve_unit_cost(const Network& net, const CostConfig& costs, int gen);
Eigen::VectorXd reserve_unit_costs(const Network& net, const CostConfig& costs);

/// Nominal generation unit cost used in the first-stage objective:
/// c_i for regular units, 0 for wind.
double generation_unit_cost(const Network& net, int gen);
Eigen::VectorXd generation_unit_costs(const Network& net);

double first_stage_generation_cost(const Network& net, const CostConfig& costs,
                                   const FirstStage& x);
double first_stage_reserve_cost(const Network& net, const CostConfig& costs, const FirstStage& x);
double first_stage_cost(const Network& net, const CostConfig& costs, const FirstStage& x);

}  // namespace satopf
