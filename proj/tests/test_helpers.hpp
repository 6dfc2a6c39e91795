#pragma once

#include <random>
#include <vector>

#include "satopf/first_stage.hpp"
#include "satopf/network.hpp"
#include "satopf/uncertainty.hpp"

namespace satopf::testing {

/// n buses in a path 0-1-...-(n-1) with unit susceptances unless custom lines
/// are given.
inline Network path_network(int n_buses, std::vector<Line> lines = {},
                            std::vector<Generator> gens = {}, std::vector<Load> loads = {}) {
    NetworkData d;
    for (int i = 0; i < n_buses; ++i) d.buses.push_back({i, i == 0});
    if (lines.empty()) {
        for (int i = 0; i + 1 < n_buses; ++i) d.lines.push_back({i, i + 1, 1.0, 10.0});
    } else {
        d.lines = std::move(lines);
    }
    d.generators = std::move(gens);
    d.loads = std::move(loads);
    return Network(std::move(d));
}

inline Generator regular_gen(int bus, double cost, double p_max, double p_min = 0.0) {
    Generator g;
    g.bus = bus;
    g.kind = GenKind::regular;
    g.unit_cost = cost;
    g.p_min = p_min;
    g.p_max = p_max;
    g.p0_lower = p_min;
    g.p0_upper = p_max;
    g.r_plus_max = p_max;
    g.r_minus_max = p_max;
    return g;
}

inline Generator wind_gen(int bus, double mu, double sigma) {
    Generator g;
    g.bus = bus;
    g.kind = GenKind::wind;
    g.p_min = 0.0;
    g.p_max = mu;
    g.p0_lower = 0.0;
    g.p0_upper = mu + 5.0 * sigma;
    g.r_plus_max = g.p0_upper;
    g.r_minus_max = g.p0_upper;
    return g;
}

/// Two generators at buses 0 and 1, demand split between them; the workhorse
/// instance of the recourse examples.
inline Network two_gen_network(double p_max1, double p_max2, double demand) {
    return path_network(
        2, {{0, 1, 1.0, 100.0}},
        {regular_gen(0, 10.0, p_max1), regular_gen(1, 20.0, p_max2)},
        {{0, demand / 2}, {1, demand / 2}});
}

inline Scenario fluct_scenario(const Network& net, double sigma_d) {
    Scenario s;
    const int n_loads = net.num_loads();
    s.load_fluct = Eigen::VectorXd::Constant(n_loads, sigma_d / std::max(1, n_loads));
    s.sigma_d = s.load_fluct.sum();
    s.wind_cap.resize(net.num_wind());
    for (int w = 0; w < net.num_wind(); ++w)
        s.wind_cap[w] = net.generators()[static_cast<std::size_t>(net.wind_indices()[w])].p_max;
    return s;
}

/// A point of X drawn uniformly-ish: projections force feasibility.
inline FirstStage random_feasible(const FeasibleSetSpec& spec, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int g = spec.size();
    FirstStage x = FirstStage::zeros(g);
    for (int i = 0; i < g; ++i) {
        x.p0[i] = spec.p0_lower[i] + u(rng) * (spec.p0_upper[i] - spec.p0_lower[i]);
        x.alpha[i] = u(rng);
    }
    x.p0 = project_hyperplane_box(x.p0, spec.p0_lower, spec.p0_upper, spec.demand);
    Eigen::VectorXd lb(g);
    for (int i = 0; i < g; ++i)
        lb[i] = spec.in_reserve_set[static_cast<std::size_t>(i)] ? spec.epsilon : 0.0;
    x.alpha = project_simplex_lb(x.alpha, lb, 1.0);
    for (int i = 0; i < g; ++i) {
        double up_room = spec.r_plus_max[i];
        double down_room = spec.r_minus_max[i];
        if (spec.regular[static_cast<std::size_t>(i)]) {
            up_room = std::min(up_room, spec.p_max[i] - x.p0[i]);
            down_room = std::min(down_room, x.p0[i] - spec.p_min[i]);
        }
        x.r_plus[i] = u(rng) * std::max(0.0, up_room);
        x.r_minus[i] = u(rng) * std::max(0.0, down_room);
    }
    return x;
}

}  // namespace satopf::testing
