#include "satopf/costs.hpp"

#include "satopf/first_stage.hpp"

namespace satopf {

double reserve_unit_cost(const Network& net, const CostConfig& costs, int gen) {
    const Generator& g = net.generators()[static_cast<std::size_t>(gen)];
    if (g.kind == GenKind::regular) return g.unit_cost * costs.c_res;
    return costs.c_wind * costs.c_res * net.min_regular_cost();
}

Eigen::VectorXd reserve_unit_costs(const Network& net, const CostConfig& costs) {
    Eigen::VectorXd c(net.num_generators());
    for (int i = 0; i < net.num_generators(); ++i) c[i] = reserve_unit_cost(net, costs, i);
    return c;
}

double generation_unit_cost(const Network& net, int gen) {
    const Generator& g = net.generators()[static_cast<std::size_t>(gen)];
    return g.kind == GenKind::regular ? g.unit_cost : 0.0;
}

Eigen::VectorXd generation_unit_costs(const Network& net) {
    Eigen::VectorXd c(net.num_generators());
    for (int i = 0; i < net.num_generators(); ++i) c[i] = generation_unit_cost(net, i);
    return c;
}

double first_stage_generation_cost(const Network& net, const CostConfig&, const FirstStage& x) {
    double cost = 0.0;
    for (int i = 0; i < net.num_generators(); ++i) cost += generation_unit_cost(net, i) * x.p0[i];
    return cost;
}

double first_stage_reserve_cost(const Network& net, const CostConfig& costs, const FirstStage& x) {
    double cost = 0.0;
    for (int i = 0; i < net.num_generators(); ++i)
        cost += reserve_unit_cost(net, costs, i) * (x.r_plus[i] + x.r_minus[i]);
    return cost;
}

double first_stage_cost(const Network& net, const CostConfig& costs, const FirstStage& x) {
    return first_stage_generation_cost(net, costs, x) + first_stage_reserve_cost(net, costs, x);
}

}  // namespace satopf
