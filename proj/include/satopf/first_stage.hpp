#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "satopf/network.hpp"

namespace satopf {

/// First-stage decision vector: nominal generation, scheduled reserves, and
/// participation factors, one entry per generator.
struct FirstStage {
    Eigen::VectorXd p0;
    Eigen::VectorXd r_plus;
    Eigen::VectorXd r_minus;
    Eigen::VectorXd alpha;

    int size() const { return static_cast<int>(p0.size()); }

    static FirstStage zeros(int g) {
        FirstStage x;
        x.p0 = Eigen::VectorXd::Zero(g);
        x.r_plus = Eigen::VectorXd::Zero(g);
        x.r_minus = Eigen::VectorXd::Zero(g);
        x.alpha = Eigen::VectorXd::Zero(g);
        return x;
    }

    /// Stacked (p0, r+, r-, alpha), for step arithmetic and distances.
    Eigen::VectorXd pack() const;
    static FirstStage unpack(const Eigen::VectorXd& v);
};

double distance(const FirstStage& a, const FirstStage& b);

/// The feasible set X: balance, bounds, regular-generator coupling and the
/// participation simplex with lower bounds; optionally with pinned
/// participation factors (case-2 wind).
struct FeasibleSetSpec {
    Eigen::VectorXd p0_lower, p0_upper;
    Eigen::VectorXd r_plus_max, r_minus_max;
    Eigen::VectorXd p_min, p_max;       // generation limits (coupling, regular only)
    std::vector<char> regular;          // kind flags
    std::vector<char> in_reserve_set;   // alpha_i >= epsilon
    Eigen::VectorXd alpha_fixed;        // NaN = free
    double epsilon = 0.0;
    double demand = 0.0;                // sum of mean loads

    int size() const { return static_cast<int>(p0_lower.size()); }

    /// epsilon < 0 selects the default rule min{0.001, 0.01/|G|}.
    static FeasibleSetSpec from_network(const Network& net, double epsilon = -1.0);
};

/// Throws InfeasibleFirstStage naming the violated constraint.
void validate(const FirstStage& x, const FeasibleSetSpec& spec, double tol = 1e-7);

bool is_feasible(const FirstStage& x, const FeasibleSetSpec& spec, double tol = 1e-7);

/// Euclidean projection of v onto {x : x >= lb, sum x = target}.
/// Throws EmptyFeasibleSet when sum(lb) > target.
Eigen::VectorXd project_simplex_lb(const Eigen::VectorXd& v, const Eigen::VectorXd& lb,
                                   double target = 1.0);

/// Euclidean projection of v onto {x : lb <= x <= ub, sum x = target} by
/// bisection on the scalar dual multiplier.
Eigen::VectorXd project_hyperplane_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lb,
                                       const Eigen::VectorXd& ub, double target);

/// A block projector mutates the iterate in place, projecting onto one convex set.
using BlockProjector = std::function<void(FirstStage&)>;

/// The three blocks whose intersection is X: balance-with-box on p0,
/// per-generator reserve cells, and the participation simplex.
std::vector<BlockProjector> feasible_set_projectors(const FeasibleSetSpec& spec);

/// Dykstra's alternating projections over arbitrary convex blocks; converges
/// to the exact Euclidean projection onto their intersection.
FirstStage dykstra_project(const FirstStage& raw, const std::vector<BlockProjector>& blocks,
                           double tol = 1e-10, int max_sweeps = 10000);

/// Euclidean projection onto X.
FirstStage project(const FirstStage& raw, const FeasibleSetSpec& spec, double tol = 1e-10);

}  // namespace satopf
