#include "satopf/network.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace satopf {

void validate_network(const NetworkData& data) {
    const int n = static_cast<int>(data.buses.size());
    if (n == 0) throw BadLineData("network has no buses");
    int ref_count = 0;
    for (int i = 0; i < n; ++i) {
        const Bus& b = data.buses[static_cast<std::size_t>(i)];
        if (b.id != i)
            throw BadLineData("bus ids must be contiguous 0..n-1, found id " +
                              std::to_string(b.id) + " at position " + std::to_string(i));
        if (b.is_reference) ++ref_count;
    }
    if (ref_count != 1)
        throw DuplicateReference("expected exactly one reference bus, found " +
                                 std::to_string(ref_count));
    if (!data.buses.front().is_reference)
        throw DuplicateReference("the first bus must be the reference bus");

    for (const Line& l : data.lines) {
        if (l.from < 0 || l.from >= n || l.to < 0 || l.to >= n)
            throw BadLineData("line endpoint out of range");
        if (l.from == l.to) throw BadLineData("line endpoints must differ");
        if (!(l.susceptance > 0.0)) throw BadLineData("line susceptance must be positive");
        if (!(l.flow_limit > 0.0)) throw BadLineData("line flow limit must be positive");
    }

    std::vector<char> gen_at(static_cast<std::size_t>(n), 0);
    for (const Generator& g : data.generators) {
        if (g.bus < 0 || g.bus >= n) throw BadLineData("generator bus out of range");
        if (gen_at[static_cast<std::size_t>(g.bus)]++)
            throw BadLineData("more than one generator at bus " + std::to_string(g.bus) +
                              "; aggregate at ingestion");
        if (g.p_min > g.p_max) throw BadLineData("generator p_min > p_max");
        if (g.p0_lower > g.p0_upper) throw BadLineData("generator p0_lower > p0_upper");
        if (g.r_plus_max < 0.0 || g.r_minus_max < 0.0)
            throw BadLineData("negative reserve bound");
    }
    std::vector<char> load_at(static_cast<std::size_t>(n), 0);
    for (const Load& l : data.loads) {
        if (l.bus < 0 || l.bus >= n) throw BadLineData("load bus out of range");
        if (load_at[static_cast<std::size_t>(l.bus)]++)
            throw BadLineData("more than one load at bus " + std::to_string(l.bus) +
                              "; aggregate at ingestion");
        if (!std::isfinite(l.mean)) throw BadLineData("load mean must be finite");
    }

    // Connectivity by BFS over the line set.
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const Line& l : data.lines) {
        adj[static_cast<std::size_t>(l.from)].push_back(l.to);
        adj[static_cast<std::size_t>(l.to)].push_back(l.from);
    }
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : adj[static_cast<std::size_t>(u)]) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++reached;
                stack.push_back(v);
            }
        }
    }
    if (reached != n)
        throw DisconnectedGraph("network graph is disconnected (" + std::to_string(reached) +
                                " of " + std::to_string(n) + " buses reachable)");
}

Network::Network(NetworkData data) : data_(std::move(data)) {
    validate_network(data_);
    const int n = num_buses();
    reference_ = 0;  // validated: first bus is the reference

    reduced_index_.assign(static_cast<std::size_t>(n), -1);
    int row = 0;
    for (int i = 0; i < n; ++i) {
        if (i != reference_) reduced_index_[static_cast<std::size_t>(i)] = row++;
    }

    for (int i = 0; i < num_generators(); ++i) {
        if (data_.generators[static_cast<std::size_t>(i)].kind == GenKind::wind)
            wind_indices_.push_back(i);
    }

    total_demand_ = 0.0;
    double abs_demand = 0.0;
    for (const Load& l : data_.loads) {
        total_demand_ += l.mean;
        abs_demand += std::abs(l.mean);
    }
    tol_bal_ = 1e-8 * (abs_demand + 1.0);

    min_regular_cost_ = std::numeric_limits<double>::infinity();
    for (const Generator& g : data_.generators) {
        if (g.kind == GenKind::regular) min_regular_cost_ = std::min(min_regular_cost_, g.unit_cost);
    }
    if (!std::isfinite(min_regular_cost_)) min_regular_cost_ = 0.0;

    // Reduced susceptance Laplacian: delete the reference row and column,
    // factor once, reuse for every scenario and sensitivity solve.
    const int m = n - 1;
    reduced_laplacian_ = Eigen::MatrixXd::Zero(m, m);
    for (const Line& l : data_.lines) {
        const int a = reduced_index_[static_cast<std::size_t>(l.from)];
        const int b = reduced_index_[static_cast<std::size_t>(l.to)];
        if (a >= 0) reduced_laplacian_(a, a) += l.susceptance;
        if (b >= 0) reduced_laplacian_(b, b) += l.susceptance;
        if (a >= 0 && b >= 0) {
            reduced_laplacian_(a, b) -= l.susceptance;
            reduced_laplacian_(b, a) -= l.susceptance;
        }
    }
    if (m > 0) {
        laplacian_llt_.compute(reduced_laplacian_);
        if (laplacian_llt_.info() != Eigen::Success)
            throw SingularSystem("reduced susceptance Laplacian is not positive definite");
    }
}

Eigen::MatrixXd Network::solve_angles(const Eigen::MatrixXd& bus_rhs) const {
    const int n = num_buses();
    if (bus_rhs.rows() != n)
        throw SingularSystem("solve_angles: right-hand side has wrong bus dimension");
    const int m = n - 1;
    Eigen::MatrixXd reduced(m, bus_rhs.cols());
    for (int i = 0; i < n; ++i) {
        const int r = reduced_index_[static_cast<std::size_t>(i)];
        if (r >= 0) reduced.row(r) = bus_rhs.row(i);
    }
    Eigen::MatrixXd sol = m > 0 ? laplacian_llt_.solve(reduced) : Eigen::MatrixXd(0, bus_rhs.cols());
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, bus_rhs.cols());
    for (int i = 0; i < n; ++i) {
        const int r = reduced_index_[static_cast<std::size_t>(i)];
        if (r >= 0) theta.row(i) = sol.row(r);
    }
    return theta;
}

Eigen::VectorXd Network::solve_dc_flow(const Eigen::VectorXd& injection) const {
    if (injection.size() != num_buses())
        throw UnbalancedInjection("injection vector has wrong dimension");
    const double imbalance = injection.sum();
    if (std::abs(imbalance) > tol_bal_)
        throw UnbalancedInjection("injections sum to " + std::to_string(imbalance) +
                                  ", exceeding tolerance " + std::to_string(tol_bal_));
    return solve_angles(injection);
}

Eigen::VectorXd Network::line_flows(const Eigen::VectorXd& theta) const {
    if (theta.size() != num_buses())
        throw BadLineData("line_flows: angle vector has wrong dimension");
    Eigen::VectorXd flows(num_lines());
    for (int e = 0; e < num_lines(); ++e) {
        const Line& l = data_.lines[static_cast<std::size_t>(e)];
        flows[e] = l.susceptance * (theta[l.from] - theta[l.to]);
    }
    return flows;
}

}  // namespace satopf
