#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <vector>

#include "satopf/errors.hpp"

namespace satopf {

enum class GenKind { regular, wind };

struct Bus {
    int id = 0;
    bool is_reference = false;
};

struct Line {
    int from = 0;
    int to = 0;
    double susceptance = 0.0;  // beta_ij, per unit
    double flow_limit = 0.0;   // f^max_ij, per unit
};

struct Generator {
    int bus = 0;
    GenKind kind = GenKind::regular;
    double p_min = 0.0;      // deterministic limit; floor (0) for wind
    double p_max = 0.0;      // deterministic limit for regular; mean capacity for wind
    double p0_lower = 0.0;   // p^{0,L}
    double p0_upper = 0.0;   // p^{0,U}
    double r_plus_max = 0.0;
    double r_minus_max = 0.0;
    double unit_cost = 0.0;  // c_i in $/pu; zero for wind
    bool in_reserve_set = true;
    bool free_spill = false;  // waive the down-exceedance penalty (case-2 wind)
};

struct Load {
    int bus = 0;
    double mean = 0.0;  // d_i, may be negative (netted wind as negative load)
};

struct NetworkData {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<Load> loads;
    double base_mva = 100.0;  // display only; all quantities are per unit
};

/// Check structural invariants: contiguous ids, exactly one reference bus,
/// positive susceptances and limits, connectivity, at most one generator and
/// one load per bus. Throws DisconnectedGraph / DuplicateReference / BadLineData.
void validate_network(const NetworkData& data);

/// Immutable network with a cached Cholesky factorization of the reduced
/// susceptance Laplacian (reference row and column deleted). Shared read-only
/// across concurrent scenario solves.
class Network {
public:
    explicit Network(NetworkData data);

    const NetworkData& data() const { return data_; }
    const std::vector<Bus>& buses() const { return data_.buses; }
    const std::vector<Line>& lines() const { return data_.lines; }
    const std::vector<Generator>& generators() const { return data_.generators; }
    const std::vector<Load>& loads() const { return data_.loads; }

    int num_buses() const { return static_cast<int>(data_.buses.size()); }
    int num_lines() const { return static_cast<int>(data_.lines.size()); }
    int num_generators() const { return static_cast<int>(data_.generators.size()); }
    int num_loads() const { return static_cast<int>(data_.loads.size()); }
    int reference_bus() const { return reference_; }

    /// Indices (into generators()) of the wind units, in declaration order.
    const std::vector<int>& wind_indices() const { return wind_indices_; }
    int num_wind() const { return static_cast<int>(wind_indices_.size()); }

    double total_mean_demand() const { return total_demand_; }
    /// Scale-aware injection balance tolerance: 1e-8 * (sum |d_i| + 1).
    double balance_tolerance() const { return tol_bal_; }
    /// min_{k regular} c_k; 0 when the network has no regular generator.
    double min_regular_cost() const { return min_regular_cost_; }

    /// Solve the DC power flow for a balanced per-bus injection vector.
    /// Returns phase angles with theta[reference] = 0.
    /// Throws UnbalancedInjection when |sum(injection)| > balance_tolerance().
    Eigen::VectorXd solve_dc_flow(const Eigen::VectorXd& injection) const;

    /// Solve the reduced Laplacian system for each column of a per-bus
    /// right-hand side (the reference row is ignored, the reference angle
    /// pinned to zero). Used for flows and for angle sensitivities, which
    /// share the same matrix. No balance check.
    Eigen::MatrixXd solve_angles(const Eigen::MatrixXd& bus_rhs) const;

    /// Per-line flows beta_ij * (theta_i - theta_j).
    Eigen::VectorXd line_flows(const Eigen::VectorXd& theta) const;

    /// Dense copy of the reduced susceptance Laplacian (testing aid).
    const Eigen::MatrixXd& reduced_laplacian() const { return reduced_laplacian_; }
    /// Row of a bus in the reduced system, -1 for the reference bus.
    int reduced_index(int bus) const { return reduced_index_[static_cast<std::size_t>(bus)]; }

private:
    NetworkData data_;
    int reference_ = 0;
    std::vector<int> reduced_index_;
    std::vector<int> wind_indices_;
    double total_demand_ = 0.0;
    double tol_bal_ = 0.0;
    double min_regular_cost_ = 0.0;
    Eigen::MatrixXd reduced_laplacian_;
    Eigen::LLT<Eigen::MatrixXd> laplacian_llt_;
};

}  // namespace satopf
