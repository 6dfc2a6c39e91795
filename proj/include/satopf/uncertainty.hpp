#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "satopf/network.hpp"

namespace satopf {

enum class FluctDistribution { normal, truncated_normal };

/// Independent Normal fluctuations for every load and Normal capacity draws
/// for every wind generator. Vectors follow network declaration order (loads
/// in loads() order, wind capacities in wind_indices() order).
struct UncertaintyModel {
    FluctDistribution distribution = FluctDistribution::normal;
    Eigen::VectorXd load_sigma;  // sigma_{d,i} >= 0
    Eigen::VectorXd wind_mean;   // mu_{w,i}
    Eigen::VectorXd wind_sigma;  // sigma_{w,i} >= 0

    static UncertaintyModel from_network(const Network& net, double load_sigma_frac,
                                         double wind_sigma_frac);
};

struct Scenario {
    Eigen::VectorXd load_fluct;  // d~_i(omega), per load
    Eigen::VectorXd wind_cap;    // p^max_i(omega), per wind generator, >= 0
    double sigma_d = 0.0;        // sum of load_fluct
};

struct SampleStats {
    long clamped_wind_draws = 0;  // Normal draws pushed up to the zero floor
};

/// Deterministic function of (model, seed, count). Scenario k is generated
/// from counter-based substreams keyed by (seed, k, component), so the result
/// is identical whether scenarios are drawn serially or in parallel.
std::vector<Scenario> sample(const UncertaintyModel& model, std::uint64_t seed, int count,
                             SampleStats* stats = nullptr);

/// Single scenario k of the stream (seed, k); equals sample(...)[k].
Scenario sample_one(const UncertaintyModel& model, std::uint64_t seed, std::uint64_t index,
                    SampleStats* stats = nullptr);

/// Mean and standard deviation of Sigma_d = sum of load fluctuations:
/// (0, sqrt(sum sigma_{d,i}^2)) under independence.
std::pair<double, double> sigma_d_stats(const UncertaintyModel& model);

/// The all-means scenario (zero fluctuations, wind at mean capacity).
Scenario mean_scenario(const UncertaintyModel& model);

}  // namespace satopf
