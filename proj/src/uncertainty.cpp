#include "satopf/uncertainty.hpp"

#include <cmath>

#include "satopf/util.hpp"

namespace satopf {

UncertaintyModel UncertaintyModel::from_network(const Network& net, double load_sigma_frac,
                                                double wind_sigma_frac) {
    UncertaintyModel m;
    m.load_sigma.resize(net.num_loads());
    for (int i = 0; i < net.num_loads(); ++i)
        m.load_sigma[i] = load_sigma_frac * std::abs(net.loads()[static_cast<std::size_t>(i)].mean);
    const int w = net.num_wind();
    m.wind_mean.resize(w);
    m.wind_sigma.resize(w);
    for (int j = 0; j < w; ++j) {
        const Generator& g = net.generators()[static_cast<std::size_t>(net.wind_indices()[j])];
        m.wind_mean[j] = g.p_max;
        m.wind_sigma[j] = wind_sigma_frac * g.p_max;
    }
    return m;
}

Scenario sample_one(const UncertaintyModel& model, std::uint64_t seed, std::uint64_t index,
                    SampleStats* stats) {
    const auto n_load = model.load_sigma.size();
    const auto n_wind = model.wind_mean.size();
    Scenario s;
    s.load_fluct.resize(n_load);
    for (Eigen::Index i = 0; i < n_load; ++i) {
        const double sigma = model.load_sigma[i];
        s.load_fluct[i] =
            sigma == 0.0 ? 0.0
                         : sigma * counter_normal(seed, index, static_cast<std::uint64_t>(i));
    }
    s.sigma_d = n_load > 0
                    ? pairwise_sum({s.load_fluct.data(), static_cast<std::size_t>(n_load)})
                    : 0.0;
    s.wind_cap.resize(n_wind);
    for (Eigen::Index j = 0; j < n_wind; ++j) {
        const std::uint64_t comp = static_cast<std::uint64_t>(n_load + j);
        const double mu = model.wind_mean[j];
        const double sigma = model.wind_sigma[j];
        double cap;
        if (sigma == 0.0) {
            cap = mu;
        } else if (model.distribution == FluctDistribution::truncated_normal) {
            // Inverse-CDF draw from Normal(mu, sigma) conditioned on cap >= 0.
            const double u0 = normal_cdf(-mu / sigma);
            const double u = u0 + (1.0 - u0) * counter_uniform(seed, index, comp);
            cap = mu + sigma * inv_normal_cdf(u);
        } else {
            cap = mu + sigma * counter_normal(seed, index, comp);
        }
        if (cap < 0.0) {
            cap = 0.0;
            if (stats) ++stats->clamped_wind_draws;
        }
        s.wind_cap[j] = cap;
    }
    return s;
}

std::vector<Scenario> sample(const UncertaintyModel& model, std::uint64_t seed, int count,
                             SampleStats* stats) {
    std::vector<Scenario> out(static_cast<std::size_t>(std::max(0, count)));
    std::vector<long> clamps(out.size(), 0);
    parallel_for(out.size(), [&](std::size_t k) {
        SampleStats local;
        out[k] = sample_one(model, seed, static_cast<std::uint64_t>(k), &local);
        clamps[k] = local.clamped_wind_draws;
    });
    if (stats) {
        for (long c : clamps) stats->clamped_wind_draws += c;
    }
    return out;
}

std::pair<double, double> sigma_d_stats(const UncertaintyModel& model) {
    double var = 0.0;
    for (Eigen::Index i = 0; i < model.load_sigma.size(); ++i)
        var += model.load_sigma[i] * model.load_sigma[i];
    return {0.0, std::sqrt(var)};
}

Scenario mean_scenario(const UncertaintyModel& model) {
    Scenario s;
    s.load_fluct = Eigen::VectorXd::Zero(model.load_sigma.size());
    s.wind_cap = model.wind_mean;
    s.sigma_d = 0.0;
    // Negative wind means (not produced by the samplers) still respect the floor.
    for (Eigen::Index j = 0; j < s.wind_cap.size(); ++j)
        s.wind_cap[j] = std::max(0.0, s.wind_cap[j]);
    return s;
}

}  // namespace satopf
