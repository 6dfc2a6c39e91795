#include <doctest.h>

#include <cmath>
#include <vector>

#include "satopf/uncertainty.hpp"
#include "satopf/util.hpp"

using namespace satopf;

namespace {
UncertaintyModel two_load_model(double s1, double s2) {
    UncertaintyModel m;
    m.load_sigma.resize(2);
    m.load_sigma << s1, s2;
    m.wind_mean.resize(0);
    m.wind_sigma.resize(0);
    return m;
}
}  // namespace

TEST_CASE("degenerate distributions reproduce the means") {
    UncertaintyModel m = two_load_model(0.0, 0.0);
    m.wind_mean.resize(1);
    m.wind_mean << 1.3;
    m.wind_sigma = Eigen::VectorXd::Zero(1);
    const std::vector<Scenario> s = sample(m, 5, 100);
    for (const Scenario& sc : s) {
        CHECK(sc.load_fluct.cwiseAbs().maxCoeff() == 0.0);
        CHECK(sc.sigma_d == 0.0);
        CHECK(sc.wind_cap[0] == 1.3);
    }
}

TEST_CASE("sampling is a deterministic function of the seed") {
    UncertaintyModel m = two_load_model(0.5, 0.25);
    m.wind_mean.resize(1);
    m.wind_mean << 2.0;
    m.wind_sigma.resize(1);
    m.wind_sigma << 0.4;
    const auto a = sample(m, 123, 50);
    const auto b = sample(m, 123, 50);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].sigma_d == b[k].sigma_d);
        CHECK((a[k].load_fluct - b[k].load_fluct).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a[k].wind_cap - b[k].wind_cap).cwiseAbs().maxCoeff() == 0.0);
    }
    const auto c = sample(m, 124, 50);
    CHECK(a[0].sigma_d != c[0].sigma_d);
}

TEST_CASE("sampling is identical across thread counts") {
    UncertaintyModel m = two_load_model(1.0, 2.0);
    const int saved = default_threads();
    set_default_threads(1);
    const auto serial = sample(m, 77, 503);
    set_default_threads(4);
    const auto parallel = sample(m, 77, 503);
    set_default_threads(saved);
    for (std::size_t k = 0; k < serial.size(); ++k)
        CHECK(serial[k].sigma_d == parallel[k].sigma_d);
}

TEST_CASE("scenario sigma_d is the sum of its fluctuations") {
    UncertaintyModel m = two_load_model(0.7, 1.4);
    for (const Scenario& sc : sample(m, 3, 200))
        CHECK(sc.sigma_d == doctest::Approx(sc.load_fluct.sum()).epsilon(1e-14));
}

TEST_CASE("sigma_d_stats is the Pythagorean sum") {
    CHECK(sigma_d_stats(two_load_model(3.0, 4.0)).second == doctest::Approx(5.0));
    CHECK(sigma_d_stats(two_load_model(0.0, 0.0)).second == 0.0);
    UncertaintyModel single;
    single.load_sigma.resize(1);
    single.load_sigma << 10.0;
    CHECK(sigma_d_stats(single).second == doctest::Approx(10.0));
    CHECK(sigma_d_stats(single).first == 0.0);
}

TEST_CASE("empirical mean of sigma_d over 1e6 draws is zero within the CLT bound") {
    UncertaintyModel m = two_load_model(1.0, 1.0);
    const int n = 1000000;
    std::vector<double> sums(static_cast<std::size_t>(n));
    const auto scenarios = sample(m, 2024, n);
    for (int k = 0; k < n; ++k) sums[static_cast<std::size_t>(k)] = scenarios[static_cast<std::size_t>(k)].sigma_d;
    CHECK(std::abs(mean_of(sums)) <= 0.005);  // 3 * sqrt(2) / 1000 = 0.0042
}

TEST_CASE("empirical variance of sigma_d passes a chi-square band at 1e5") {
    UncertaintyModel m = two_load_model(0.6, 0.8);
    const auto [mu, sd] = sigma_d_stats(m);
    CHECK(mu == 0.0);
    const int n = 100000;
    const auto scenarios = sample(m, 31, n);
    std::vector<double> vals(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) vals[static_cast<std::size_t>(k)] = scenarios[static_cast<std::size_t>(k)].sigma_d;
    const double mean = mean_of(vals);
    std::vector<double> sq(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) sq[i] = (vals[i] - mean) * (vals[i] - mean);
    const double s2 = pairwise_sum(sq) / (n - 1);
    // chi-square band via the normal approximation, +-3.3 sigma
    const double half_width = 3.3 * std::sqrt(2.0 / (n - 1));
    CHECK(s2 / (sd * sd) > 1.0 - half_width);
    CHECK(s2 / (sd * sd) < 1.0 + half_width);
}

TEST_CASE("wind draws are clamped at the zero floor and counted") {
    UncertaintyModel m;
    m.load_sigma.resize(0);
    m.wind_mean.resize(1);
    m.wind_mean << 0.1;
    m.wind_sigma.resize(1);
    m.wind_sigma << 1.0;  // mean well inside the negative tail
    SampleStats stats;
    const auto scenarios = sample(m, 9, 2000, &stats);
    long negatives = 0;
    for (const Scenario& sc : scenarios) {
        CHECK(sc.wind_cap[0] >= 0.0);
        if (sc.wind_cap[0] == 0.0) ++negatives;
    }
    CHECK(stats.clamped_wind_draws == negatives);
    CHECK(stats.clamped_wind_draws > 0);
}

TEST_CASE("truncated-normal wind never clamps") {
    UncertaintyModel m;
    m.distribution = FluctDistribution::truncated_normal;
    m.load_sigma.resize(0);
    m.wind_mean.resize(1);
    m.wind_mean << 0.1;
    m.wind_sigma.resize(1);
    m.wind_sigma << 1.0;
    SampleStats stats;
    const auto scenarios = sample(m, 9, 2000, &stats);
    for (const Scenario& sc : scenarios) CHECK(sc.wind_cap[0] >= 0.0);
    CHECK(stats.clamped_wind_draws == 0);
}
