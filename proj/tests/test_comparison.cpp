#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "satopf/case_io.hpp"
#include "satopf/comparison.hpp"
#include "satopf/evaluation.hpp"
#include "satopf/util.hpp"
#include "test_helpers.hpp"

using namespace satopf;
using namespace satopf::testing;

namespace {

UncertaintyModel zero_variance_of(const UncertaintyModel& m) {
    UncertaintyModel z = m;
    z.load_sigma.setZero();
    z.wind_sigma.setZero();
    return z;
}

double saa_objective(const Network& net, const FirstStage& x,
                     const std::vector<Scenario>& scenarios, const CostConfig& costs,
                     bool with_gen_penalty) {
    std::vector<double> terms(scenarios.size());
    for (std::size_t k = 0; k < scenarios.size(); ++k)
        terms[k] = affine_evaluate(net, x, scenarios[k], costs, with_gen_penalty).cost();
    return first_stage_cost(net, costs, x) + mean_of(terms);
}

}  // namespace

TEST_CASE("CAP reformulation bounds alpha by the z-margin") {
    Generator gen = regular_gen(0, 10.0, 20.0);
    const CapConstraint c = cap_reformulate(gen, 0.01, 10.0, 0.0);
    CHECK(c.z == doctest::Approx(2.3263478740408408).epsilon(1e-10));
    // p^max - p0 = 10 admits alpha up to 10 / (z * 10)
    CHECK(c.alpha_bound(10.0) == doctest::Approx(0.4299).epsilon(1e-3));
    CHECK(c.satisfied(10.0, 0.42));
    CHECK_FALSE(c.satisfied(10.0, 0.44));
}

TEST_CASE("the median quantile collapses CAP to the box constraint") {
    Generator gen = regular_gen(0, 10.0, 5.0);
    const CapConstraint c = cap_reformulate(gen, 0.5, 10.0, 0.0);
    CHECK(c.z == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.upper_margin(0.7) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(c.satisfied(5.0, 0.9));
    CHECK_FALSE(c.satisfied(5.2, 0.0));
}

TEST_CASE("wind margin combines the two variances") {
    Generator gen = wind_gen(0, 5.0, 2.0);
    const CapConstraint c = cap_reformulate(gen, 0.01, 10.0, 2.0);
    CHECK(c.upper_margin(0.3) ==
          doctest::Approx(c.z * std::sqrt(0.09 * 100.0 + 4.0)).epsilon(1e-12));
    CHECK(c.upper_margin(0.3) == doctest::Approx(c.z * 3.605551).epsilon(1e-6));
}

TEST_CASE("affine policy ignores generator limits") {
    const Network net = two_gen_network(8.0, 20.0, 10.0);
    FirstStage x = FirstStage::zeros(2);
    x.p0 << 5.0, 5.0;
    x.alpha << 0.5, 0.5;

    const AffineRecourse at_mean = affine_evaluate(net, x, fluct_scenario(net, 0.0), {});
    CHECK(at_mean.p[0] == doctest::Approx(5.0));
    CHECK(at_mean.p[1] == doctest::Approx(5.0));
    CHECK_FALSE(at_mean.any_gen_violation);

    const AffineRecourse shifted = affine_evaluate(net, x, fluct_scenario(net, 8.0), {});
    CHECK(shifted.p[0] == doctest::Approx(9.0));  // past the 8.0 limit
    CHECK(shifted.p[1] == doctest::Approx(9.0));
    CHECK(shifted.any_gen_violation);
}

TEST_CASE("generator penalty is quadratic in the violation") {
    NetworkData d;
    d.buses = {{0, true}, {1, false}};
    d.lines = {{0, 1, 1.0, 100.0}};
    d.generators = {regular_gen(0, 10.0, 10.0)};
    d.loads = {{1, 8.0}};
    const Network net(std::move(d));
    FirstStage x = FirstStage::zeros(1);
    x.p0 << 8.0;
    x.alpha << 1.0;
    CostConfig costs;
    costs.gamma_gen = 20.0;
    const AffineRecourse rec = affine_evaluate(net, x, fluct_scenario(net, 4.0), costs, true);
    CHECK(rec.p[0] == doctest::Approx(12.0));
    CHECK(rec.gen_penalty == doctest::Approx(20.0 * 4.0));  // 20 * (12-10)^2
}

TEST_CASE("zero-variance GP and CAP match the dispatch oracle") {
    const Network net = two_gen_network(8.0, 20.0, 10.0);
    UncertaintyModel m;
    m.load_sigma = Eigen::VectorXd::Zero(2);
    m.wind_mean.resize(0);
    m.wind_sigma.resize(0);
    const FeasibleSetSpec spec = FeasibleSetSpec::from_network(net);
    const double lp = oracle_dispatch_cost(net, spec);

    SaaConfig cfg;
    cfg.max_iters = 4000;
    cfg.base_step = 2.5;
    const SaaResult gp = solve_gp(net, m, {}, spec, 1, 37.0, 11, cfg);
    CHECK(gp.objective <= lp * 1.01);
    CHECK(gp.objective >= lp * 0.99);
    const SaaResult cap = solve_cap(net, m, {}, spec, 1, 0.5, 11, cfg);
    CHECK(cap.objective <= lp * 1.01);
    CHECK(cap.objective >= lp * 0.99);
    CHECK(std::abs(gp.objective - cap.objective) <= lp * 0.02);
}

TEST_CASE("SAA objectives are midpoint convex along random segments") {
    const CaseBundle bundle = load_case("bundled:case4_wind");
    const FeasibleSetSpec spec = make_feasible_spec(bundle);
    const std::vector<Scenario> scenarios = sample(bundle.model, 21, 60);
    std::mt19937 rng(12);
    for (bool with_gen : {false, true}) {
        for (int trial = 0; trial < 30; ++trial) {
            const FirstStage a = random_feasible(spec, rng);
            const FirstStage b = random_feasible(spec, rng);
            const FirstStage mid = FirstStage::unpack(0.5 * (a.pack() + b.pack()));
            const double fa = saa_objective(bundle.net, a, scenarios, {}, with_gen);
            const double fb = saa_objective(bundle.net, b, scenarios, {}, with_gen);
            const double fm = saa_objective(bundle.net, mid, scenarios, {}, with_gen);
            CHECK(fm <= 0.5 * (fa + fb) + 1e-9 * (1.0 + std::abs(fa) + std::abs(fb)));
        }
    }
}

TEST_CASE("tightening eps_gen never improves the CAP objective") {
    const CaseBundle bundle = load_case("bundled:case4_wind");
    const FeasibleSetSpec spec = make_feasible_spec(bundle);
    SaaConfig cfg;
    cfg.max_iters = 2500;
    const SaaResult loose =
        solve_cap(bundle.net, bundle.model, {}, spec, 150, 1e-2, 5, cfg);
    const SaaResult tight =
        solve_cap(bundle.net, bundle.model, {}, spec, 150, 1e-3, 5, cfg);
    CHECK(tight.objective >= loose.objective - 1e-6 * (1.0 + std::abs(loose.objective)));
}

TEST_CASE("CAP solutions respect the union bound out of sample") {
    const CaseBundle bundle = load_case("bundled:case4_wind");
    const FeasibleSetSpec spec = make_feasible_spec(bundle);
    const double eps = 1e-2;
    SaaConfig cfg;
    cfg.max_iters = 2500;
    const SaaResult res = solve_cap(bundle.net, bundle.model, {}, spec, 150, eps, 5, cfg);

    EvalOptions opts;
    opts.sample_size = 20000;
    opts.seed = 404;
    opts.include_affine_metrics = true;
    const EvaluationReport rep =
        monte_carlo_evaluate(bundle.net, bundle.model, res.x, {}, opts);
    const int g = bundle.net.num_generators();
    const double margin = 3.0 * std::sqrt(eps * g * (1.0 - eps * g) / opts.sample_size);
    CHECK(rep.affine_gen_violation_prob <= eps * g + margin);
}

TEST_CASE("CAP reports an empty feasible set when eps_gen is unattainable") {
    // wind-heavy system: demand cannot be met if wind must stay z-sigma below mean
    NetworkData d;
    d.buses = {{0, true}, {1, false}};
    d.lines = {{0, 1, 1.0, 100.0}};
    d.generators = {regular_gen(0, 10.0, 0.2), wind_gen(1, 2.0, 0.8)};
    d.loads = {{0, 1.0}, {1, 1.0}};
    const Network net(std::move(d));
    UncertaintyModel m = UncertaintyModel::from_network(net, 0.1, 0.4);
    const FeasibleSetSpec spec = FeasibleSetSpec::from_network(net);
    CHECK_THROWS_AS(solve_cap(net, m, {}, spec, 50, 1e-3, 1, SaaConfig{}), EmptyFeasibleSet);
}

TEST_CASE("solving is deterministic given the seed") {
    const CaseBundle bundle = load_case("bundled:case4_wind");
    const FeasibleSetSpec spec = make_feasible_spec(bundle);
    SaaConfig cfg;
    cfg.max_iters = 300;
    const SaaResult a = solve_gp(bundle.net, bundle.model, {}, spec, 100, 20.0, 77, cfg);
    const SaaResult b = solve_gp(bundle.net, bundle.model, {}, spec, 100, 20.0, 77, cfg);
    CHECK(a.objective == b.objective);
    CHECK(distance(a.x, b.x) == 0.0);
}
