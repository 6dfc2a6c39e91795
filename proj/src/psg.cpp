#include "satopf/psg.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "satopf/util.hpp"

namespace satopf {

namespace {
constexpr std::uint64_t kEvalStream = 0x4556414Cull;   // distinct substreams for the
constexpr std::uint64_t kBatchStream = 0x42415443ull;  // evaluation and mini-batch draws
}  // namespace

ObjectiveEstimate estimate_objective(const Network& net, const CostConfig& costs,
                                     const SmoothingParams& smoothing, const FirstStage& x,
                                     const std::vector<Scenario>& sample,
                                     double max_infeasible_fraction) {
    const double fs = first_stage_cost(net, costs, x);
    const std::size_t n = sample.size();
    std::vector<double> cost(n, std::numeric_limits<double>::quiet_NaN());
    parallel_for(n, [&](std::size_t k) {
        try {
            const RecourseSolution sol =
                solve_recourse(net, x, sample[k], RecourseMode::smooth, smoothing, costs);
            cost[k] = fs + recourse_cost(sol);
        } catch (const ScenarioInfeasible&) {
            // excluded below
        }
    });
    std::vector<double> feasible;
    feasible.reserve(n);
    long infeasible = 0;
    for (double c : cost) {
        if (std::isnan(c))
            ++infeasible;
        else
            feasible.push_back(c);
    }
    if (n > 0 && static_cast<double>(infeasible) > max_infeasible_fraction * static_cast<double>(n))
        throw ExcessiveInfeasibility("objective estimate: " + std::to_string(infeasible) + " of " +
                                     std::to_string(n) + " scenarios outside D_F");
    ObjectiveEstimate est;
    est.infeasible = infeasible;
    if (feasible.empty()) {
        est.mean = fs;
        return est;
    }
    est.mean = mean_of(feasible);
    if (feasible.size() > 1) {
        std::vector<double> sq(feasible.size());
        for (std::size_t i = 0; i < feasible.size(); ++i) {
            const double d = feasible[i] - est.mean;
            sq[i] = d * d;
        }
        const double var = pairwise_sum(sq) / static_cast<double>(feasible.size() - 1);
        est.std_error = std::sqrt(var / static_cast<double>(feasible.size()));
    }
    return est;
}

PsgResult solve_smooth(const Network& net, const UncertaintyModel& model, const CostConfig& costs,
                       const FeasibleSetSpec& spec, const FirstStage& x1, const PsgConfig& cfg) {
    try {
        validate(x1, spec);
    } catch (const InfeasibleFirstStage& e) {
        throw InfeasibleStart(std::string("PSG initial point infeasible: ") + e.what());
    }
    const SmoothingParams smoothing = SmoothingParams::from_costs(costs);
    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&t0]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    const std::vector<Scenario> eval_sample =
        sample(model, derive_seed(cfg.seed, kEvalStream), cfg.eval_sample_size);
    const std::uint64_t batch_seed = derive_seed(cfg.seed, kBatchStream);

    PsgResult result;
    result.best = x1;
    {
        const ObjectiveEstimate est =
            estimate_objective(net, costs, smoothing, x1, eval_sample, cfg.max_infeasible_fraction);
        result.best_objective = est.mean;
        result.best_std_error = est.std_error;
        result.trace.push_back({0, x1, est.mean, est.std_error, elapsed()});
    }

    FirstStage x = x1;
    const int g = net.num_generators();
    Eigen::VectorXd adagrad_acc = Eigen::VectorXd::Zero(4 * g);
    int evals_since_improvement = 0;

    const std::vector<BlockProjector> blocks = feasible_set_projectors(spec);

    for (int t = 1; t <= cfg.max_iters; ++t) {
        // Mini-batch stochastic gradient; scenario k of iteration t is stream
        // index (t-1)*K + k, so the draw sequence is schedule-independent.
        const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
        std::vector<Eigen::VectorXd> grads(batch);
        std::vector<char> ok(batch, 0);
        parallel_for(batch, [&](std::size_t k) {
            const std::uint64_t idx =
                static_cast<std::uint64_t>(t - 1) * static_cast<std::uint64_t>(cfg.batch_size) +
                static_cast<std::uint64_t>(k);
            const Scenario omega = sample_one(model, batch_seed, idx);
            try {
                grads[k] = stochastic_gradient(net, x, omega, costs, smoothing).pack();
                ok[k] = 1;
            } catch (const ScenarioInfeasible&) {
            } catch (const DegenerateSensitivity&) {
            }
        });
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(4 * g);
        int used = 0;
        for (std::size_t k = 0; k < batch; ++k) {
            if (ok[k]) {
                grad += grads[k];
                ++used;
            } else {
                ++result.skipped_samples;
            }
        }
        if (used > 0) grad /= static_cast<double>(used);

        Eigen::VectorXd step(4 * g);
        switch (cfg.step_rule) {
            case StepRule::adagrad_coordinate:
                adagrad_acc.array() += grad.array().square();
                step =
                    (cfg.base_step / (cfg.adagrad_epsilon + adagrad_acc.array()).sqrt()).matrix();
                break;
            case StepRule::adagrad_norm:
                adagrad_acc[0] += grad.squaredNorm();
                step.setConstant(cfg.base_step / std::sqrt(cfg.adagrad_epsilon + adagrad_acc[0]));
                break;
            case StepRule::fixed:
                step.setConstant(cfg.base_step);
                break;
        }
        const Eigen::VectorXd moved = x.pack() - (step.array() * grad.array()).matrix();
        x = dykstra_project(FirstStage::unpack(moved), blocks);
        result.iterations_run = t;

        if (t % cfg.eval_every == 0 || t == cfg.max_iters) {
            const ObjectiveEstimate est = estimate_objective(net, costs, smoothing, x, eval_sample,
                                                             cfg.max_infeasible_fraction);
            result.trace.push_back({t, x, est.mean, est.std_error, elapsed()});
            if (est.mean < result.best_objective) {
                result.best = x;
                result.best_objective = est.mean;
                result.best_std_error = est.std_error;
                evals_since_improvement = 0;
            } else {
                ++evals_since_improvement;
            }
            if (cfg.patience > 0 && evals_since_improvement >= cfg.patience) break;
        }
    }
    return result;
}

}  // namespace satopf
