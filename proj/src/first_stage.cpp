#include "satopf/first_stage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace satopf {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_pinned(double v) { return !std::isnan(v); }
}  // namespace

Eigen::VectorXd FirstStage::pack() const {
    const int g = size();
    Eigen::VectorXd v(4 * g);
    v.segment(0, g) = p0;
    v.segment(g, g) = r_plus;
    v.segment(2 * g, g) = r_minus;
    v.segment(3 * g, g) = alpha;
    return v;
}

FirstStage FirstStage::unpack(const Eigen::VectorXd& v) {
    const int g = static_cast<int>(v.size()) / 4;
    FirstStage x;
    x.p0 = v.segment(0, g);
    x.r_plus = v.segment(g, g);
    x.r_minus = v.segment(2 * g, g);
    x.alpha = v.segment(3 * g, g);
    return x;
}

double distance(const FirstStage& a, const FirstStage& b) {
    return std::sqrt((a.p0 - b.p0).squaredNorm() + (a.r_plus - b.r_plus).squaredNorm() +
                     (a.r_minus - b.r_minus).squaredNorm() + (a.alpha - b.alpha).squaredNorm());
}

FeasibleSetSpec FeasibleSetSpec::from_network(const Network& net, double epsilon) {
    const int g = net.num_generators();
    FeasibleSetSpec spec;
    spec.p0_lower.resize(g);
    spec.p0_upper.resize(g);
    spec.r_plus_max.resize(g);
    spec.r_minus_max.resize(g);
    spec.p_min.resize(g);
    spec.p_max.resize(g);
    spec.regular.resize(static_cast<std::size_t>(g));
    spec.in_reserve_set.resize(static_cast<std::size_t>(g));
    spec.alpha_fixed = Eigen::VectorXd::Constant(g, kNaN);
    for (int i = 0; i < g; ++i) {
        const Generator& gen = net.generators()[static_cast<std::size_t>(i)];
        spec.p0_lower[i] = gen.p0_lower;
        spec.p0_upper[i] = gen.p0_upper;
        spec.r_plus_max[i] = gen.r_plus_max;
        spec.r_minus_max[i] = gen.r_minus_max;
        spec.p_min[i] = gen.p_min;
        spec.p_max[i] = gen.p_max;
        spec.regular[static_cast<std::size_t>(i)] = gen.kind == GenKind::regular;
        spec.in_reserve_set[static_cast<std::size_t>(i)] = gen.in_reserve_set;
    }
    spec.epsilon = epsilon >= 0.0 ? epsilon : std::min(0.001, 0.01 / std::max(1, g));
    spec.demand = net.total_mean_demand();
    return spec;
}

void validate(const FirstStage& x, const FeasibleSetSpec& spec, double tol) {
    const int g = spec.size();
    if (x.size() != g || x.r_plus.size() != g || x.r_minus.size() != g || x.alpha.size() != g)
        throw InfeasibleFirstStage("dimension", "first-stage vector does not match the network");

    const double bal = x.p0.sum() - spec.demand;
    if (std::abs(bal) > tol * (1.0 + std::abs(spec.demand)))
        throw InfeasibleFirstStage("balance",
                                   "sum p0 - demand = " + std::to_string(bal));
    for (int i = 0; i < g; ++i) {
        if (x.p0[i] < spec.p0_lower[i] - tol || x.p0[i] > spec.p0_upper[i] + tol)
            throw InfeasibleFirstStage("p0_bounds", "generator " + std::to_string(i));
        if (x.r_plus[i] < -tol || x.r_plus[i] > spec.r_plus_max[i] + tol)
            throw InfeasibleFirstStage("r_plus_bounds", "generator " + std::to_string(i));
        if (x.r_minus[i] < -tol || x.r_minus[i] > spec.r_minus_max[i] + tol)
            throw InfeasibleFirstStage("r_minus_bounds", "generator " + std::to_string(i));
        if (spec.regular[static_cast<std::size_t>(i)]) {
            if (x.p0[i] + x.r_plus[i] > spec.p_max[i] + tol)
                throw InfeasibleFirstStage("capacity_upper", "generator " + std::to_string(i));
            if (x.p0[i] - x.r_minus[i] < spec.p_min[i] - tol)
                throw InfeasibleFirstStage("capacity_lower", "generator " + std::to_string(i));
        }
        if (x.alpha[i] < -tol)
            throw InfeasibleFirstStage("alpha_nonneg", "generator " + std::to_string(i));
        if (spec.in_reserve_set[static_cast<std::size_t>(i)] && x.alpha[i] < spec.epsilon - tol)
            throw InfeasibleFirstStage("participation", "generator " + std::to_string(i) +
                                                            " below epsilon");
        if (is_pinned(spec.alpha_fixed[i]) &&
            std::abs(x.alpha[i] - spec.alpha_fixed[i]) > tol)
            throw InfeasibleFirstStage("alpha_fixed", "generator " + std::to_string(i));
    }
    if (std::abs(x.alpha.sum() - 1.0) > tol)
        throw InfeasibleFirstStage("alpha_sum", "sum alpha = " + std::to_string(x.alpha.sum()));
}

bool is_feasible(const FirstStage& x, const FeasibleSetSpec& spec, double tol) {
    try {
        validate(x, spec, tol);
        return true;
    } catch (const InfeasibleFirstStage&) {
        return false;
    }
}

Eigen::VectorXd project_simplex_lb(const Eigen::VectorXd& v, const Eigen::VectorXd& lb,
                                   double target) {
    const auto n = v.size();
    if (n == 0) {
        if (std::abs(target) > 1e-12) throw EmptyFeasibleSet("empty simplex with nonzero target");
        return v;
    }
    const double budget = target - lb.sum();
    if (budget < -1e-12 * (1.0 + std::abs(target)))
        throw EmptyFeasibleSet("simplex lower bounds exceed the target sum");
    if (budget <= 0.0) return lb;
    {
        bool inside = std::abs(v.sum() - target) <= 1e-14 * (1.0 + std::abs(target));
        for (Eigen::Index i = 0; inside && i < n; ++i) inside = v[i] >= lb[i];
        if (inside) return v;
    }

    // Project w = v - lb onto the scaled simplex {w >= 0, sum w = budget}
    // by the sort-and-shift rule.
    Eigen::VectorXd w = v - lb;
    std::vector<double> sorted(w.data(), w.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cumsum = 0.0;
    double theta = 0.0;
    int rho = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cumsum += sorted[static_cast<std::size_t>(j)];
        const double cand = (cumsum - budget) / static_cast<double>(j + 1);
        if (sorted[static_cast<std::size_t>(j)] - cand > 0.0) {
            theta = cand;
            rho = static_cast<int>(j + 1);
        }
    }
    (void)rho;
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = std::max(w[i] - theta, 0.0) + lb[i];
    return out;
}

Eigen::VectorXd project_hyperplane_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lb,
                                       const Eigen::VectorXd& ub, double target) {
    const auto n = v.size();
    const double lo_sum = lb.sum();
    const double hi_sum = ub.sum();
    const double slack = 1e-12 * (1.0 + std::abs(target));
    if (target < lo_sum - slack || target > hi_sum + slack)
        throw EmptyFeasibleSet("hyperplane-box projection: target sum " + std::to_string(target) +
                               " outside [" + std::to_string(lo_sum) + ", " +
                               std::to_string(hi_sum) + "]");

    // Fast path: already on the hyperplane and inside the box (the common case
    // inside Dykstra sweeps once the iterate has settled).
    {
        bool inside = std::abs(v.sum() - target) <= 1e-14 * (1.0 + std::abs(target));
        for (Eigen::Index i = 0; inside && i < n; ++i)
            inside = v[i] >= lb[i] && v[i] <= ub[i];
        if (inside) return v;
    }

    const auto sum_at = [&](double lambda) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            s += std::clamp(v[i] + lambda, lb[i], ub[i]);
        return s;
    };
    double lam_lo = (lb - v).minCoeff() - 1.0;
    double lam_hi = (ub - v).maxCoeff() + 1.0;
    for (int it = 0; it < 200 && lam_hi - lam_lo > 1e-16 * (1.0 + std::abs(lam_lo)); ++it) {
        const double mid = 0.5 * (lam_lo + lam_hi);
        (sum_at(mid) < target ? lam_lo : lam_hi) = mid;
    }
    double lambda = 0.5 * (lam_lo + lam_hi);

    // Polish: resolve lambda exactly on the free set identified by the bisection.
    double fixed_sum = 0.0, free_v = 0.0;
    int free_count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double y = v[i] + lambda;
        if (y <= lb[i])
            fixed_sum += lb[i];
        else if (y >= ub[i])
            fixed_sum += ub[i];
        else {
            free_v += v[i];
            ++free_count;
        }
    }
    if (free_count > 0) lambda = (target - fixed_sum - free_v) / free_count;

    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = std::clamp(v[i] + lambda, lb[i], ub[i]);
    return out;
}

namespace {

/// Projection of (a, b, c) onto the per-generator reserve cell
///   { (p, u, v) : 0 <= u <= u_max, 0 <= v <= v_max, p + u <= pmax, p - v >= pmin }
/// for regular units. The optimal (u, v) given p are clamps, leaving a
/// one-dimensional convex problem in p solved by bisection on the
/// (nondecreasing) derivative.
void project_regular_cell(double a, double b, double c, double u_max, double v_max, double pmin,
                          double pmax, double& p_out, double& u_out, double& v_out) {
    if (a >= pmin && a <= pmax && b >= 0.0 && b <= std::min(u_max, pmax - a) && c >= 0.0 &&
        c <= std::min(v_max, a - pmin)) {
        p_out = a;
        u_out = b;
        v_out = c;
        return;
    }
    const auto dphi = [&](double p) {
        double d = p - a;
        if (b > 0.0 && pmax - p <= std::min(u_max, b)) d += p - pmax + b;
        if (c > 0.0 && p - pmin <= std::min(v_max, c)) d += p - pmin - c;
        return d;
    };
    double lo = pmin, hi = pmax;
    if (dphi(lo) >= 0.0) {
        // derivative nonnegative on the whole domain
        hi = lo;
    } else if (dphi(hi) <= 0.0) {
        lo = hi;
    } else {
        for (int it = 0; it < 120 && hi - lo > 0.0; ++it) {
            const double mid = 0.5 * (lo + hi);
            (dphi(mid) < 0.0 ? lo : hi) = mid;
        }
    }
    const double p = 0.5 * (lo + hi);
    p_out = p;
    u_out = std::clamp(b, 0.0, std::min(u_max, pmax - p));
    v_out = std::clamp(c, 0.0, std::min(v_max, p - pmin));
}

FirstStage add(const FirstStage& x, const FirstStage& e) {
    FirstStage y;
    y.p0 = x.p0 + e.p0;
    y.r_plus = x.r_plus + e.r_plus;
    y.r_minus = x.r_minus + e.r_minus;
    y.alpha = x.alpha + e.alpha;
    return y;
}

FirstStage sub(const FirstStage& x, const FirstStage& y) {
    FirstStage d;
    d.p0 = x.p0 - y.p0;
    d.r_plus = x.r_plus - y.r_plus;
    d.r_minus = x.r_minus - y.r_minus;
    d.alpha = x.alpha - y.alpha;
    return d;
}

}  // namespace

std::vector<BlockProjector> feasible_set_projectors(const FeasibleSetSpec& spec) {
    std::vector<BlockProjector> blocks;

    // B1: nominal balance hyperplane intersected with the p0 box.
    blocks.push_back([spec](FirstStage& x) {
        x.p0 = project_hyperplane_box(x.p0, spec.p0_lower, spec.p0_upper, spec.demand);
    });

    // B2: per-generator reserve cells (capacity coupling for regular units).
    blocks.push_back([spec](FirstStage& x) {
        const int g = spec.size();
        for (int i = 0; i < g; ++i) {
            if (spec.regular[static_cast<std::size_t>(i)]) {
                project_regular_cell(x.p0[i], x.r_plus[i], x.r_minus[i], spec.r_plus_max[i],
                                     spec.r_minus_max[i], spec.p_min[i], spec.p_max[i], x.p0[i],
                                     x.r_plus[i], x.r_minus[i]);
            } else {
                x.r_plus[i] = std::clamp(x.r_plus[i], 0.0, spec.r_plus_max[i]);
                x.r_minus[i] = std::clamp(x.r_minus[i], 0.0, spec.r_minus_max[i]);
            }
        }
    });

    // B3: participation simplex with lower bounds and optional pins.
    blocks.push_back([spec](FirstStage& x) {
        const int g = spec.size();
        double pinned_sum = 0.0;
        std::vector<int> free_idx;
        free_idx.reserve(static_cast<std::size_t>(g));
        for (int i = 0; i < g; ++i) {
            if (is_pinned(spec.alpha_fixed[i]))
                pinned_sum += spec.alpha_fixed[i];
            else
                free_idx.push_back(i);
        }
        if (free_idx.empty()) {
            if (std::abs(pinned_sum - 1.0) > 1e-9)
                throw EmptyFeasibleSet("all participation factors pinned but do not sum to 1");
            for (int i = 0; i < g; ++i) x.alpha[i] = spec.alpha_fixed[i];
            return;
        }
        Eigen::VectorXd v(static_cast<Eigen::Index>(free_idx.size()));
        Eigen::VectorXd lb(static_cast<Eigen::Index>(free_idx.size()));
        for (std::size_t k = 0; k < free_idx.size(); ++k) {
            const int i = free_idx[k];
            v[static_cast<Eigen::Index>(k)] = x.alpha[i];
            lb[static_cast<Eigen::Index>(k)] =
                spec.in_reserve_set[static_cast<std::size_t>(i)] ? spec.epsilon : 0.0;
        }
        const Eigen::VectorXd proj = project_simplex_lb(v, lb, 1.0 - pinned_sum);
        for (int i = 0; i < g; ++i) {
            if (is_pinned(spec.alpha_fixed[i])) x.alpha[i] = spec.alpha_fixed[i];
        }
        for (std::size_t k = 0; k < free_idx.size(); ++k)
            x.alpha[free_idx[k]] = proj[static_cast<Eigen::Index>(k)];
    });

    return blocks;
}

FirstStage dykstra_project(const FirstStage& raw, const std::vector<BlockProjector>& blocks,
                           double tol, int max_sweeps) {
    FirstStage x = raw;
    const int g = raw.size();
    std::vector<FirstStage> corrections(blocks.size(), FirstStage::zeros(g));
    FirstStage prev = x;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            const FirstStage y = add(x, corrections[k]);
            x = y;
            blocks[k](x);
            corrections[k] = sub(y, x);
        }
        if (distance(x, prev) <= tol) return x;
        prev = x;
    }
    return x;
}

FirstStage project(const FirstStage& raw, const FeasibleSetSpec& spec, double tol) {
    const int g = spec.size();
    // Emptiness pre-checks on the intersection. The coupling constraints force
    // p0 into [p_min, p_max] for regular units, so the effective p0 box is the
    // tightened one.
    double eff_lo_sum = 0.0, eff_hi_sum = 0.0;
    for (int i = 0; i < g; ++i) {
        double lo = spec.p0_lower[i];
        double hi = spec.p0_upper[i];
        if (spec.regular[static_cast<std::size_t>(i)]) {
            lo = std::max(lo, spec.p_min[i]);
            hi = std::min(hi, spec.p_max[i]);
        }
        if (lo > hi + 1e-12)
            throw EmptyFeasibleSet("generator " + std::to_string(i) +
                                   " has an empty effective p0 interval");
        eff_lo_sum += lo;
        eff_hi_sum += hi;
    }
    const double slack = 1e-12 * (1.0 + std::abs(spec.demand));
    if (spec.demand < eff_lo_sum - slack || spec.demand > eff_hi_sum + slack)
        throw EmptyFeasibleSet("demand " + std::to_string(spec.demand) +
                               " outside the attainable nominal-generation range [" +
                               std::to_string(eff_lo_sum) + ", " + std::to_string(eff_hi_sum) +
                               "]");
    double alpha_floor = 0.0;
    bool any_free = false;
    for (int i = 0; i < g; ++i) {
        if (is_pinned(spec.alpha_fixed[i])) {
            if (spec.alpha_fixed[i] < 0.0)
                throw EmptyFeasibleSet("pinned participation factor is negative");
            alpha_floor += spec.alpha_fixed[i];
        } else {
            alpha_floor += spec.in_reserve_set[static_cast<std::size_t>(i)] ? spec.epsilon : 0.0;
            any_free = true;
        }
    }
    if (alpha_floor > 1.0 + 1e-12)
        throw EmptyFeasibleSet("participation lower bounds sum to " +
                               std::to_string(alpha_floor) + " > 1");
    if (!any_free && std::abs(alpha_floor - 1.0) > 1e-9)
        throw EmptyFeasibleSet("all participation factors pinned but do not sum to 1");

    return dykstra_project(raw, feasible_set_projectors(spec), tol);
}

}  // namespace satopf
