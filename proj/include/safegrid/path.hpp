#pragma once
#include <safegrid/solve.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace safegrid {

enum class Strategy { unilateral, bilateral, uniform_unilateral, uniform_bilateral, default_grid };

inline std::string to_string(Strategy s)
{
    switch (s) {
        case Strategy::unilateral: return "unilateral";
        case Strategy::bilateral: return "bilateral";
        case Strategy::uniform_unilateral: return "uniform_unilateral";
        case Strategy::uniform_bilateral: return "uniform_bilateral";
        case Strategy::default_grid: return "default";
    }
    return "unknown";
}

inline Strategy strategy_from_string(const std::string& s)
{
    for (auto k : {Strategy::unilateral, Strategy::bilateral, Strategy::uniform_unilateral,
                   Strategy::uniform_bilateral, Strategy::default_grid}) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown strategy '" + s + "'");
}

struct PathConfig
{
    double eps = 0;
    double eps_c = 0;
    double lambda_min = 0;
    double lambda_max = 0;
    Strategy strategy = Strategy::unilateral;
    int default_size = 10;        // T for the default grid
    double default_decades = 3;   // delta for the default grid
    double root_tol = 1e-10;
    std::size_t max_points = 1'000'000;

    void validate() const
    {
        if (!(eps_c > 0 && eps_c < eps)) throw ConfigError("need 0 < eps_c < eps");
        if (!(lambda_min > 0 && lambda_min <= lambda_max)) {
            throw ConfigError("need 0 < lambda_min <= lambda_max");
        }
        if (strategy == Strategy::default_grid && default_size < 2) {
            throw ConfigError("default grid needs T >= 2");
        }
        if (!(root_tol > 0)) throw ConfigError("root_tol must be positive");
    }
};

// NaN marks a step that was not computed for a point.
struct StepSizes
{
    double left = std::nan("");
    double right = std::nan("");
    double bilateral = std::nan("");
};

struct PathResult
{
    Strategy strategy = Strategy::unilateral;
    std::vector<Certificate> certificates; // lambda decreasing
    std::vector<StepSizes> steps;
    double lambda_min = 0;
    double lambda_max = 0;
    double certified_eps = infinity;
    std::optional<double> complexity_bound;
    double wall_time = 0; // seconds

    std::size_t size() const noexcept { return certificates.size(); }
};

class PathError : public std::runtime_error
{
public:
    PathError(const std::string& what, PathResult partial)
        : std::runtime_error(what), partial_(std::move(partial))
    {}

    const PathResult& partial() const noexcept { return partial_; }

private:
    PathResult partial_;
};

struct QuadraticSteps
{
    double left = 0;
    double right = 0;
};

/*
 * Closed-form steps when f* is (nu/2)||.||^2-smooth:
 *   rho_l = (sqrt(2 nu d ||z||^2 + dt^2) - dt) / (nu ||z||^2),  rho_r with +dt,
 * d = eps - Gap, dt = Delta - Gap. A zero zeta gives infinite steps.
 */
inline QuadraticSteps step_quadratic(const Certificate& c, double eps, double nu)
{
    const double a = nu * c.zeta_norm * c.zeta_norm;
    const double d = std::max(eps - c.gap, 0.0);
    const double dt = c.delta - c.gap;
    if (a == 0) return {infinity, infinity};
    const double root = std::sqrt(2 * a * d + dt * dt);
    // rationalized branches avoid cancellation when |dt| dominates
    const double left = dt > 0 ? 2 * d / (root + dt) : (root - dt) / a;
    const double right = dt < 0 ? 2 * d / (root - dt) : (root + dt) / a;
    return {left, right};
}

enum class Side { left, right };

namespace detail {

inline constexpr double right_step_cap = 1e12;

// Largest rho >= 0 with Q(+-rho) <= eps * (1 - slope * (+-rho)).
inline double step_to_threshold(const Certificate& c, double eps, Side side, const Loss& loss,
                                double root_tol, double slope)
{
    const double sign = side == Side::left ? 1.0 : -1.0;
    // compared as increments over Gap_t so that eps = Gap_t is not lost to rounding
    auto infeasible = [&](double rho) {
        const double inc = q_increment(c, sign * rho, BoundSide::upper, loss);
        return !(inc <= eps * (1 - slope * sign * rho) - c.gap);
    };
    // Q - threshold is convex in rho and vanishes at 0; a nonnegative slope there means rho = 0
    if (eps - c.gap <= 0 && sign * (c.delta - c.gap) + eps * slope * sign >= 0) return 0.0;
    const double cap = side == Side::left ? 1.0 : right_step_cap;
    return largest_feasible(infeasible, cap, root_tol);
}

inline std::optional<double> quadratic_dual_constant(const Loss& loss)
{
    const auto* p = std::get_if<UniformPower>(&loss.modulus().dual);
    if (p && p->order == 2) return p->upper;
    return std::nullopt;
}

} // namespace detail

// Largest rho >= 0 with Q_upper(+-rho) <= eps, by bracket-then-bisect.
inline double step_root(const Certificate& c, double eps, Side side, const Loss& loss,
                        double root_tol = 1e-10)
{
    return detail::step_to_threshold(c, eps, side, loss, root_tol, 0.0);
}

// Step on one side, closed form when the dual modulus is quadratic.
inline double path_step(const Certificate& c, double eps, Side side, const Loss& loss,
                        double root_tol)
{
    if (auto nu = detail::quadratic_dual_constant(loss)) {
        const auto s = step_quadratic(c, eps, *nu);
        return side == Side::left ? std::min(s.left, 1.0) : std::min(s.right, detail::right_step_cap);
    }
    return step_root(c, eps, side, loss, root_tol);
}

/*
 * Bound valid at any later point lambda_t' <= lambda_t (1 - rho_l):
 *   Q~(rho) = (1 - rho) eps_c + |rho| Delta~ + V_{f*}(|rho| R~),
 * R~ = (V_f^*)^{-1}(f(X beta) + 2 eps_c / rho_l), Delta~ = R~ U_f^{-1}(eps_c).
 */
struct BilateralBound
{
    double eps_c = 0;
    double radius = 0; // R~
    double delta = 0;  // Delta~
    std::function<double(double)> dual_modulus;

    double operator()(double rho) const
    {
        const double a = std::abs(rho);
        return (1 - rho) * eps_c + a * delta + dual_modulus(a * radius);
    }
};

inline BilateralBound bilateral_constants(const Certificate& c, double rho_left, double eps_c,
                                          const Loss& loss)
{
    const auto inv = primal_modulus_inverses(loss);
    auto vstar = dual_norm_modulus(loss);
    if (!inv.smooth_conjugate || !inv.convexity || !vstar) {
        throw ModulusUnavailable("bilateral bounds need a uniformly convex and smooth "
                                 + to_string(loss.kind()) + " loss");
    }
    if (!(rho_left > 0)) throw std::invalid_argument("bilateral_constants needs rho_left > 0");
    BilateralBound b;
    b.eps_c = eps_c;
    b.radius = (*inv.smooth_conjugate)(c.loss_value + 2 * eps_c / rho_left);
    b.delta = b.radius * (*inv.convexity)(eps_c);
    b.dual_modulus = std::move(*vstar);
    return b;
}

// rho_b = (rho_l + rho~_r) / (1 + rho~_r), capped at 1
inline double combine_bilateral(double left, double right_bound)
{
    return std::min((left + right_bound) / (1 + right_bound), 1.0);
}

struct BilateralStep
{
    double left = 0;        // rho_l
    double right_bound = 0; // rho~_r
    double combined = 0;    // rho_b
};

inline BilateralStep bilateral_step(const Certificate& c, double eps, double eps_c,
                                    const Loss& loss, double root_tol = 1e-10)
{
    BilateralStep s;
    s.left = path_step(c, eps, Side::left, loss, root_tol);
    if (s.left <= 0) return s;
    const auto bound = bilateral_constants(c, s.left, eps_c, loss);
    s.right_bound = largest_feasible([&](double rho) { return !(bound(-rho) <= eps); },
                                     detail::right_step_cap, root_tol);
    s.combined = combine_bilateral(s.left, s.right_bound);
    return s;
}

inline double step_bilateral(const Certificate& c, double eps, double eps_c, const Loss& loss,
                             double root_tol = 1e-10)
{
    return bilateral_step(c, eps, eps_c, loss, root_tol).combined;
}

// Number of grid points of the uniform grid: floor(log(min/max) / log(1 - rho0)) + 1.
inline std::size_t uniform_grid_size(double rho0, double lambda_min, double lambda_max)
{
    if (!(rho0 > 0)) throw std::invalid_argument("uniform grid needs rho0 > 0");
    if (rho0 >= 1 || lambda_min >= lambda_max) return 1;
    const double t = std::floor(std::log(lambda_min / lambda_max) / std::log1p(-rho0));
    return static_cast<std::size_t>(t) + 1;
}

// lambda_t = lambda_max * 10^{-delta t / (T - 1)}, t = 0..T-1
inline std::vector<double> default_grid(double lambda_max, int size, double decades)
{
    if (size < 2) throw ConfigError("default grid needs T >= 2");
    std::vector<double> grid(size);
    for (int t = 0; t < size; ++t) {
        grid[t] = lambda_max * std::pow(10.0, -decades * t / (size - 1));
    }
    return grid;
}

/*
 * Certified upper bound on max_{lambda in range} min_t Gap_lambda(beta_t, theta_t).
 * Each interval [lambda_{t+1}, lambda_t] is split at the crossing of the two
 * upper bounds; since each bound is convex in lambda, the maximum of the
 * pointwise minimum is controlled by endpoint values either side of the crossing.
 */
inline double grid_error(std::span<const Certificate> certs, double lambda_min, double lambda_max,
                         const Loss& loss, double root_tol = 1e-12)
{
    if (certs.empty()) return infinity;
    auto q = [&](std::size_t t, double lambda) {
        return q_bound(certs[t], 1 - lambda / certs[t].lambda, BoundSide::upper, loss);
    };
    double bound = 0;
    for (const auto& c : certs) bound = std::max(bound, c.gap);
    if (certs.front().lambda < lambda_max) bound = std::max(bound, q(0, lambda_max));
    if (certs.back().lambda > lambda_min) bound = std::max(bound, q(certs.size() - 1, lambda_min));

    for (std::size_t t = 0; t + 1 < certs.size(); ++t) {
        const double a = certs[t + 1].lambda;
        const double b = certs[t].lambda;
        if (a >= b) continue;
        auto upper_wins = [&](double lambda) { return q(t, lambda) >= q(t + 1, lambda); };
        double local;
        if (upper_wins(b)) {
            local = 0; // q_{t+1} <= gap_t at b and convex on [a, b]
        } else if (!upper_wins(a)) {
            local = q(t, a);
        } else {
            double lo = a, hi = b;
            while (hi - lo > root_tol * hi) {
                const double mid = 0.5 * (lo + hi);
                if (upper_wins(mid)) lo = mid;
                else hi = mid;
            }
            const double middle = std::min(std::max(q(t + 1, hi), certs[t + 1].gap),
                                           std::max(q(t, lo), certs[t].gap));
            local = std::max({q(t + 1, lo), q(t, hi), middle});
        }
        bound = std::max(bound, local);
    }
    return bound;
}

inline double strongly_convex_complexity(double log_ratio, double nu, double mu, double f0, double slack)
{
    return log_ratio * std::sqrt(nu / mu * f0 / slack);
}

// log(max/min) sqrt((nu/mu) f(X beta_0) / (eps - eps_c)); absent unless f is strongly convex and smooth.
inline std::optional<double> complexity_estimate(const Loss& loss, const Certificate& first,
                                                 double eps, double eps_c, double lambda_min,
                                                 double lambda_max)
{
    const auto* p = std::get_if<UniformPower>(&loss.modulus().primal);
    if (!p || p->order != 2 || !(p->lower > 0) || !(p->upper > 0)) return std::nullopt;
    return strongly_convex_complexity(std::log(lambda_max / lambda_min), p->upper, p->lower,
                                      first.loss_value, eps - eps_c);
}

namespace detail {

template <class Design>
Certificate fit_or_throw(const Problem<Design>& problem, double lambda, const Vector& warm,
                         const SolverConfig& solver, PathResult& partial)
{
    try {
        return fit(problem, lambda, warm, solver);
    } catch (const MaxEpochsExceeded& e) {
        throw PathError(e.what(), std::move(partial));
    }
}

inline StepSizes both_sides(const Certificate& c, double eps, const Loss& loss, double root_tol)
{
    StepSizes s;
    s.left = path_step(c, eps, Side::left, loss, root_tol);
    s.right = path_step(c, eps, Side::right, loss, root_tol);
    return s;
}

inline double elapsed(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace detail

/*
 * Adaptive path: lambda_0 = lambda_max, solve to eps_c, step left by the
 * unilateral or bilateral rule, clamp at lambda_min.
 */
template <class Design>
PathResult training_path(const Problem<Design>& problem, const PathConfig& cfg,
                         SolverConfig solver = {})
{
    cfg.validate();
    if (cfg.strategy != Strategy::unilateral && cfg.strategy != Strategy::bilateral) {
        throw ConfigError("training_path runs the adaptive strategies only");
    }
    const auto start = std::chrono::steady_clock::now();
    solver.eps_c = cfg.eps_c;
    const auto& loss = problem.loss();

    PathResult out;
    out.strategy = cfg.strategy;
    out.lambda_min = cfg.lambda_min;
    out.lambda_max = cfg.lambda_max;

    double lambda = cfg.lambda_max;
    Vector beta = Vector::Zero(problem.p());
    while (true) {
        Certificate c = detail::fit_or_throw(problem, lambda, beta, solver, out);
        beta = c.beta;
        StepSizes s = detail::both_sides(c, cfg.eps, loss, cfg.root_tol);
        double rho = s.left;
        if (cfg.strategy == Strategy::bilateral && s.left > 0) {
            s.bilateral = step_bilateral(c, cfg.eps, cfg.eps_c, loss, cfg.root_tol);
            rho = s.bilateral;
        }
        out.certificates.push_back(std::move(c));
        out.steps.push_back(s);
        if (lambda <= cfg.lambda_min) break;
        if (!(rho > 0)) throw PathError("step size vanished at lambda=" + std::to_string(lambda), out);
        if (out.size() >= cfg.max_points) throw PathError("path exceeded max_points", out);
        lambda = std::max(lambda * (1 - rho), cfg.lambda_min);
    }
    out.certified_eps = grid_error(out.certificates, cfg.lambda_min, cfg.lambda_max, loss);
    out.complexity_bound = complexity_estimate(loss, out.certificates.front(), cfg.eps, cfg.eps_c,
                                               cfg.lambda_min, cfg.lambda_max);
    out.wall_time = detail::elapsed(start);
    return out;
}

enum class UniformMode { unilateral, bilateral };

// Step rho_0 of the uniform grid, from the bilateral bound built at lambda_max.
inline double uniform_step(const Certificate& first, double eps, double eps_c, const Loss& loss,
                           UniformMode mode, double root_tol)
{
    const double left = path_step(first, eps, Side::left, loss, root_tol);
    if (!(left > 0)) return 0.0;
    const auto bound = bilateral_constants(first, left, eps_c, loss);
    const double tl = largest_feasible([&](double r) { return !(bound(r) <= eps); }, 1.0, root_tol);
    if (mode == UniformMode::unilateral) return tl;
    const double tr = largest_feasible([&](double r) { return !(bound(-r) <= eps); },
                                       detail::right_step_cap, root_tol);
    return combine_bilateral(tl, tr);
}

/*
 * Geometric grid lambda_t = lambda_max (1 - rho_0)^t, t = 0..T, with T the
 * floor formula; rho_0 is fixed before any solve below lambda_max.
 */
template <class Design>
PathResult uniform_grid(const Problem<Design>& problem, const PathConfig& cfg, UniformMode mode,
                        SolverConfig solver = {})
{
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    solver.eps_c = cfg.eps_c;
    const auto& loss = problem.loss();

    PathResult out;
    out.strategy = mode == UniformMode::unilateral ? Strategy::uniform_unilateral
                                                   : Strategy::uniform_bilateral;
    out.lambda_min = cfg.lambda_min;
    out.lambda_max = cfg.lambda_max;

    Certificate first = detail::fit_or_throw(problem, cfg.lambda_max, Vector::Zero(problem.p()),
                                             solver, out);
    const double rho0 = uniform_step(first, cfg.eps, cfg.eps_c, loss, mode, cfg.root_tol);
    if (!(rho0 > 0)) throw PathError("uniform step vanished", out);
    const std::size_t count = uniform_grid_size(rho0, cfg.lambda_min, cfg.lambda_max);
    if (count > cfg.max_points) throw PathError("uniform grid exceeds max_points", out);

    Vector beta = first.beta;
    for (std::size_t t = 0; t < count; ++t) {
        Certificate c = t == 0 ? std::move(first)
                               : detail::fit_or_throw(problem,
                                                      cfg.lambda_max * std::pow(1 - rho0, double(t)),
                                                      beta, solver, out);
        beta = c.beta;
        StepSizes s = detail::both_sides(c, cfg.eps, loss, cfg.root_tol);
        s.bilateral = rho0;
        out.certificates.push_back(std::move(c));
        out.steps.push_back(s);
    }
    out.certified_eps = grid_error(out.certificates, cfg.lambda_min, cfg.lambda_max, loss);
    out.complexity_bound = complexity_estimate(loss, out.certificates.front(), cfg.eps, cfg.eps_c,
                                               cfg.lambda_min, cfg.lambda_max);
    out.wall_time = detail::elapsed(start);
    return out;
}

// Solves every point of a fixed decreasing grid with warm starts.
template <class Design>
PathResult solve_grid(const Problem<Design>& problem, std::span<const double> lambdas,
                      double eps_c, SolverConfig solver = {}, double step_eps = 0)
{
    const auto start = std::chrono::steady_clock::now();
    solver.eps_c = eps_c;
    PathResult out;
    out.strategy = Strategy::default_grid;
    if (lambdas.empty()) return out;
    out.lambda_max = lambdas.front();
    out.lambda_min = lambdas.back();
    Vector beta = Vector::Zero(problem.p());
    for (double lambda : lambdas) {
        Certificate c = detail::fit_or_throw(problem, lambda, beta, solver, out);
        beta = c.beta;
        StepSizes s;
        if (step_eps > c.gap) s = detail::both_sides(c, step_eps, problem.loss(), 1e-10);
        out.certificates.push_back(std::move(c));
        out.steps.push_back(s);
    }
    out.certified_eps = grid_error(out.certificates, out.lambda_min, out.lambda_max, problem.loss());
    out.wall_time = detail::elapsed(start);
    return out;
}

// Dispatch on cfg.strategy.
template <class Design>
PathResult build_path(const Problem<Design>& problem, const PathConfig& cfg,
                      SolverConfig solver = {})
{
    switch (cfg.strategy) {
        case Strategy::unilateral:
        case Strategy::bilateral: return training_path(problem, cfg, solver);
        case Strategy::uniform_unilateral: return uniform_grid(problem, cfg, UniformMode::unilateral, solver);
        case Strategy::uniform_bilateral: return uniform_grid(problem, cfg, UniformMode::bilateral, solver);
        case Strategy::default_grid: {
            cfg.validate();
            const auto grid = default_grid(cfg.lambda_max, cfg.default_size, cfg.default_decades);
            auto out = solve_grid(problem, std::span<const double>(grid), cfg.eps_c, solver, cfg.eps);
            out.certified_eps = grid_error(out.certificates, out.lambda_min, out.lambda_max, problem.loss());
            return out;
        }
    }
    throw ConfigError("unknown strategy");
}

/*
 * Dense certification scan: for log-spaced lambdas in the range, the smallest
 * true duality gap among the grid points bracketing lambda (two on each side).
 * Returns the maximum over the scan. Independent of the Q bounds.
 */
template <class Design>
double dense_scan(const Problem<Design>& problem, std::span<const Certificate> certs,
                  double lambda_min, double lambda_max, std::size_t points)
{
    if (certs.empty()) return infinity;
    double worst = 0;
    const std::size_t m = std::max<std::size_t>(points, 2);
    for (std::size_t k = 0; k < m; ++k) {
        const double lambda = lambda_min == lambda_max
            ? lambda_max
            : lambda_max * std::pow(lambda_min / lambda_max, double(k) / double(m - 1));
        // first index with certs[idx].lambda < lambda (lambdas are decreasing)
        std::size_t idx = std::partition_point(certs.begin(), certs.end(),
                                               [&](const Certificate& c) { return c.lambda >= lambda; })
            - certs.begin();
        const std::size_t lo = idx >= 2 ? idx - 2 : 0;
        const std::size_t hi = std::min(idx + 2, certs.size());
        double best = infinity;
        for (std::size_t t = lo; t < hi; ++t) {
            best = std::min(best, problem.duality_gap(certs[t].beta, certs[t].theta, lambda));
        }
        worst = std::max(worst, best);
    }
    return worst;
}

} // namespace safegrid
