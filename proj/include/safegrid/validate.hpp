#pragma once
#include <safegrid/path.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace safegrid {

enum class Task { regression, classification };

inline std::string to_string(Task t)
{
    return t == Task::regression ? "regression" : "classification";
}

class AllRowsZero : public std::invalid_argument
{
public:
    AllRowsZero() : std::invalid_argument("every validation row is zero") {}
};

struct ValidationConfig
{
    double eps_v = 0;
    Task task = Task::regression;
    // Fixed strong-convexity constant of the training objective. When unset,
    // mu = lambda * gamma is taken from the elastic net penalty at each point.
    std::optional<double> mu;
    double lambda_min = 0;
    double lambda_max = 0;
    double inner_ratio = 0.1;    // training gap target as a fraction of eps_v_mu
    double fallback_step = 1e-2; // step used where eps_v_mu vanishes; the skipped range is reported
    double root_tol = 1e-10;
    std::size_t max_points = 200'000;

    void validate() const
    {
        if (!(eps_v > 0)) throw ConfigError("eps_v must be positive");
        if (mu && !(*mu > 0)) throw ConfigError("mu must be positive");
        if (!(lambda_min > 0 && lambda_min <= lambda_max)) {
            throw ConfigError("need 0 < lambda_min <= lambda_max");
        }
        if (!(inner_ratio > 0 && inner_ratio < 1)) throw ConfigError("inner_ratio must be in (0, 1)");
        if (!(fallback_step > 0 && fallback_step < 1)) {
            throw ConfigError("fallback_step must be in (0, 1)");
        }
    }
};

struct SafeInterval
{
    double lo = 0;
    double hi = 0;

    bool contains(double lambda) const noexcept { return lo <= lambda && lambda <= hi; }
};

struct ValidationPoint
{
    Certificate certificate;
    double error = 0;      // E_v(beta_t)
    double eps_v_mu = 0;   // training gap tolerance at lambda_t
    double mu = 0;         // strong convexity at lambda_t
    double rho_left = 0;
    double rho_right = 0;
    SafeInterval interval; // [lambda_t (1 - rho_left), lambda_t (1 + rho_right)]
    double radius = 0;     // safe radius valid over the whole interval
};

struct ValidationResult
{
    Task task = Task::regression;
    double eps_v = 0;
    double lambda_min = 0;
    double lambda_max = 0;
    std::vector<ValidationPoint> points; // lambda decreasing
    std::vector<SafeInterval> uncovered; // ranges skipped by the fallback step
    double wall_time = 0;
};

struct Selection
{
    std::size_t index = 0;
    double lambda = 0;
    double error = 0;
    double lower_bound = 0; // E_v* - eps_v <= min over the range of the exact E_v
};

// Maps {0,1} labels to {-1,+1}; labels already in {-1,+1} pass through.
inline Vector to_signed_labels(const Vector& y)
{
    const bool binary01 = (y.array() == 0 || y.array() == 1).all();
    if (binary01) return (2 * y.array() - 1).matrix();
    if ((y.array() == -1 || y.array() == 1).all()) return y;
    throw LabelDomain("classification labels must be in {0,1} or {-1,+1}");
}

/*
 * Regression: ||y' - X' beta||_2.
 * Classification: fraction of rows with y'_i (X' beta)_i <= 0. A zero margin
 * counts as an error so that beta = 0 is not a perfect classifier.
 */
template <class Design>
double validation_error(const Vector& beta, const Design& Xv, const Vector& yv, Task task)
{
    if (Xv.cols() != beta.size() || Xv.rows() != yv.size()) {
        throw DimensionMismatch("validation data does not match beta");
    }
    const Vector pred = Xv * beta;
    if (task == Task::regression) return (yv - pred).norm();
    if (yv.size() == 0) return 0.0;
    const Vector s = to_signed_labels(yv);
    Index wrong = 0;
    for (Index i = 0; i < s.size(); ++i) wrong += s[i] * pred[i] <= 0;
    return double(wrong) / double(s.size());
}

inline double safe_radius(double gap, double mu)
{
    if (!(gap >= 0)) throw std::invalid_argument("safe_radius needs gap >= 0");
    if (!(mu > 0)) throw std::invalid_argument("safe_radius needs mu > 0");
    return std::sqrt(2 * gap / mu);
}

namespace detail {

template <class Design>
Vector row_norms(const Design& X)
{
    Vector out = Vector::Zero(X.rows());
    for (Index j = 0; j < X.cols(); ++j) {
        for_each_in_column(X, j, [&](Index i, double v) { out[i] += v * v; });
    }
    return out.cwiseSqrt();
}

// (mu/2) xi_(k), k = floor(n' eps_v) + 1, over rows with nonzero norm.
template <class Design>
double classification_tolerance(const Vector& beta, const Design& Xv, const Vector& norms,
                                double mu, double eps_v)
{
    const Vector margins = Xv * beta;
    std::vector<double> xi;
    xi.reserve(margins.size());
    for (Index i = 0; i < margins.size(); ++i) {
        if (norms[i] > 0) xi.push_back(std::pow(margins[i] / norms[i], 2));
    }
    if (xi.empty()) throw AllRowsZero();
    const auto k = static_cast<std::size_t>(std::floor(double(Xv.rows()) * eps_v));
    // fewer flippable rows than the budget: any gap keeps the error within eps_v
    if (k >= xi.size()) return infinity;
    std::nth_element(xi.begin(), xi.begin() + k, xi.end());
    return 0.5 * mu * xi[k];
}

} // namespace detail

// Training duality gap that guarantees |E_v(beta) - E_v(beta_hat)| <= eps_v.
template <class Design>
double epsilon_v_mu(const Vector& beta, const Design& Xv, double mu, double eps_v, Task task)
{
    if (!(mu > 0)) throw ConfigError("mu must be positive");
    if (!(eps_v > 0)) throw ConfigError("eps_v must be positive");
    if (task == Task::regression) {
        const double norm = operator_norm(Xv);
        if (norm == 0) throw AllRowsZero();
        return 0.5 * mu * std::pow(eps_v / norm, 2);
    }
    return detail::classification_tolerance(beta, Xv, detail::row_norms(Xv), mu, eps_v);
}

/*
 * Adaptive path at the level eps_v_mu: each point is solved until its gap is
 * inner_ratio * eps_v_mu, then steps left and right keep the gap bound below
 * eps_v_mu(lambda). When mu = lambda gamma the tolerance scales linearly in
 * lambda, which enters the step search as a sloped threshold.
 */
template <class Design, class VDesign>
ValidationResult validation_path(const Problem<Design>& train, const VDesign& Xv,
                                 const Vector& yv, const ValidationConfig& cfg,
                                 SolverConfig solver = {})
{
    cfg.validate();
    if (Xv.cols() != train.p() || Xv.rows() != yv.size()) {
        throw DimensionMismatch("validation data does not match the training design");
    }
    if (!cfg.mu && !(train.regularizer().strong_convexity(1.0) > 0)) {
        throw ConfigError("validation needs a strongly convex objective: use elastic net or set mu");
    }
    const auto start = std::chrono::steady_clock::now();
    const auto& loss = train.loss();
    const double slope = cfg.mu ? 0.0 : 1.0;
    auto mu_at = [&](double lambda) {
        return cfg.mu ? *cfg.mu : train.regularizer().strong_convexity(lambda);
    };
    const Vector labels = cfg.task == Task::classification ? to_signed_labels(yv) : yv;
    const Vector norms = detail::row_norms(Xv);
    const double xv_norm = cfg.task == Task::regression ? operator_norm(Xv) : 0.0;
    if (cfg.task == Task::regression && xv_norm == 0) throw AllRowsZero();
    auto tolerance = [&](const Vector& beta, double mu) {
        if (cfg.task == Task::regression) return 0.5 * mu * std::pow(cfg.eps_v / xv_norm, 2);
        return detail::classification_tolerance(beta, Xv, norms, mu, cfg.eps_v);
    };

    ValidationResult out;
    out.task = cfg.task;
    out.eps_v = cfg.eps_v;
    out.lambda_min = cfg.lambda_min;
    out.lambda_max = cfg.lambda_max;

    const double default_tol = solver.eps_c;
    double lambda = cfg.lambda_max;
    Vector beta = Vector::Zero(train.p());
    while (true) {
        const double mu = mu_at(lambda);
        double e = tolerance(beta, mu);
        SolverConfig inner = solver;
        inner.eps_c = e > 0 && std::isfinite(e) ? cfg.inner_ratio * e : default_tol;
        Certificate c = fit(train, lambda, beta, inner);
        // classification: the tolerance depends on beta, so iterate to a fixed point
        for (int it = 0; it < 50 && cfg.task == Task::classification; ++it) {
            e = tolerance(c.beta, mu);
            if (!(e > 0) || !std::isfinite(e) || std::max(c.gap, c.delta) <= cfg.inner_ratio * e) break;
            inner.eps_c = cfg.inner_ratio * e;
            c = fit(train, lambda, c.beta, inner);
        }
        if (cfg.task == Task::regression) e = tolerance(c.beta, mu);

        ValidationPoint pt;
        pt.mu = mu;
        pt.eps_v_mu = e;
        pt.error = validation_error(c.beta, Xv, labels, cfg.task);
        double step = 0;
        if (e > 0 && c.gap <= e) {
            const double level = std::isfinite(e) ? e : infinity;
            pt.rho_left = detail::step_to_threshold(c, level, Side::left, loss, cfg.root_tol, slope);
            pt.rho_right = detail::step_to_threshold(c, level, Side::right, loss, cfg.root_tol, slope);
            pt.radius = std::isfinite(e) ? safe_radius(e, mu) : infinity;
            step = pt.rho_left;
        }
        pt.interval = {lambda * (1 - pt.rho_left), lambda * (1 + pt.rho_right)};
        beta = c.beta;
        pt.certificate = std::move(c);
        out.points.push_back(std::move(pt));

        if (lambda <= cfg.lambda_min) break;
        if (!(step > 0)) {
            step = cfg.fallback_step;
            out.uncovered.push_back({std::max(lambda * (1 - step), cfg.lambda_min), lambda});
        }
        if (out.points.size() >= cfg.max_points) {
            throw std::runtime_error("validation path exceeded max_points");
        }
        lambda = std::max(lambda * (1 - step), cfg.lambda_min);
    }
    out.wall_time = detail::elapsed(start);
    return out;
}

// Grid minimizer of E_v; ties go to the smallest lambda.
inline Selection select_best(const ValidationResult& vr)
{
    if (vr.points.empty()) throw std::invalid_argument("select_best needs a non-empty result");
    std::size_t best = 0;
    for (std::size_t t = 1; t < vr.points.size(); ++t) {
        const auto& a = vr.points[t];
        const auto& b = vr.points[best];
        if (a.error < b.error || (a.error == b.error && a.certificate.lambda < b.certificate.lambda)) {
            best = t;
        }
    }
    const auto& p = vr.points[best];
    return {best, p.certificate.lambda, p.error, p.error - vr.eps_v};
}

} // namespace safegrid
