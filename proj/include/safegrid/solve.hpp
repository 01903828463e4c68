#pragma once
#include <safegrid/certify.hpp>
#include <functional>
#include <stdexcept>
#include <string>

namespace safegrid {

struct SolverConfig
{
    double eps_c = 1e-6;            // target duality gap (absolute)
    bool enforce_delta = true;      // also require Delta <= eps_c
    int max_epochs = 100000;
    int gap_check_every = 10;
    // called after each epoch with the primal objective; costs one extra pass when set
    std::function<void(int, double)> epoch_observer;

    void validate() const
    {
        if (!(eps_c > 0)) throw ConfigError("eps_c must be positive");
        if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
        if (gap_check_every < 1) throw ConfigError("gap_check_every must be >= 1");
    }
};

class MaxEpochsExceeded : public std::runtime_error
{
public:
    explicit MaxEpochsExceeded(Certificate best)
        : std::runtime_error("coordinate descent hit max_epochs at lambda="
                             + std::to_string(best.lambda)
                             + " with gap=" + std::to_string(best.gap))
        , best_(std::move(best))
    {}

    const Certificate& best() const noexcept { return best_; }

private:
    Certificate best_;
};

/*
 * A training problem: design, loss and penalty, plus column norms cached
 * for coordinate descent. Holds a reference to the design, which must
 * outlive it.
 */
template <class Design>
class Problem
{
public:
    Problem(const Design& X, Loss loss, Regularizer reg)
        : X_(X), loss_(std::move(loss)), reg_(std::move(reg))
    {
        if (X.rows() != loss_.size()) {
            throw DimensionMismatch("design has " + std::to_string(X.rows())
                                    + " rows but there are " + std::to_string(loss_.size())
                                    + " labels");
        }
        col_sq_norms_.resize(X.cols());
        for (Index j = 0; j < X.cols(); ++j) col_sq_norms_[j] = X.col(j).squaredNorm();
    }

    const Design& design() const noexcept { return X_; }
    const Loss& loss() const noexcept { return loss_; }
    const Regularizer& regularizer() const noexcept { return reg_; }
    const Vector& col_sq_norms() const noexcept { return col_sq_norms_; }
    Index n() const noexcept { return X_.rows(); }
    Index p() const noexcept { return X_.cols(); }

    Certificate certify(Vector beta, double lambda) const
    {
        return safegrid::certify(X_, loss_, reg_, std::move(beta), lambda);
    }

    double duality_gap(const Vector& beta, const Vector& theta, double lambda) const
    {
        return safegrid::duality_gap(X_, loss_, reg_, beta, theta, lambda);
    }

    double primal(const Vector& beta, double lambda) const
    {
        return loss_.value(X_ * beta) + lambda * reg_.value(beta);
    }

private:
    const Design& X_;
    Loss loss_;
    Regularizer reg_;
    Vector col_sq_norms_;
};

// ||X^T grad f(0)||_inf: smallest lambda at which beta = 0 is optimal.
template <class Design>
double lambda_max(const Problem<Design>& problem)
{
    const Vector grad = problem.loss().gradient(Vector::Zero(problem.n()));
    const Vector v = problem.design().transpose() * grad;
    return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

/*
 * Cyclic proximal coordinate descent with per-coordinate Lipschitz
 * constants ||X_j||^2 * sup f_i''. Stops when the gap (and Delta, if
 * enforced) falls below eps_c; checked every gap_check_every epochs.
 */
template <class Design>
Certificate fit(const Problem<Design>& problem, double lambda, const Vector& warm_start,
                const SolverConfig& cfg)
{
    cfg.validate();
    if (!(lambda > 0)) throw ConfigError("lambda must be positive");
    const auto& X = problem.design();
    const auto& loss = problem.loss();
    const auto& reg = problem.regularizer();
    const Index p = problem.p();

    Vector beta = warm_start.size() == p ? warm_start : Vector::Zero(p);
    Vector z = X * beta;
    Vector grad = loss.gradient(z);
    const double curvature = loss.curvature_bound();

    auto converged = [&](const Certificate& c) {
        return c.gap <= cfg.eps_c && (!cfg.enforce_delta || c.delta <= cfg.eps_c);
    };
    auto worse = [](const Certificate& a, const Certificate& b) {
        return std::max(a.gap, a.delta) > std::max(b.gap, b.delta);
    };

    Certificate best = problem.certify(beta, lambda);
    if (converged(best)) return best;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        for (Index j = 0; j < p; ++j) {
            const double lip = curvature * problem.col_sq_norms()[j];
            if (lip == 0 && beta[j] == 0) continue;
            const double g = X.col(j).dot(grad);
            const double updated = reg.coordinate_minimizer(lip * beta[j] - g, lip, lambda);
            const double step = updated - beta[j];
            if (step == 0) continue;
            beta[j] = updated;
            for_each_in_column(X, j, [&](Index i, double v) {
                z[i] += step * v;
                grad[i] = loss.pointwise_gradient(z[i], i);
            });
        }
        if (cfg.epoch_observer) {
            cfg.epoch_observer(epoch, loss.value(z) + lambda * reg.value(beta));
        }
        if (epoch % cfg.gap_check_every == 0 || epoch == cfg.max_epochs) {
            // refresh z against drift from incremental updates
            z = X * beta;
            grad = loss.gradient(z);
            Certificate c = problem.certify(beta, lambda);
            if (converged(c)) return c;
            if (worse(best, c)) best = std::move(c);
        }
    }
    throw MaxEpochsExceeded(std::move(best));
}

} // namespace safegrid
