#pragma once
#include <safegrid/model.hpp>
#include <cmath>

namespace safegrid {

/*
 * One certified point of a path: primal/dual pair at lambda with its
 * duality gap and the quantities driving the gap bounds at other lambdas.
 *   zeta  = -lambda * theta
 *   delta = f(X beta) - f(grad f*(zeta))
 */
struct Certificate
{
    double lambda = 0;
    Vector beta;
    Vector theta;
    Vector zeta;
    double gap = 0;
    double delta = 0;
    double loss_value = 0;
    double zeta_norm = 0;
};

// Gradient-rescaled dual point: -grad f(X beta) / max(lambda, sigma°(X^T grad f(X beta))).
template <class Design>
Vector dual_point(const Design& X, const Loss& loss, const Regularizer& reg,
                  const Vector& beta, double lambda)
{
    const Vector grad = loss.gradient(X * beta);
    const double scale = std::max(lambda, reg.polar_support(X.transpose() * grad));
    if (scale == 0) return Vector::Zero(grad.size());
    return -grad / scale;
}

namespace detail {

inline double clamp_gap(double gap, double scale)
{
    if (gap < 0 && gap >= -1e-9 * scale) return 0.0;
    return gap;
}

} // namespace detail

// Gap_lambda(beta, theta); +inf when theta is dual infeasible at lambda.
template <class Design>
double duality_gap(const Design& X, const Loss& loss, const Regularizer& reg,
                   const Vector& beta, const Vector& theta, double lambda)
{
    const Vector xt_theta = X.transpose() * theta;
    const double fstar = loss.conjugate(-lambda * theta);
    const double rstar = reg.conjugate(xt_theta);
    if (!std::isfinite(fstar) || !std::isfinite(rstar)) return infinity;
    const double f = loss.value(X * beta);
    const double gap = f + fstar + lambda * (reg.value(beta) + rstar);
    return detail::clamp_gap(gap, 1 + std::abs(f) + std::abs(fstar));
}

// Omega(beta) + Omega*(X^T theta) - <beta, X^T theta>; +inf when X^T theta is outside dom Omega*.
template <class Design>
double regularizer_gap(const Design& X, const Regularizer& reg, const Vector& beta,
                       const Vector& theta)
{
    const Vector v = X.transpose() * theta;
    const double rstar = reg.conjugate(v);
    if (!std::isfinite(rstar)) return infinity;
    return reg.value(beta) + rstar - beta.dot(v);
}

template <class Design>
Certificate certify(const Design& X, const Loss& loss, const Regularizer& reg,
                    Vector beta, double lambda)
{
    Certificate c;
    c.lambda = lambda;
    const Vector z = X * beta;
    const Vector grad = loss.gradient(z);
    const Vector xt_grad = X.transpose() * grad;
    const double scale = std::max(lambda, reg.polar_support(xt_grad));
    c.theta = scale == 0 ? Vector::Zero(grad.size()) : Vector(-grad / scale);
    c.zeta = -lambda * c.theta;
    c.loss_value = loss.value(z);

    const double fstar = loss.conjugate(c.zeta);
    const double rstar = scale == 0 ? 0.0 : reg.conjugate(-xt_grad / scale);
    const double gap = c.loss_value + fstar + lambda * (reg.value(beta) + rstar);
    c.gap = detail::clamp_gap(gap, 1 + std::abs(c.loss_value) + std::abs(fstar));
    c.delta = c.loss_value - loss.value_at_conjugate_gradient(c.zeta);
    c.zeta_norm = c.zeta.norm();
    c.beta = std::move(beta);
    return c;
}

enum class BoundSide { upper, lower };

/*
 * Q_{t,phi}(rho) - Gap_t = rho (Delta_t - Gap_t) + phi(-rho zeta_t),
 * phi = V_{f*,zeta_t} (upper) or U_{f*,zeta_t} (lower), rho = 1 - lambda / lambda_t.
 * +inf when the shifted dual point leaves dom f* or the upper modulus is unavailable.
 */
inline double q_increment(const Certificate& c, double rho, BoundSide side, const Loss& loss)
{
    if (rho == 0) return 0.0;
    const Vector w = -rho * c.zeta;
    if (rho < 0 && !loss.in_conjugate_domain(c.zeta + w)) return infinity;
    const double phi = side == BoundSide::upper ? loss.dual_upper_modulus(c.zeta, w)
                                                : loss.dual_lower_modulus(c.zeta, w);
    if (!std::isfinite(phi)) return infinity;
    return rho * (c.delta - c.gap) + phi;
}

inline double q_bound(const Certificate& c, double rho, BoundSide side, const Loss& loss)
{
    return c.gap + q_increment(c, rho, side, loss);
}

} // namespace safegrid
