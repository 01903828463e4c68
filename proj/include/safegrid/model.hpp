#pragma once
#include <safegrid/errors.hpp>
#include <safegrid/numeric.hpp>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>

namespace safegrid {

/*
 * Regularity moduli.
 *
 * UniformPower: U(t) = (lower/order) t^order and V(t) = (upper/order) t^order
 * on the Euclidean norm. order = 2 is strong convexity / smoothness.
 * lower = 0 means no uniform convexity.
 *
 * SelfConcordant: (M, nu) generalized self-concordance of a separable
 * function; bounds are the sum of the scalar bounds
 *   w_nu(+-d_i) w_i^2 h_i,   d_i = (nu/2 - 1) M |w_i|^{3-nu} (w_i^2 h_i)^{(nu-2)/2}
 * with h_i the diagonal Hessian at the anchor.
 */
struct UniformPower
{
    double order = 2;
    double lower = 0;
    double upper = 1;
};

struct SelfConcordant
{
    double m = 1;
    double order = 4;
};

using Modulus = std::variant<UniformPower, SelfConcordant>;

struct ModulusSpec
{
    Modulus primal; // regularity of f
    Modulus dual;   // regularity of f*
};

enum class LossKind { squared, logistic };

inline std::string to_string(LossKind k)
{
    return k == LossKind::squared ? "squared" : "logistic";
}

/*
 * Separable data-fitting term f(z) = sum_i f_i(z_i):
 *   squared:  f_i(z) = (y_i - z)^2 / 2,           f_i*(u) = u^2/2 + u y_i
 *   logistic: f_i(z) = log(1 + e^z) - y_i z,      f_i*(u) = Nh(u + y_i)
 * with Nh(x) = x log x + (1-x) log(1-x) and labels y_i in {0, 1}.
 *
 * Conjugate values are +inf outside dom f*.
 */
class Loss
{
public:
    // clamp for the logistic dual Hessian 1/(z(1-z)) near the domain boundary
    static constexpr double domain_clamp = 1e-12;
    // slack on dom f* membership for rounding in rescaled dual points
    static constexpr double domain_slack = 1e-12;

    static Loss squared(Vector y)
    {
        return Loss(LossKind::squared, std::move(y),
                    ModulusSpec{UniformPower{2, 1, 1}, UniformPower{2, 1, 1}});
    }

    static Loss logistic(Vector y)
    {
        for (Index i = 0; i < y.size(); ++i) {
            if (y[i] != 0 && y[i] != 1) {
                throw LabelDomain("logistic loss expects labels in {0, 1}");
            }
        }
        // f is 1/4-smooth but not uniformly convex; f* is (1, 4)-self-concordant.
        return Loss(LossKind::logistic, std::move(y),
                    ModulusSpec{UniformPower{2, 0, 0.25}, SelfConcordant{1, 4}});
    }

    LossKind kind() const noexcept { return kind_; }
    const Vector& labels() const noexcept { return y_; }
    Index size() const noexcept { return y_.size(); }
    const ModulusSpec& modulus() const noexcept { return modulus_; }

    // Upper bound on f_i'' used by coordinate descent majorization.
    double curvature_bound() const noexcept { return kind_ == LossKind::squared ? 1.0 : 0.25; }

    double value(const Vector& z) const
    {
        double s = 0;
        if (kind_ == LossKind::squared) {
            s = 0.5 * (y_ - z).squaredNorm();
        } else {
            for (Index i = 0; i < z.size(); ++i) s += softplus(z[i]) - y_[i] * z[i];
        }
        return s;
    }

    double pointwise_gradient(double z, Index i) const
    {
        return kind_ == LossKind::squared ? z - y_[i] : sigmoid(z) - y_[i];
    }

    Vector gradient(const Vector& z) const
    {
        Vector g(z.size());
        for (Index i = 0; i < z.size(); ++i) g[i] = pointwise_gradient(z[i], i);
        return g;
    }

    bool in_conjugate_domain(const Vector& u) const
    {
        if (kind_ == LossKind::squared) return u.allFinite();
        for (Index i = 0; i < u.size(); ++i) {
            const double z = u[i] + y_[i];
            if (!(z >= -domain_slack && z <= 1 + domain_slack)) return false;
        }
        return true;
    }

    double conjugate(const Vector& u) const
    {
        if (!in_conjugate_domain(u)) return infinity;
        double s = 0;
        if (kind_ == LossKind::squared) {
            for (Index i = 0; i < u.size(); ++i) s += u[i] * (0.5 * u[i] + y_[i]);
        } else {
            for (Index i = 0; i < u.size(); ++i) s += neg_entropy(std::clamp(u[i] + y_[i], 0.0, 1.0));
        }
        return s;
    }

    Vector conjugate_gradient(const Vector& u) const
    {
        if (kind_ == LossKind::squared) return u + y_;
        Vector g(u.size());
        for (Index i = 0; i < u.size(); ++i) {
            const double z = clamp_dual(u[i] + y_[i]);
            g[i] = std::log(z) - std::log1p(-z);
        }
        return g;
    }

    // f(grad f*(zeta)), closed form; logistic reduces to -sum log(dist of z to the label's far end)
    double value_at_conjugate_gradient(const Vector& zeta) const
    {
        if (kind_ == LossKind::squared) return 0.5 * zeta.squaredNorm();
        double s = 0;
        for (Index i = 0; i < zeta.size(); ++i) {
            const double z = std::clamp(zeta[i] + y_[i], 0.0, 1.0);
            s -= y_[i] == 1 ? std::log(z) : std::log1p(-z);
        }
        return s;
    }

    // ||w||_anchor^2 for the Hessian of f* at anchor
    double dual_hessian_sq_norm(const Vector& anchor, const Vector& w) const
    {
        if (kind_ == LossKind::squared) return w.squaredNorm();
        double s = 0;
        for (Index i = 0; i < w.size(); ++i) s += w[i] * w[i] * dual_hessian(anchor[i], i);
        return s;
    }

    // V_{f*,anchor}(w); +inf when the self-concordant bound is not available
    double dual_upper_modulus(const Vector& anchor, const Vector& w) const
    {
        return dual_modulus(anchor, w, +1);
    }

    // U_{f*,anchor}(w)
    double dual_lower_modulus(const Vector& anchor, const Vector& w) const
    {
        return dual_modulus(anchor, w, -1);
    }

private:
    Loss(LossKind kind, Vector y, ModulusSpec spec)
        : kind_(kind), y_(std::move(y)), modulus_(spec)
    {}

    static double softplus(double z)
    {
        return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }

    static double sigmoid(double z)
    {
        if (z >= 0) return 1 / (1 + std::exp(-z));
        const double e = std::exp(z);
        return e / (1 + e);
    }

    static double neg_entropy(double x)
    {
        double s = 0;
        if (x > 0) s += x * std::log(x);
        if (x < 1) s += (1 - x) * std::log1p(-x);
        return s;
    }

    static double clamp_dual(double z) { return std::clamp(z, domain_clamp, 1 - domain_clamp); }

    double dual_hessian(double u, Index i) const
    {
        if (kind_ == LossKind::squared) return 1.0;
        const double z = clamp_dual(u + y_[i]);
        return 1 / (z * (1 - z));
    }

    double dual_modulus(const Vector& anchor, const Vector& w, int sign) const
    {
        if (const auto* p = std::get_if<UniformPower>(&modulus_.dual)) {
            const double c = sign > 0 ? p->upper : p->lower;
            return c / p->order * std::pow(w.norm(), p->order);
        }
        const auto& sc = std::get<SelfConcordant>(modulus_.dual);
        double s = 0;
        for (Index i = 0; i < w.size(); ++i) {
            if (w[i] == 0) continue;
            const double h = dual_hessian(anchor[i], i);
            const double sq = w[i] * w[i] * h;
            const double d = sc.order == 2
                ? sc.m * std::abs(w[i])
                : (sc.order / 2 - 1) * sc.m * std::pow(std::abs(w[i]), 3 - sc.order)
                      * std::pow(sq, (sc.order - 2) / 2);
            const double weight = w_nu(sign * d, sc.order);
            if (!std::isfinite(weight)) return infinity;
            s += weight * sq;
        }
        return s;
    }

    LossKind kind_;
    Vector y_;
    ModulusSpec modulus_;
};

/*
 * Inverse maps of the primal moduli used by the bilateral constants:
 *   smooth_conjugate = (V_f^*)^{-1},  convexity = U_f^{-1}.
 * Either is absent when the loss lacks the corresponding modulus.
 */
struct PrimalInverses
{
    std::optional<std::function<double(double)>> smooth_conjugate;
    std::optional<std::function<double(double)>> convexity;
};

inline PrimalInverses primal_modulus_inverses(const Loss& loss)
{
    PrimalInverses out;
    const auto* p = std::get_if<UniformPower>(&loss.modulus().primal);
    if (!p) return out;
    const double d = p->order;
    if (p->upper > 0) {
        // V(t) = (nu/d) t^d  =>  V*(s) = (1 - 1/d) nu^{-1/(d-1)} s^{d/(d-1)}
        const double nu = p->upper;
        out.smooth_conjugate = [d, nu](double a) {
            if (a <= 0) return 0.0;
            const double c = (1 - 1 / d) * std::pow(nu, -1 / (d - 1));
            return std::pow(a / c, (d - 1) / d);
        };
    }
    if (p->lower > 0) {
        const double mu = p->lower;
        out.convexity = [d, mu](double a) { return a <= 0 ? 0.0 : std::pow(d * a / mu, 1 / d); };
    }
    return out;
}

// V_{f*} evaluated on a norm value, for losses whose dual modulus is norm-based.
inline std::optional<std::function<double(double)>> dual_norm_modulus(const Loss& loss)
{
    const auto* p = std::get_if<UniformPower>(&loss.modulus().dual);
    if (!p) return std::nullopt;
    const UniformPower m = *p;
    return [m](double s) { return m.upper / m.order * std::pow(std::abs(s), m.order); };
}

enum class PenaltyKind { l1, elastic_net };

/*
 * Penalty Omega:
 *   l1:          ||b||_1,                    Omega*(v) = indicator(||v||_inf <= 1)
 *   elastic_net: ||b||_1 + (gamma/2)||b||^2, Omega*(v) = sum (|v_j| - 1)_+^2 / (2 gamma)
 */
class Regularizer
{
public:
    static constexpr double domain_slack = 1e-12;

    static Regularizer l1() { return Regularizer(PenaltyKind::l1, 0); }

    static Regularizer elastic_net(double gamma)
    {
        if (!(gamma > 0)) throw ConfigError("elastic net needs gamma > 0");
        return Regularizer(PenaltyKind::elastic_net, gamma);
    }

    PenaltyKind kind() const noexcept { return kind_; }
    double gamma() const noexcept { return gamma_; }

    double value(const Vector& beta) const
    {
        double s = beta.lpNorm<1>();
        if (kind_ == PenaltyKind::elastic_net) s += 0.5 * gamma_ * beta.squaredNorm();
        return s;
    }

    bool in_conjugate_domain(const Vector& v) const
    {
        if (kind_ == PenaltyKind::elastic_net) return v.allFinite();
        return v.size() == 0 || v.cwiseAbs().maxCoeff() <= 1 + domain_slack;
    }

    double conjugate(const Vector& v) const
    {
        if (kind_ == PenaltyKind::l1) return in_conjugate_domain(v) ? 0.0 : infinity;
        double s = 0;
        for (Index j = 0; j < v.size(); ++j) {
            const double e = std::max(std::abs(v[j]) - 1, 0.0);
            s += e * e;
        }
        return s / (2 * gamma_);
    }

    // sigma°_{dom Omega*}: dual norm for l1, 0 when dom Omega* is the whole space
    double polar_support(const Vector& v) const
    {
        if (kind_ == PenaltyKind::elastic_net || v.size() == 0) return 0.0;
        return v.cwiseAbs().maxCoeff();
    }

    // Strong convexity of lambda * Omega.
    double strong_convexity(double lambda) const noexcept
    {
        return kind_ == PenaltyKind::elastic_net ? lambda * gamma_ : 0.0;
    }

    // argmin_b  (L/2)(b - target/L)^2 + lambda Omega_j(b)
    double coordinate_minimizer(double target, double lipschitz, double lambda) const
    {
        const double shrunk = std::copysign(std::max(std::abs(target) - lambda, 0.0), target);
        const double denom = lipschitz + strong_convexity(lambda);
        return denom > 0 ? shrunk / denom : 0.0;
    }

private:
    Regularizer(PenaltyKind k, double gamma) : kind_(k), gamma_(gamma) {}

    PenaltyKind kind_;
    double gamma_;
};

} // namespace safegrid
