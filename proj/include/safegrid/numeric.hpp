#pragma once
#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

namespace safegrid {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

inline constexpr double infinity = std::numeric_limits<double>::infinity();

template <class T>
inline constexpr bool is_sparse_v = std::is_base_of_v<Eigen::SparseMatrixBase<T>, T>;

// Calls f(row, value) for every stored entry of column j.
template <class Design, class F>
inline void for_each_in_column(const Design& X, Index j, F&& f)
{
    if constexpr (is_sparse_v<Design>) {
        for (typename Design::InnerIterator it(X, j); it; ++it) {
            f(it.row(), it.value());
        }
    } else {
        const auto col = X.col(j);
        for (Index i = 0; i < X.rows(); ++i) {
            f(i, col[i]);
        }
    }
}

/*
 * Generalized self-concordant Taylor weight w_nu(tau).
 * Orders 2, 3 and 4 use their closed forms; other orders the general one.
 * Near tau = 0 the closed forms cancel catastrophically, so a truncated
 * power series is used instead (all three series start at 1/2).
 * Returns +inf outside the domain (tau >= 1 for nu > 2).
 */
inline double w_nu(double tau, double nu)
{
    if (nu > 2 && tau >= 1) return infinity;
    const double a = std::abs(tau);
    if (nu == 2) {
        if (a < 1e-2) {
            // sum_{k>=2} tau^{k-2} / k!
            double term = 0.5, sum = 0.5;
            for (int k = 3; k < 12; ++k) {
                term *= tau / k;
                sum += term;
            }
            return sum;
        }
        return (std::expm1(tau) - tau) / (tau * tau);
    }
    if (nu == 3) {
        if (a < 1e-2) {
            // sum_{k>=2} tau^{k-2} / k
            double pw = 1, sum = 0;
            for (int k = 2; k < 12; ++k) {
                sum += pw / k;
                pw *= tau;
            }
            return sum;
        }
        return (-tau - std::log1p(-tau)) / (tau * tau);
    }
    if (nu == 4) {
        if (a < 1e-2) {
            // sum_{k>=2} tau^{k-2} / (k (k-1))
            double pw = 1, sum = 0;
            for (int k = 2; k < 12; ++k) {
                sum += pw / (k * (k - 1.0));
                pw *= tau;
            }
            return sum;
        }
        return ((1 - tau) * std::log1p(-tau) + tau) / (tau * tau);
    }
    if (a < 1e-6) return 0.5;
    const double r = (nu - 2) / (4 - nu);
    const double e = 2 * (3 - nu) / (2 - nu);
    return r / tau * ((nu - 2) / (2 * (3 - nu) * tau) * (std::pow(1 - tau, e) - 1) - 1);
}

/*
 * Largest rho in [0, cap] with infeasible(rho) == false, assuming the
 * feasible set is an interval containing 0 (true for sublevel sets of
 * convex functions). Brackets by doubling from `start`, then bisects
 * until the bracket is within rel_tol of its upper end.
 */
template <class Infeasible>
inline double largest_feasible(Infeasible&& infeasible, double cap, double rel_tol,
                               double start = 1e-3)
{
    if (infeasible(0.0)) return 0.0;
    double lo = 0.0;
    double hi = std::min(start, cap);
    while (!infeasible(hi)) {
        lo = hi;
        if (hi >= cap) return cap;
        hi = std::min(2 * hi, cap);
    }
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (infeasible(mid)) hi = mid;
        else lo = mid;
    }
    return lo;
}

// Inverse of an increasing function g : [0, inf) -> [0, inf) with g(0) = 0.
template <class G>
inline double invert_increasing(G&& g, double value, double rel_tol = 1e-12)
{
    if (value <= 0) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (g(hi) < value) {
        lo = hi;
        hi *= 2;
        if (!std::isfinite(hi)) return infinity;
    }
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < value) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Spectral norm by power iteration on X^T X.
template <class Design>
inline double operator_norm(const Design& X, double rel_tol = 1e-8, int max_iter = 10000)
{
    if (X.rows() == 0 || X.cols() == 0) return 0.0;
    Vector v = Vector::Constant(X.cols(), 1.0 / std::sqrt(double(X.cols())));
    // deterministic perturbation so v is unlikely to be orthogonal to the top singular vector
    for (Index j = 0; j < v.size(); ++j) v[j] += 1e-3 * std::sin(1.0 + j);
    v.normalize();
    double sigma = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector w = X.transpose() * (X * v);
        const double nrm = w.norm();
        if (nrm == 0) return 0.0;
        const double next = std::sqrt(nrm);
        v = w / nrm;
        if (std::abs(next - sigma) <= rel_tol * next) return next;
        sigma = next;
    }
    return sigma;
}

} // namespace safegrid
