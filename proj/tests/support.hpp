#pragma once
#include <safegrid.hpp>
#include <cmath>

namespace safegrid::fixtures {

inline DenseMatrix gaussian_matrix(Rng& rng, Index n, Index p)
{
    DenseMatrix X(n, p);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
    }
    return X;
}

inline Vector gaussian_vector(Rng& rng, Index n, double scale = 1.0)
{
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
    return v;
}

inline Vector binary_labels(Rng& rng, Index n)
{
    Vector y(n);
    for (Index i = 0; i < n; ++i) y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
    // both classes present
    y[0] = 0;
    if (n > 1) y[1] = 1;
    return y;
}

// point in the interior of dom f* for logistic: u_i + y_i in (0, 1)
inline Vector logistic_dual_point(Rng& rng, const Vector& y, double margin = 0.05)
{
    Vector u(y.size());
    for (Index i = 0; i < y.size(); ++i) u[i] = margin + (1 - 2 * margin) * rng.uniform() - y[i];
    return u;
}

inline double relative_error(double a, double b)
{
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace safegrid::fixtures
