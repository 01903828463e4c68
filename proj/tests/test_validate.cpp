#include "support.hpp"
#include <gtest/gtest.h>

using namespace safegrid;

namespace {

struct Holdout
{
    DenseMatrix X, Xv;
    Vector y, yv;
};

Holdout holdout(SyntheticKind kind, Index n, Index p, std::uint64_t seed, double noise = 1.0)
{
    const Dataset d = synthetic(kind, n, p, seed, noise);
    const Split s = train_validation_split(d, 0.3, seed);
    return {std::get<DenseMatrix>(s.train.X), std::get<DenseMatrix>(s.validation.X), s.train.y, s.validation.y};
}

template <class Design>
double dense_oracle_min(const Problem<Design>& problem, const DenseMatrix& Xv, const Vector& yv, Task task,
                        double lmin, double lmax, int points)
{
    SolverConfig solver;
    solver.eps_c = 1e-10;
    Vector beta;
    double best = infinity;
    for (int k = 0; k < points; ++k) {
        const double lambda = lmax * std::pow(lmin / lmax, double(k) / (points - 1));
        const Certificate c = fit(problem, lambda, beta, solver);
        beta = c.beta;
        best = std::min(best, validation_error(c.beta, Xv, yv, task));
    }
    return best;
}

void expect_coverage(const ValidationResult& vr)
{
    // intervals (plus reported holes) cover [lambda_min, lambda_max] without gaps
    std::vector<SafeInterval> all;
    for (const auto& p : vr.points) all.push_back(p.interval);
    for (const auto& u : vr.uncovered) all.push_back(u);
    std::sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.lo < b.lo; });
    double reach = vr.lambda_min;
    for (const auto& iv : all) {
        if (iv.lo > reach * (1 + 1e-12)) break;
        reach = std::max(reach, iv.hi);
    }
    EXPECT_GE(reach * (1 + 1e-12), vr.lambda_max);
}

} // namespace

TEST(ValidationError, Examples)
{
    const DenseMatrix I = DenseMatrix::Identity(3, 3);
    Vector y(3);
    y << 0.5, -2, 1;
    EXPECT_EQ(validation_error(y, I, y, Task::regression), 0.0);
    Vector labels(3), beta(3);
    labels << 1, -1, 1;
    beta << 2, -1, 0.3;
    EXPECT_EQ(validation_error(beta, I, labels, Task::classification), 0.0);
    beta << 1, -1, -1;
    EXPECT_NEAR(validation_error(beta, I, labels, Task::classification), 1.0 / 3, 1e-15);
}

TEST(ValidationError, ZeroLabelsAreMappedAndZeroMarginsCountAsErrors)
{
    const DenseMatrix I = DenseMatrix::Identity(2, 2);
    Vector y01(2), beta(2);
    y01 << 1, 0;
    beta << 1, -1;
    EXPECT_EQ(validation_error(beta, I, y01, Task::classification), 0.0);
    EXPECT_EQ(validation_error(Vector(Vector::Zero(2)), I, y01, Task::classification), 1.0);
    Vector bad(2);
    bad << 2, 1;
    EXPECT_THROW(validation_error(beta, I, bad, Task::classification), LabelDomain);
}

// |L(a, b) - L(a, c)| <= L(b, c) for both losses
TEST(ValidationError, TriangleInequality)
{
    Rng rng(211);
    const Index n = 9;
    const DenseMatrix I = DenseMatrix::Identity(n, n);
    for (int trial = 0; trial < 500; ++trial) {
        const Vector a = fixtures::gaussian_vector(rng, n);
        const Vector b = fixtures::gaussian_vector(rng, n);
        const Vector c = fixtures::gaussian_vector(rng, n);
        const double lab = validation_error(b, I, a, Task::regression);
        const double lac = validation_error(c, I, a, Task::regression);
        EXPECT_LE(std::abs(lab - lac), validation_error(c, I, b, Task::regression) + 1e-12);

        const Vector sa = a.array().sign().matrix();
        const Vector sb = b.array().sign().matrix();
        const double cab = validation_error(b, I, sa, Task::classification);
        const double cac = validation_error(c, I, sa, Task::classification);
        EXPECT_LE(std::abs(cab - cac), validation_error(c, I, sb, Task::classification) + 1e-12);
    }
}

TEST(SafeRadius, Examples)
{
    EXPECT_NEAR(safe_radius(0.02, 1), 0.2, 1e-15);
    EXPECT_EQ(safe_radius(0, 1), 0.0);
    EXPECT_THROW(safe_radius(0.1, 0), std::invalid_argument);
}

TEST(SafeRadius, ContainsPreciseSolution)
{
    Rng rng(223);
    for (int trial = 0; trial < 20; ++trial) {
        const DenseMatrix X = fixtures::gaussian_matrix(rng, 15, 25);
        const double gamma = 0.2 + rng.uniform();
        const Problem problem(X, Loss::squared(fixtures::gaussian_vector(rng, 15, 2.0)),
                              Regularizer::elastic_net(gamma));
        const double lambda = lambda_max(problem) * (0.02 + 0.5 * rng.uniform());
        SolverConfig loose, precise;
        loose.eps_c = 1e-2;
        precise.eps_c = 1e-12;
        const Certificate approx = fit(problem, lambda, Vector(), loose);
        const Certificate exact = fit(problem, lambda, Vector(), precise);
        EXPECT_LE((approx.beta - exact.beta).norm(),
                  safe_radius(approx.gap, problem.regularizer().strong_convexity(lambda)) + 1e-9);
    }
}

TEST(EpsilonVMu, RegressionExample)
{
    const DenseMatrix Xv = 10 * DenseMatrix::Identity(3, 3);
    EXPECT_NEAR(epsilon_v_mu(Vector(Vector::Zero(3)), Xv, 1.0, 0.1, Task::regression), 5e-5, 1e-15);
}

TEST(EpsilonVMu, ClassificationOrderStatistic)
{
    const DenseMatrix Xv = DenseMatrix::Identity(4, 4);
    Vector beta(4);
    beta << 0.7, -0.3, 0.9, 0.5; // xi = {0.49, 0.09, 0.81, 0.25}
    EXPECT_NEAR(epsilon_v_mu(beta, Xv, 2.0, 0.25, Task::classification), 0.25, 1e-15);
}

TEST(EpsilonVMu, ZeroRowsExcludedAndAllZeroRejected)
{
    DenseMatrix Xv = DenseMatrix::Zero(5, 4);
    Xv.topRows(4) = 2 * DenseMatrix::Identity(4, 4);
    Vector beta(4);
    beta << 0.7, -0.3, 0.9, 0.5;
    EXPECT_NEAR(epsilon_v_mu(beta, Xv, 2.0, 0.2, Task::classification), 0.25, 1e-15);
    EXPECT_THROW(epsilon_v_mu(beta, DenseMatrix(DenseMatrix::Zero(3, 4)), 1.0, 0.1, Task::classification),
                 AllRowsZero);
    EXPECT_THROW(epsilon_v_mu(beta, Xv, 0.0, 0.1, Task::regression), ConfigError);
}

TEST(ValidationPath, RejectsLassoWithoutMu)
{
    const Holdout h = holdout(SyntheticKind::regression, 40, 20, 1);
    const Problem problem(h.X, Loss::squared(h.y), Regularizer::l1());
    ValidationConfig cfg;
    cfg.eps_v = 0.5;
    cfg.lambda_max = lambda_max(problem);
    cfg.lambda_min = cfg.lambda_max / 10;
    EXPECT_THROW(validation_path(problem, h.Xv, h.yv, cfg), ConfigError);
    cfg.mu = 0.5;
    EXPECT_NO_THROW(validation_path(problem, h.Xv, h.yv, cfg));
}

TEST(ValidationPath, SinglePoint)
{
    const Holdout h = holdout(SyntheticKind::regression, 40, 20, 2);
    const Problem problem(h.X, Loss::squared(h.y), Regularizer::elastic_net(1));
    ValidationConfig cfg;
    cfg.eps_v = 0.5;
    cfg.lambda_max = cfg.lambda_min = 0.3 * lambda_max(problem);
    const auto vr = validation_path(problem, h.Xv, h.yv, cfg);
    ASSERT_EQ(vr.points.size(), 1u);
    EXPECT_EQ(select_best(vr).index, 0u);
    EXPECT_TRUE(vr.points[0].interval.contains(cfg.lambda_max));
}

TEST(ValidationPath, RegressionToyMatchesOracle)
{
    const Holdout h = holdout(SyntheticKind::regression, 43, 50, 3, 3.0);
    const Problem problem(h.X, Loss::squared(h.y), Regularizer::elastic_net(1));
    const double lmax = lambda_max(problem);
    const double oracle = dense_oracle_min(problem, h.Xv, h.yv, Task::regression, lmax / 100, lmax, 500);
    for (double eps_v : {2.0, 0.5, 0.1}) {
        ValidationConfig cfg;
        cfg.eps_v = eps_v;
        cfg.lambda_max = lmax;
        cfg.lambda_min = lmax / 100;
        const auto vr = validation_path(problem, h.Xv, h.yv, cfg);
        expect_coverage(vr);
        EXPECT_TRUE(vr.uncovered.empty());
        const auto best = select_best(vr);
        EXPECT_LE(best.error - oracle, eps_v) << eps_v;
        EXPECT_LE(best.lower_bound, oracle + 1e-9);
    }
}

TEST(ValidationPath, ClassificationToyMatchesOracle)
{
    const Holdout h = holdout(SyntheticKind::classification, 100, 30, 4, 2.0);
    const Problem problem(h.X, Loss::logistic(h.y), Regularizer::elastic_net(1));
    const double lmax = lambda_max(problem);
    const double oracle = dense_oracle_min(problem, h.Xv, h.yv, Task::classification, lmax / 100, lmax, 500);
    for (double eps_v : {0.2, 0.1, 0.04}) {
        ValidationConfig cfg;
        cfg.eps_v = eps_v;
        cfg.task = Task::classification;
        cfg.lambda_max = lmax;
        cfg.lambda_min = lmax / 100;
        const auto vr = validation_path(problem, h.Xv, h.yv, cfg);
        expect_coverage(vr);
        EXPECT_LE(select_best(vr).error - oracle, eps_v) << eps_v;
    }
}

TEST(ValidationPath, SafeBallContainment)
{
    const Holdout h = holdout(SyntheticKind::regression, 43, 30, 5);
    const Problem problem(h.X, Loss::squared(h.y), Regularizer::elastic_net(0.5));
    const double lmax = lambda_max(problem);
    ValidationConfig cfg;
    cfg.eps_v = 1.0;
    cfg.lambda_max = lmax;
    cfg.lambda_min = lmax / 50;
    const auto vr = validation_path(problem, h.Xv, h.yv, cfg);
    SolverConfig precise;
    precise.eps_c = 1e-12;
    Rng rng(5);
    for (const auto& pt : vr.points) {
        for (int k = 0; k < 3; ++k) {
            const double lambda = std::max(cfg.lambda_min, pt.interval.lo
                                           + rng.uniform() * (std::min(pt.interval.hi, lmax) - pt.interval.lo));
            const Certificate exact = fit(problem, lambda, pt.certificate.beta, precise);
            EXPECT_LE((exact.beta - pt.certificate.beta).norm(), pt.radius + 1e-9);
        }
    }
}

TEST(SelectBest, TiesGoToSmallestLambda)
{
    ValidationResult vr;
    vr.eps_v = 0.1;
    for (double lambda : {3.0, 2.0, 1.0}) {
        ValidationPoint p;
        p.certificate.lambda = lambda;
        p.error = lambda == 3.0 ? 0.5 : 0.2;
        vr.points.push_back(p);
    }
    const auto s = select_best(vr);
    EXPECT_EQ(s.lambda, 1.0);
    EXPECT_EQ(s.index, 2u);
    EXPECT_NEAR(s.lower_bound, 0.1, 1e-15);
    EXPECT_THROW(select_best(ValidationResult{}), std::invalid_argument);
}

TEST(SelectBest, RefinementIsMonotone)
{
    const Holdout h = holdout(SyntheticKind::regression, 60, 40, 6, 3.0);
    const Problem problem(h.X, Loss::squared(h.y), Regularizer::elastic_net(1));
    const double lmax = lambda_max(problem);
    double prev = infinity;
    for (double eps_v : {5.0, 0.5, 0.05}) {
        ValidationConfig cfg;
        cfg.eps_v = eps_v;
        cfg.lambda_max = lmax;
        cfg.lambda_min = lmax / 100;
        const double e = select_best(validation_path(problem, h.Xv, h.yv, cfg)).error;
        EXPECT_LE(e, prev + 1e-12);
        prev = e;
    }
}

TEST(SignedLabels, Mapping)
{
    Vector y(3);
    y << 0, 1, 1;
    EXPECT_EQ(to_signed_labels(y), (Vector(3) << -1, 1, 1).finished());
    y << -1, 1, -1;
    EXPECT_EQ(to_signed_labels(y), y);
    y << 0, 2, 1;
    EXPECT_THROW(to_signed_labels(y), LabelDomain);
}
