#include "costwise/oracle.hpp"
#include "costwise/strategies.hpp"
#include "costwise/wls.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

using namespace costwise;

namespace {

// Points at the n-point Gauss nodes with weights m * lambda_k: then
// A^T A = sum_k lambda_k phi phi^T = I exactly.
SampleSet orthonormal_design(std::size_t order) {
    const QuadratureRule rule = QuadratureRule::gauss(order);
    SampleSet s;
    const double m = static_cast<double>(rule.size());
    s.points = rule.nodes();
    for (double w : rule.weights()) s.weights.push_back(m * w);
    s.values.assign(rule.size(), 0.0);
    s.noise.assign(rule.size(), 0.0);
    s.costs.assign(rule.size(), 1.0);
    return s;
}

double phi(std::size_t i, double x) {
    std::vector<double> v(i);
    eval_orthonormal_legendre<double>(x, v);
    return v[i - 1];
}

} // namespace

TEST(Wls, DesignMatrixUniformFirstColumn) {
    Stream stream(3);
    const auto s = draw_sample_set(Measure::uniform(), 40, [](double) { return 0.0; }, CostModel(), stream);
    const auto sys = design_matrix(s, LegendreBasis(4));
    ASSERT_EQ(sys.matrix.rows(), 40);
    ASSERT_EQ(sys.matrix.cols(), 4);
    for (Eigen::Index i = 0; i < 40; ++i) EXPECT_NEAR(sys.matrix(i, 0), 1.0 / std::sqrt(40.0), 1e-15);
}

TEST(Wls, DesignMatrixRejectsBadWeights) {
    SampleSet s = orthonormal_design(4);
    s.weights[1] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(design_matrix(s, LegendreBasis(3)), std::domain_error);
    s.weights[1] = std::nan("");
    EXPECT_THROW(design_matrix(s, LegendreBasis(3)), std::domain_error);
    EXPECT_THROW(design_matrix(SampleSet{}, LegendreBasis(3)), std::invalid_argument);
}

TEST(Wls, SampleSetBookkeeping) {
    Stream stream(11);
    const CostModel cost(0.5);
    const auto s = draw_sample_set(Measure::chebyshev(), 200, [](double x) { return x * x; }, cost, stream, 0.01);
    double total = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_GT(s.points[i], -1.0);
        EXPECT_LT(s.points[i], 1.0);
        EXPECT_LE(std::abs(s.noise[i]), 0.01);
        EXPECT_DOUBLE_EQ(s.values[i], s.points[i] * s.points[i] + s.noise[i]);
        const double c = std::pow(1.0 - s.points[i] * s.points[i], -0.5);
        EXPECT_NEAR(s.costs[i], c, 1e-9 * c); // 1 - x^2 cancels near the ends
        total += s.costs[i];
        noise += s.noise[i] * s.noise[i];
    }
    EXPECT_NEAR(s.total_cost(), total, 1e-9 * total);
    EXPECT_NEAR(s.noise_norm(), std::sqrt(noise), 1e-15);
    EXPECT_GT(s.noise_norm(), 0.0);
}

TEST(Wls, RecoversBasisElement) {
    // f = phi_3, m = 10 distinct points, n = 5
    Stream stream(5);
    const auto s = draw_sample_set(Measure::chebyshev(), 10, [](double x) { return phi(3, x); }, CostModel(), stream);
    const Estimator est = fit(s, LegendreBasis(5));
    ASSERT_EQ(est.size(), 5u);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(est.coefficients(j), j == 2 ? 1.0 : 0.0, 1e-10);
    EXPECT_EQ(est.diagnostics.rank, 5u);
}

TEST(Wls, InterpolationCase) {
    // m = n distinct points: polynomial data is reproduced exactly.
    for (std::size_t n : {1u, 2u, 5u, 12u}) {
        Stream stream(100 + n);
        std::vector<double> c(n);
        for (double& v : c) v = stream.uniform(-1.0, 1.0);
        const TargetFunction f = legendre_series_target(c);
        const auto s = draw_sample_set(Measure::chebyshev(), n, f, CostModel(), stream);
        const Estimator est = fit(s, LegendreBasis(n));
        const double err = l2_error(f, est, default_rule(n));
        EXPECT_LT(err, 1e-10) << "n = " << n;
    }
}

TEST(Wls, OrthonormalColumnsHaveUnitCondition) {
    const SampleSet s = orthonormal_design(8);
    const LegendreBasis basis(6);
    const auto sys = design_matrix(s, basis);
    const Eigen::MatrixXd gram = sys.matrix.transpose() * sys.matrix;
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-13);
    const Estimator est = fit(s, basis);
    EXPECT_NEAR(est.diagnostics.cond, 1.0, 1e-12);
    EXPECT_NEAR(est.diagnostics.sigma_min, 1.0, 1e-12);
    EXPECT_NEAR(stability_constant(s, basis, Subdomain::full()), 1.0, 1e-12);
}

TEST(Wls, ZeroDesignMatrixIsDegenerate) {
    SampleSet s = orthonormal_design(4);
    for (double& w : s.weights) w = 0.0;
    EXPECT_THROW(fit(s, LegendreBasis(3)), numerical_error);
}

TEST(Wls, MinimalNormForRankDeficientSystems) {
    // Three distinct points, five unknowns: solution set is c_p + ker(A).
    // Oracle: the minimal-norm minimizer is the unique solution orthogonal to
    // ker(A), and equals the complete-orthogonal-decomposition pseudoinverse.
    Stream stream(21);
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = draw_sample_set(Measure::uniform(), 3, [](double x) { return std::exp(x); }, CostModel(), stream);
        const LegendreBasis basis(5);
        const auto sys = design_matrix(s, basis);
        const Estimator est = solve_min_norm(sys);
        EXPECT_EQ(est.diagnostics.rank, 3u);
        EXPECT_EQ(est.diagnostics.sigma_min, 0.0);
        EXPECT_TRUE(std::isinf(est.diagnostics.cond));
        EXPECT_LT((sys.matrix * est.coefficients - sys.rhs).norm(), 1e-10 * sys.rhs.norm());

        const Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.matrix);
        const Eigen::MatrixXd kernel = lu.kernel();
        ASSERT_EQ(kernel.cols(), 2);
        EXPECT_LT((kernel.transpose() * est.coefficients).norm(), 1e-9 * est.coefficients.norm());

        const Eigen::VectorXd reference = sys.matrix.completeOrthogonalDecomposition().pseudoInverse() * sys.rhs;
        EXPECT_LT((reference - est.coefficients).norm(), 1e-9 * reference.norm());

        // Any other minimizer is longer.
        for (Eigen::Index k = 0; k < kernel.cols(); ++k) {
            const Eigen::VectorXd other = est.coefficients + 0.1 * kernel.col(k);
            EXPECT_GT(other.norm(), est.coefficients.norm());
        }
    }
}

TEST(Wls, RepeatedPointsAreHandled) {
    // Duplicated points make A rank deficient even with m >= n.
    SampleSet s;
    for (double x : {-0.5, -0.5, 0.25, 0.25, 0.25}) {
        s.points.push_back(x);
        s.weights.push_back(1.0);
        s.values.push_back(1.0 + x);
        s.noise.push_back(0.0);
        s.costs.push_back(1.0);
    }
    const Estimator est = fit(s, LegendreBasis(4));
    EXPECT_EQ(est.diagnostics.rank, 2u);
    EXPECT_NEAR(est(-0.5), 0.5, 1e-12);
    EXPECT_NEAR(est(0.25), 1.25, 1e-12);
}

TEST(Wls, NormalEquationResidual) {
    Stream stream(8);
    for (std::size_t n : {3u, 10u, 20u}) {
        const auto s = draw_sample_set(Measure::chebyshev(), 4 * n, [](double x) { return 1.0 / (1.1 - x); },
                                       CostModel(), stream);
        const auto sys = design_matrix(s, LegendreBasis(n));
        const Estimator est = solve_min_norm(sys);
        const Eigen::VectorXd atb = sys.matrix.transpose() * sys.rhs;
        const Eigen::VectorXd r = sys.matrix.transpose() * (sys.matrix * est.coefficients - sys.rhs);
        EXPECT_LE(r.norm(), 1e-9 * atb.norm()) << "n = " << n;
    }
}

TEST(Wls, ParsevalNorm) {
    const std::vector<double> c{0.5, -1.0, 0.25, 2.0};
    Estimator est;
    est.coefficients = Eigen::Map<const Eigen::VectorXd>(c.data(), 4);
    const double by_quadrature =
        std::sqrt(QuadratureRule::gauss(8).integrate([&](double x) { return est(x) * est(x); }));
    EXPECT_NEAR(est.norm(), by_quadrature, 1e-13);
}

TEST(Wls, ExpectedGramIsIdentity) {
    // E[A^T A] = I for x_i ~ mu with w = 1/v: Monte-Carlo average of the Gram matrix.
    for (const Measure& mu : {Measure::chebyshev(), Measure::jacobi(0.5), Measure::christoffel(6)}) {
        Stream stream(1234);
        const std::size_t n = 4, m = 50, trials = 2000;
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t t = 0; t < trials; ++t) {
            const auto s = draw_sample_set(mu, m, [](double) { return 0.0; }, CostModel(), stream);
            const auto sys = design_matrix(s, LegendreBasis(n));
            mean += sys.matrix.transpose() * sys.matrix;
        }
        mean /= static_cast<double>(trials);
        EXPECT_LT((mean - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 0.05) << mu.descriptor();
    }
}

TEST(Wls, WeightedEmpiricalNormIsUnbiased) {
    // (1/m) sum w |g|^2 -> ||g||^2 = 1 for g = phi_2, at 1e5 total draws.
    for (const Measure& mu : {Measure::uniform(), Measure::chebyshev(), Measure::jacobi(0.5), Measure::christoffel(5)}) {
        Stream stream(77);
        const std::size_t m = 100, trials = 1000;
        double acc = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            const auto s = draw_sample_set(mu, m, [](double x) { return phi(2, x); }, CostModel(), stream);
            double e = 0.0;
            for (std::size_t i = 0; i < m; ++i) e += s.weights[i] * s.values[i] * s.values[i];
            acc += e / static_cast<double>(m);
        }
        EXPECT_NEAR(acc / static_cast<double>(trials), 1.0, 0.02) << mu.descriptor();
    }
}

TEST(Wls, StabilityConstantMatchesSmallestSingularValue) {
    Stream stream(31);
    const auto s = draw_sample_set(Measure::chebyshev(), 60, [](double) { return 0.0; }, CostModel(), stream);
    const LegendreBasis basis(8);
    const Estimator est = fit(s, basis);
    EXPECT_NEAR(stability_constant(s, basis, Subdomain::full()), est.diagnostics.sigma_min, 1e-12);
}

TEST(Wls, StabilityConstantOnSubdomain) {
    // Oracle: orthonormalize the basis over Omega by a Cholesky factor of the
    // Omega Gram matrix (in the phi basis), then take sqrt(lambda_min) of the
    // empirical Gram in that basis.
    const double sigma = 0.1;
    const Subdomain omega(sigma);
    const std::size_t n = 5;
    const LegendreBasis basis(n);
    Stream stream(41);
    const auto s = draw_sample_set(Measure::chebyshev(), 400, [](double) { return 0.0; }, CostModel(), stream);

    const Eigen::MatrixXd g_omega = subdomain_gram(basis, omega).cast<double>();
    const Eigen::MatrixXd l_inv = g_omega.llt().matrixL().solve(Eigen::MatrixXd::Identity(n, n));
    Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!omega.contains(s.points[i])) continue;
        const auto p = basis(s.points[i]);
        const Eigen::VectorXd q = l_inv * Eigen::Map<const Eigen::VectorXd>(p.data(), n);
        emp += s.weights[i] * q * q.transpose();
    }
    emp /= static_cast<double>(s.size());
    const double expected = std::sqrt(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(emp).eigenvalues()(0));
    EXPECT_NEAR(stability_constant(s, basis, omega), expected, 1e-10);
}

TEST(Wls, StabilityEventUnderPlannedBudget) {
    // m from plan_budget with eps = 0.1 makes P(alpha >= 1/2) >= 0.9.
    const std::size_t n = 5, trials = 100;
    const Measure mu = strategy_two(n);
    const Subdomain omega(mu.sigma());
    const LegendreBasis basis(n);
    const BudgetPlan plan = plan_budget(basis, mu, omega, CostModel(), 0.1);
    std::size_t good = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        Stream stream(substream_seed(99, {t}));
        const auto s = draw_sample_set(mu, plan.m, [](double) { return 0.0; }, CostModel(), stream);
        if (stability_constant(s, basis, omega) >= 0.5) ++good;
    }
    EXPECT_GE(static_cast<double>(good) / trials, 0.85);
}
