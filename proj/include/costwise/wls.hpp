#pragma once

#include "costwise/cost.hpp"
#include "costwise/error.hpp"
#include "costwise/legendre.hpp"
#include "costwise/measures.hpp"
#include "costwise/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace costwise {

/// Sample points x_i with weights w(x_i), observations y_i = f(x_i) + e_i,
/// the noise e_i itself, and evaluation costs c(x_i).
struct SampleSet {
    std::vector<double> points;
    std::vector<double> weights;
    std::vector<double> values;
    std::vector<double> noise;
    std::vector<double> costs;

    std::size_t size() const noexcept { return points.size(); }

    /// C_tot = sum_i c(x_i).
    double total_cost() const { return std::accumulate(costs.begin(), costs.end(), 0.0); }

    double noise_norm() const {
        double s = 0.0;
        for (double e : noise) s += e * e;
        return std::sqrt(s);
    }
};

/// Builds a sample set at given points. `noise` may be empty (noiseless).
template <class F>
SampleSet make_sample_set(const Measure& measure, std::vector<double> points, F&& f, const CostModel& cost,
                          std::vector<double> noise = {}) {
    if (!noise.empty() && noise.size() != points.size())
        throw std::invalid_argument("make_sample_set: noise length differs from point count");
    SampleSet s;
    const std::size_t m = points.size();
    s.points = std::move(points);
    s.noise = noise.empty() ? std::vector<double>(m, 0.0) : std::move(noise);
    s.weights.resize(m);
    s.values.resize(m);
    s.costs.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double x = s.points[i];
        s.weights[i] = measure.weight(x);
        s.values[i] = f(x) + s.noise[i];
        s.costs[i] = cost(x);
    }
    return s;
}

/// Draws m i.i.d. points from `measure` and, when `noise_amplitude > 0`,
/// i.i.d. uniform noise on (-a, a), both from `stream`.
template <class F>
SampleSet draw_sample_set(const Measure& measure, std::size_t m, F&& f, const CostModel& cost, Stream& stream,
                          double noise_amplitude = 0.0) {
    std::vector<double> points = measure.sample(m, stream);
    std::vector<double> noise;
    if (noise_amplitude > 0.0) {
        noise.resize(m);
        for (double& e : noise) e = stream.uniform(-noise_amplitude, noise_amplitude);
    }
    return make_sample_set(measure, std::move(points), std::forward<F>(f), cost, std::move(noise));
}

struct LinearSystem {
    Eigen::MatrixXd matrix; // A[i][j] = sqrt(w_i/m) phi_j(x_i)
    Eigen::VectorXd rhs;    // b[i]    = sqrt(w_i/m) y_i
};

inline LinearSystem design_matrix(const SampleSet& samples, const LegendreBasis& basis) {
    const std::size_t m = samples.size();
    if (m == 0) throw std::invalid_argument("design_matrix: need at least one sample");
    const std::size_t n = basis.size();
    LinearSystem sys{Eigen::MatrixXd(m, n), Eigen::VectorXd(m)};
    std::vector<double> phi(n);
    for (std::size_t i = 0; i < m; ++i) {
        const double w = samples.weights[i];
        if (!std::isfinite(w) || w < 0.0) throw std::domain_error("design_matrix: non-finite or negative weight");
        const double scale = std::sqrt(w / static_cast<double>(m));
        basis.eval(samples.points[i], phi);
        for (std::size_t j = 0; j < n; ++j) sys.matrix(i, j) = scale * phi[j];
        sys.rhs(i) = scale * samples.values[i];
    }
    return sys;
}

struct FitDiagnostics {
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double cond = std::numeric_limits<double>::infinity();
    std::size_t rank = 0;
};

/// Polynomial in the orthonormal Legendre basis.
struct Estimator {
    Eigen::VectorXd coefficients;
    FitDiagnostics diagnostics;

    std::size_t size() const noexcept { return static_cast<std::size_t>(coefficients.size()); }

    double operator()(double x) const {
        std::vector<double> phi(size());
        eval_orthonormal_legendre<double>(x, phi);
        double sum = 0.0;
        for (std::size_t j = 0; j < phi.size(); ++j) sum += coefficients(static_cast<Eigen::Index>(j)) * phi[j];
        return sum;
    }

    /// ||p||_{L^2_rho} by Parseval.
    double norm() const { return coefficients.norm(); }
};

/// Singular values below sigma_max * m * 1e-14 are treated as zero.
inline double pseudoinverse_cutoff(double sigma_max, std::size_t m) {
    return sigma_max * static_cast<double>(m) * 1e-14;
}

/// Minimal-norm least-squares solution of min ||A c - b||_2 via the SVD
/// pseudoinverse.
inline Estimator solve_min_norm(const LinearSystem& sys) {
    const Eigen::Index m = sys.matrix.rows();
    if (sys.matrix.cwiseAbs().maxCoeff() == 0.0) throw numerical_error("fit: design matrix is identically zero");
    Eigen::JacobiSVD<Eigen::MatrixXd, Eigen::ColPivHouseholderQRPreconditioner> svd(
        sys.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    Estimator est;
    est.diagnostics.sigma_max = s(0);
    est.diagnostics.sigma_min = s(s.size() - 1);
    est.diagnostics.cond = est.diagnostics.sigma_min > 0.0 ? est.diagnostics.sigma_max / est.diagnostics.sigma_min
                                                           : std::numeric_limits<double>::infinity();
    // A thin SVD of a wide matrix has fewer singular values than columns.
    if (s.size() < sys.matrix.cols()) {
        est.diagnostics.sigma_min = 0.0;
        est.diagnostics.cond = std::numeric_limits<double>::infinity();
    }
    const double cutoff = pseudoinverse_cutoff(s(0), static_cast<std::size_t>(m));
    Eigen::VectorXd utb = svd.matrixU().transpose() * sys.rhs;
    std::size_t rank = 0;
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        if (s(k) > cutoff) {
            utb(k) /= s(k);
            ++rank;
        } else {
            utb(k) = 0.0;
        }
    }
    est.diagnostics.rank = rank;
    est.coefficients = svd.matrixV() * utb;
    return est;
}

/// Weighted least-squares fit over P_{n-1}; returns the minimal-norm minimizer.
inline Estimator fit(const SampleSet& samples, const LegendreBasis& basis) {
    return solve_min_norm(design_matrix(samples, basis));
}

/// Smallest singular value of a matrix (0 for a wide matrix).
inline double smallest_singular_value(const Eigen::MatrixXd& a) {
    if (a.rows() < a.cols()) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd, Eigen::ColPivHouseholderQRPreconditioner> svd(a);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

/// Discrete stability constant on Omega: sqrt(lambda_min(G)) with
/// G = (1/m) sum_i w(x_i) 1_Omega(x_i) Phi(x_i) Phi(x_i)^T, where
/// Phi_j(x) = phi_j(x/(1-sigma)) / sqrt(1-sigma) is orthonormal in L^2_rho(Omega).
/// Computed as the smallest singular value of the matrix whose rows are
/// sqrt(w_i 1_Omega(x_i) / m) Phi(x_i); for sigma = 0 this is sigma_min(A).
inline double stability_constant(const SampleSet& samples, const LegendreBasis& basis, const Subdomain& omega) {
    const std::size_t m = samples.size();
    const std::size_t n = basis.size();
    if (m == 0) return 0.0;
    const double h = omega.half_width();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    std::vector<double> phi(n);
    for (std::size_t i = 0; i < m; ++i) {
        const double x = samples.points[i];
        if (!omega.is_full() && !omega.contains(x)) continue;
        const double scale = std::sqrt(samples.weights[i] / static_cast<double>(m) / h);
        basis.eval(x / h, phi);
        for (std::size_t j = 0; j < n; ++j) b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = scale * phi[j];
    }
    return smallest_singular_value(b);
}

} // namespace costwise
