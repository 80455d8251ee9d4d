#pragma once

#include "costwise/error.hpp"
#include "costwise/legendre.hpp"
#include "costwise/quadrature.hpp"
#include "costwise/wls.hpp"

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace costwise {

/// A real target function on (-1,1).
struct TargetFunction {
    std::function<double(double)> f;
    std::string label;
    std::string regularity; // free-form tag, e.g. "analytic", "polynomial"

    double operator()(double x) const { return f(x); }
};

/// f(x) = (1.1 - x)^{-1}: analytic on [-1,1] with a pole just past x = 1.
inline TargetFunction inverse_pole_target(double pole = 1.1) {
    return {[pole](double x) { return 1.0 / (pole - x); }, "inverse_pole:" + detail::format_real(pole), "analytic"};
}

/// A polynomial given by its orthonormal Legendre coefficients.
inline TargetFunction legendre_series_target(std::vector<double> coefficients) {
    return {[c = std::move(coefficients)](double x) {
                std::vector<double> phi(c.size());
                eval_orthonormal_legendre<double>(x, phi);
                double s = 0.0;
                for (std::size_t j = 0; j < c.size(); ++j) s += c[j] * phi[j];
                return s;
            },
            "legendre_series", "polynomial"};
}

/// Gauss order used by default for a basis of size n: 64-node panels, which
/// covers 2n + margin for every n this library is used with, and 8 panels.
inline QuadratureRule default_rule(std::size_t n, std::size_t margin = 16) {
    const std::size_t per_panel = std::max<std::size_t>(64, n + margin / 2 + 1);
    return QuadratureRule::composite(per_panel, 8);
}

namespace detail {

inline Eigen::VectorXd project(const TargetFunction& f, const LegendreBasis& basis, const QuadratureRule& rule) {
    const std::size_t n = basis.size();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::vector<double> phi(n);
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const double x = rule.nodes()[k];
        basis.eval(x, phi);
        const double fw = rule.weights()[k] * f(x);
        for (std::size_t j = 0; j < n; ++j) c(static_cast<Eigen::Index>(j)) += fw * phi[j];
    }
    return c;
}

inline double l2_distance(const TargetFunction& f, const Eigen::VectorXd& c, const QuadratureRule& rule) {
    const std::size_t n = static_cast<std::size_t>(c.size());
    std::vector<double> phi(n);
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const double x = rule.nodes()[k];
        eval_orthonormal_legendre<double>(x, phi);
        double p = 0.0;
        for (std::size_t j = 0; j < n; ++j) p += c(static_cast<Eigen::Index>(j)) * phi[j];
        const double r = f(x) - p;
        sum += rule.weights()[k] * r * r;
    }
    return std::sqrt(sum);
}

} // namespace detail

/// Orthogonal projection f_n: c_i = ∫ f phi_i d rho. The rule is checked
/// against its panel-doubled refinement.
inline Estimator best_approx(const TargetFunction& f, const LegendreBasis& basis, const QuadratureRule& rule,
                             double tolerance = 1e-10) {
    if (rule.exactness() < 2 * basis.size())
        throw std::invalid_argument("best_approx: quadrature order too low for the basis size");
    Estimator est;
    est.coefficients = detail::project(f, basis, rule);
    const Eigen::VectorXd check = detail::project(f, basis, rule.refined());
    const double diff = (est.coefficients - check).cwiseAbs().maxCoeff();
    if (!(diff <= tolerance * std::max(1.0, check.cwiseAbs().maxCoeff())))
        throw numerical_error("best_approx: quadrature not converged for " + f.label + " (change " +
                              detail::format_real(diff) + ")");
    est.diagnostics.sigma_min = est.diagnostics.sigma_max = est.diagnostics.cond = 1.0;
    est.diagnostics.rank = basis.size();
    return est;
}

/// ||f - p||_{L^2_rho} by quadrature, checked against the refined rule.
inline double l2_error(const TargetFunction& f, const Estimator& estimator, const QuadratureRule& rule,
                       double tolerance = 1e-10) {
    const double e = detail::l2_distance(f, estimator.coefficients, rule);
    const double check = detail::l2_distance(f, estimator.coefficients, rule.refined());
    if (!(std::abs(e - check) <= tolerance * std::max(1.0, check) + 1e-13))
        throw numerical_error("l2_error: quadrature not converged for " + f.label);
    return check;
}

/// max |f - p| over grid_size Chebyshev points cos(pi (j + 1/2) / N) in (-1,1).
inline double linf_error(const TargetFunction& f, const Estimator& estimator, std::size_t grid_size = 10000) {
    if (grid_size < 1000) throw std::invalid_argument("linf_error: grid_size must be at least 1000");
    const std::size_t n = estimator.size();
    std::vector<double> phi(n);
    double worst = 0.0;
    for (std::size_t j = 0; j < grid_size; ++j) {
        const double x =
            std::cos(std::numbers::pi * (static_cast<double>(j) + 0.5) / static_cast<double>(grid_size));
        eval_orthonormal_legendre<double>(x, phi);
        double p = 0.0;
        for (std::size_t i = 0; i < n; ++i) p += estimator.coefficients(static_cast<Eigen::Index>(i)) * phi[i];
        worst = std::max(worst, std::abs(f(x) - p));
    }
    return worst;
}

namespace detail {

// 113-bit binary float. lambda_min(G_Omega) falls like rho^{-2n}, so double
// or long double lose most of its digits by n = 20.
using quad = boost::multiprecision::number<boost::multiprecision::cpp_bin_float_quad::backend_type,
                                           boost::multiprecision::et_off>;

// Row-major n x n Gram matrix, full storage.
template <class Real>
std::vector<Real> subdomain_gram_entries(std::size_t n, double sigma) {
    const Real h = 1 - Real(sigma);
    // Integrand is a polynomial of degree 2n-2: n Gauss nodes are exact.
    std::vector<Real> t, w;
    gauss_legendre<Real>(n + 1, t, w);
    std::vector<Real> g(n * n, Real(0)), phi(n);
    for (std::size_t k = 0; k < t.size(); ++k) {
        eval_orthonormal_legendre<Real>(h * t[k], phi);
        const Real wk = w[k] * h / 2; // d rho on (-h, h)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) g[i * n + j] += wk * phi[i] * phi[j];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) g[j * n + i] = g[i * n + j];
    return g;
}

// Cholesky of G - shift I succeeds iff shift < lambda_min(G).
inline bool shifted_positive_definite(const std::vector<quad>& g, std::size_t n, const quad& shift) {
    std::vector<quad> l(n * n, quad(0));
    for (std::size_t j = 0; j < n; ++j) {
        quad d = g[j * n + j] - shift;
        for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
        if (!(d > 0)) return false;
        l[j * n + j] = sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            quad s = g[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
            l[i * n + j] = s / l[j * n + j];
        }
    }
    return true;
}

// Smallest eigenvalue by spectrum slicing: geometric bisection on the shift.
inline quad lambda_min(const std::vector<quad>& g, std::size_t n) {
    quad hi = g[0];
    for (std::size_t i = 1; i < n; ++i) hi = std::min(hi, g[i * n + i]); // lambda_min <= min diag
    const quad floor = hi * quad(1e-30);
    quad lo = hi / 2;
    while (!shifted_positive_definite(g, n, lo)) {
        hi = lo;
        lo /= 2;
        if (lo < floor) return quad(0);
    }
    while (hi / lo - 1 > quad(1e-16)) {
        const quad mid = sqrt(lo * hi);
        if (shifted_positive_definite(g, n, mid))
            lo = mid;
        else
            hi = mid;
    }
    return sqrt(lo * hi);
}

} // namespace detail

/// Gram matrix G_Omega[i][j] = ∫_Omega phi_i phi_j d rho, accumulated in
/// quad precision and rounded to long double.
inline Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> subdomain_gram(const LegendreBasis& basis,
                                                                                 const Subdomain& omega) {
    const std::size_t n = basis.size();
    const auto g = detail::subdomain_gram_entries<detail::quad>(n, omega.sigma());
    Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<long double>(g[i * n + j]);
    return out;
}

/// Exact Remez constant R(P, L^2_rho(Omega), L^2_rho(D)) = 1 / sqrt(lambda_min(G_Omega)).
/// Returns +inf (with a warning on stderr) when G_Omega is numerically singular.
inline double remez_exact_l2(const LegendreBasis& basis, const Subdomain& omega) {
    if (omega.is_full()) return 1.0;
    const std::size_t n = basis.size();
    const auto g = detail::subdomain_gram_entries<detail::quad>(n, omega.sigma());
    const detail::quad lmin = detail::lambda_min(g, n);
    if (!(lmin > 0)) {
        std::cerr << "warning: remez_exact_l2: Gram matrix numerically singular (n = " << n
                  << ", sigma = " << omega.sigma() << ")\n";
        return std::numeric_limits<double>::infinity();
    }
    return static_cast<double>(1 / sqrt(lmin));
}

/// Overload taking a quadrature rule, matching the other oracle entry points.
/// G_Omega is polynomial, so the Gauss rule is chosen internally and `rule`
/// only has to be accurate enough for degree 2n-2.
inline double remez_exact_l2(const LegendreBasis& basis, const Subdomain& omega, const QuadratureRule& rule) {
    if (rule.exactness() < 2 * basis.size() - 2)
        throw std::invalid_argument("remez_exact_l2: quadrature order too low for the basis size");
    return remez_exact_l2(basis, omega);
}

} // namespace costwise
