#pragma once

#include "costwise/cost.hpp"
#include "costwise/error.hpp"
#include "costwise/kappa.hpp"
#include "costwise/legendre.hpp"
#include "costwise/measures.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace costwise {

/// Whether ∫ c d mu < inf, decided from the endpoint exponents alone.
/// Measures with full support behave like (1-x^2)^beta at +-1 with
/// beta = -1/2 (Chebyshev), 0 (uniform, Christoffel) or the Jacobi exponent;
/// the integral is finite iff beta - alpha > -1.
inline bool cost_integrable(const Measure& measure, const CostModel& cost) {
    if (cost.alpha == 0.0) return true;
    switch (measure.kind()) {
    case MeasureKind::scaled_chebyshev:
        return true;
    case MeasureKind::chebyshev:
        return -0.5 - cost.alpha > -1.0;
    case MeasureKind::uniform:
    case MeasureKind::christoffel:
        return -cost.alpha > -1.0;
    case MeasureKind::jacobi:
        return measure.beta() - cost.alpha > -1.0;
    }
    return false;
}

/// Endpoint exponent beta of the density near +-1 (see cost_integrable).
inline double endpoint_exponent(const Measure& measure) {
    switch (measure.kind()) {
    case MeasureKind::chebyshev:
        return -0.5;
    case MeasureKind::jacobi:
        return measure.beta();
    default:
        return 0.0;
    }
}

/// ∫ c d mu, or +inf when c is not mu-integrable.
///
/// Computed by tanh-sinh quadrature in theta with x = s cos(theta), where s is
/// the half-width of the support. The endpoint singularities of both the
/// density and the cost become algebraic singularities in sin(theta), which
/// tanh-sinh resolves; 1 - x^2 is formed as (1 - s^2) + s^2 sin^2(theta) from
/// the distance to the nearest endpoint, so it never cancels.
inline double cost_integral(const Measure& measure, const CostModel& cost) {
    if (cost.alpha == 0.0) return cost.scale;
    if (!cost_integrable(measure, cost)) return std::numeric_limits<double>::infinity();

    const double s = measure.support().upper;
    const double alpha = cost.alpha;
    const std::size_t n = measure.christoffel_degree();
    const LegendreBasis basis(std::max<std::size_t>(n, 1));
    const double pi = std::numbers::pi;

    // z in (-1,1) maps to theta = pi (z+1)/2; zc carries the distance to the nearest end.
    const auto integrand = [&](double z, double zc) -> double {
        const double d = std::abs(zc);
        const double sn = std::sin(0.5 * pi * d);
        double cs = std::cos(0.5 * pi * d);
        if (z > 0.0) cs = -cs;
        const double x = s * cs;
        double value = 0.0;
        switch (measure.kind()) {
        case MeasureKind::chebyshev:
            value = std::pow(sn, -2.0 * alpha) / pi;
            break;
        case MeasureKind::scaled_chebyshev: {
            const double q = (1.0 - s) * (1.0 + s) + s * s * sn * sn;
            value = std::pow(q, -alpha) / pi;
            break;
        }
        case MeasureKind::uniform:
            value = 0.5 * std::pow(sn, 1.0 - 2.0 * alpha);
            break;
        case MeasureKind::jacobi:
            value = std::pow(sn, 2.0 * measure.beta() + 1.0 - 2.0 * alpha) / measure.normalization();
            break;
        case MeasureKind::christoffel:
            value = basis.christoffel(x) * std::pow(sn, 1.0 - 2.0 * alpha) / (2.0 * static_cast<double>(n));
            break;
        }
        return 0.5 * pi * value;
    };

    boost::math::quadrature::tanh_sinh<double> integrator;
    double error = 0.0, l1 = 0.0;
    const double value = integrator.integrate(integrand, 1e-12, &error, &l1);
    if (!std::isfinite(value) || error > 1e-8 * std::abs(value))
        throw numerical_error("cost_integral: quadrature for " + measure.descriptor() +
                              " did not converge (error estimate " + std::to_string(error) + ")");
    return cost.scale * value;
}

/// C_exp = m ∫ c d mu (+inf when divergent).
inline double expected_cost(const Measure& measure, const CostModel& cost, std::size_t m) {
    return static_cast<double>(m) * cost_integral(measure, cost);
}

/// d mu = K_n / n d rho; for n = 1 this is the uniform measure.
inline Measure christoffel_sampling_measure(std::size_t n) {
    if (n == 0) throw std::domain_error("christoffel_sampling_measure: n must be positive");
    return n == 1 ? Measure::uniform() : Measure::christoffel(n);
}

inline constexpr double default_delta = 0.1;

/// Jacobi exponent used by strategy one.
inline double strategy_one_beta(double alpha, double delta = default_delta) {
    if (!(alpha >= 0.0)) throw std::domain_error("strategy_one: alpha must be >= 0");
    if (alpha < 0.5) return -0.5;
    if (!(delta > 0.0))
        throw std::domain_error("strategy_one: delta must be > 0 when alpha >= 1/2 (expected cost would diverge)");
    return alpha - 1.0 + delta;
}

/// Hierarchical strategy: d mu ∝ (1-x^2)^beta dx with beta = -1/2 for
/// alpha < 1/2 and beta = alpha - 1 + delta otherwise. Independent of n.
inline Measure strategy_one(double alpha, double delta = default_delta) {
    return Measure::jacobi(strategy_one_beta(alpha, delta));
}

/// sigma(n) = (2^{1/n} - 1)^2 / 16.
inline double strategy_two_sigma(std::size_t n) { return sigma_for_r(n, 2.0); }

/// Cost-agnostic strategy: arcsine measure on (-(1-sigma(n)), 1-sigma(n)).
inline Measure strategy_two(std::size_t n) { return Measure::scaled_chebyshev(strategy_two_sigma(n)); }

/// The subdomain used to analyse `measure` at dimension n: the measure's own
/// support for scaled Chebyshev, sigma(n) for Jacobi measures with positive
/// exponent (they vanish at +-1), and the full interval otherwise.
inline Subdomain analysis_subdomain(const Measure& measure, std::size_t n, double r = 2.0) {
    switch (measure.kind()) {
    case MeasureKind::scaled_chebyshev:
        return Subdomain(measure.sigma());
    case MeasureKind::jacobi:
        return measure.beta() > 0.0 ? Subdomain(sigma_for_r(n, r)) : Subdomain::full();
    default:
        return Subdomain::full();
    }
}

struct BudgetPlan {
    Measure measure = Measure::uniform();
    std::size_t n = 0;
    std::size_t m = 0;
    double expected_cost = 0.0; // +inf when divergent
    double kappa_w_value = 0.0;
    double cost_bound = 0.0;    // ∫ (c/w) d rho * sup_Omega w K_Omega
    double epsilon = 0.0;
    double sigma = 0.0;
    double remez_r = 2.0;       // target r: rho_sigma^n <= r
    double rho_sigma_pow_n = 1.0;
    double remez_bound = 1.0;   // n rho_sigma^{n-1}
    double multiplier = 8.0;
};

/// m = ceil(multiplier * kappa_w * log(3n/epsilon)) and the resulting
/// expected cost.
inline BudgetPlan plan_budget(const LegendreBasis& basis, const Measure& measure, const Subdomain& omega,
                              const CostModel& cost, double epsilon, double multiplier = 8.0,
                              double remez_r = 2.0) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::domain_error("plan_budget: epsilon must lie in (0,1)");
    if (!(multiplier > 0.0)) throw std::domain_error("plan_budget: multiplier must be positive");
    BudgetPlan plan;
    plan.measure = measure;
    plan.n = basis.size();
    plan.epsilon = epsilon;
    plan.sigma = omega.sigma();
    plan.remez_r = remez_r;
    plan.multiplier = multiplier;
    plan.kappa_w_value = kappa_w(basis, measure, omega);
    if (!std::isfinite(plan.kappa_w_value)) throw std::domain_error("plan_budget: kappa_w is infinite");
    const double n = static_cast<double>(plan.n);
    plan.m = static_cast<std::size_t>(std::ceil(multiplier * plan.kappa_w_value * std::log(3.0 * n / epsilon)));
    plan.m = std::max<std::size_t>(plan.m, 1);
    const double integral = cost_integral(measure, cost);
    plan.expected_cost = static_cast<double>(plan.m) * integral;
    plan.cost_bound = integral * plan.kappa_w_value;
    const double rho = rho_sigma(omega.sigma());
    plan.rho_sigma_pow_n = std::pow(rho, n);
    plan.remez_bound = remez_bound(basis, omega);
    return plan;
}

} // namespace costwise
