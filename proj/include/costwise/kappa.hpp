#pragma once

#include "costwise/legendre.hpp"
#include "costwise/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace costwise {

namespace detail {

// w(x) K_Omega(x) at an interior point; throws where the measure vanishes.
inline double weighted_christoffel(const LegendreBasis& basis, const Measure& measure, const Subdomain& omega,
                                   double x) {
    const double v = measure.density_wrt_rho(x);
    if (!(v > 0.0))
        throw std::domain_error("kappa_w: " + measure.descriptor() + " vanishes inside the subdomain (kappa_w = inf)");
    if (!std::isfinite(v)) return 0.0;
    const double s = omega.half_width();
    return basis.christoffel(x / s) / s / v;
}

} // namespace detail

/// kappa_w = sup_{x in Omega} w(x) K_Omega(x).
///
/// The supremum is taken over a 20 n^2 point grid clustered like the
/// Chebyshev points of Omega, refined by golden-section search around the
/// best grid point, plus the one-sided limits at the two endpoints of Omega.
/// The result approximates the supremum from below.
inline double kappa_w(const LegendreBasis& basis, const Measure& measure, const Subdomain& omega) {
    const double h = omega.half_width();
    const Interval support = measure.support();
    if (support.lower > -h || support.upper < h)
        throw std::domain_error("kappa_w: support of " + measure.descriptor() + " does not cover the subdomain");

    const double n = static_cast<double>(basis.size());
    const auto f = [&](double x) { return detail::weighted_christoffel(basis, measure, omega, x); };

    // Endpoint limits. K_Omega is bounded on the closure, so an infinite
    // density sends w K_Omega to zero and a vanishing one sends it to infinity.
    double best = 0.0;
    for (double end : {-h, h}) {
        const double v = measure.density_wrt_rho(end);
        if (!(v > 0.0))
            throw std::domain_error("kappa_w: " + measure.descriptor() +
                                    " vanishes at the subdomain boundary (kappa_w = inf)");
        if (std::isfinite(v)) best = std::max(best, n * n / h / v);
    }

    const std::size_t grid = std::max<std::size_t>(64, static_cast<std::size_t>(20.0 * n * n));
    std::size_t arg = 0;
    double grid_best = -1.0;
    std::vector<double> xs(grid);
    for (std::size_t j = 0; j < grid; ++j) {
        xs[j] = h * std::cos(std::numbers::pi * (static_cast<double>(j) + 0.5) / static_cast<double>(grid));
        const double value = f(xs[j]);
        if (value > grid_best) {
            grid_best = value;
            arg = j;
        }
    }
    best = std::max(best, grid_best);

    // Golden-section search on the bracket around the grid argmax. xs is decreasing.
    double lo = arg + 1 < grid ? xs[arg + 1] : -h;
    double hi = arg > 0 ? xs[arg - 1] : h;
    const double limit = std::nextafter(h, 0.0);
    lo = std::max(lo, -limit);
    hi = std::min(hi, limit);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    double fa = f(a), fb = f(b);
    for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
        if (fa < fb) {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
    }
    return std::max({best, fa, fb});
}

} // namespace costwise
