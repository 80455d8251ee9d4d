#pragma once

#include "costwise/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace costwise {

namespace detail {

// (P_n(x), P_{n-1}(x)) for the classical Legendre polynomials.
template <class Real>
std::pair<Real, Real> legendre_pair(std::size_t n, Real x) {
    Real prev = 1, cur = x;
    if (n == 0) return {prev, Real(0)};
    for (std::size_t k = 2; k <= n; ++k) {
        const Real kk = static_cast<Real>(k);
        const Real next = ((2 * kk - 1) * x * cur - (kk - 1) * prev) / kk;
        prev = cur;
        cur = next;
    }
    return {cur, prev};
}

} // namespace detail

/// Gauss-Legendre nodes and weights on [-1,1] (weights sum to 2), computed by
/// Newton iteration on the three-term recurrence.
template <class Real = double>
void gauss_legendre(std::size_t count, std::vector<Real>& nodes, std::vector<Real>& weights) {
    if (count == 0) throw std::invalid_argument("gauss_legendre: need at least one node");
    nodes.assign(count, Real(0));
    weights.assign(count, Real(0));
    using std::abs;
    const Real n = static_cast<Real>(count);
    const auto derivative = [&](Real x) {
        const auto [p, q] = detail::legendre_pair(count, x);
        return std::pair<Real, Real>{p, n * (x * p - q) / (x * x - 1)};
    };
    for (std::size_t i = 0; i < (count + 1) / 2; ++i) {
        // double-precision guess, Newton finishes in Real
        Real x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(count) + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [p, dp] = derivative(x);
            const Real dx = p / dp;
            x -= dx;
            if (abs(dx) <= 4 * std::numeric_limits<Real>::epsilon()) break;
        }
        const Real dp = derivative(x).second;
        const Real w = 2 / ((1 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[count - 1 - i] = x;
        weights[i] = w;
        weights[count - 1 - i] = w;
    }
    if (count % 2 == 1) nodes[count / 2] = 0;
}

/// Composite Gauss-Legendre rule on [lower, upper] for the measure dx/2, i.e.
/// the uniform probability measure on (-1,1) restricted to the interval.
/// On the full interval the weights sum to 1.
template <class Real = double>
class BasicQuadratureRule {
public:
    static BasicQuadratureRule composite(std::size_t nodes_per_panel, std::size_t panels,
                                         Real lower = Real(-1), Real upper = Real(1)) {
        if (panels == 0) throw std::invalid_argument("quadrature rule needs at least one panel");
        if (!(lower < upper)) throw std::invalid_argument("quadrature interval is empty");
        BasicQuadratureRule rule;
        rule.nodes_per_panel_ = nodes_per_panel;
        rule.panels_ = panels;
        rule.lower_ = lower;
        rule.upper_ = upper;
        std::vector<Real> t, w;
        gauss_legendre<Real>(nodes_per_panel, t, w);
        const Real h = (upper - lower) / static_cast<Real>(panels);
        rule.nodes_.reserve(nodes_per_panel * panels);
        rule.weights_.reserve(nodes_per_panel * panels);
        for (std::size_t p = 0; p < panels; ++p) {
            const Real a = lower + h * static_cast<Real>(p);
            for (std::size_t k = 0; k < nodes_per_panel; ++k) {
                rule.nodes_.push_back(a + h * (t[k] + 1) / 2);
                rule.weights_.push_back(w[k] * h / 4);
            }
        }
        return rule;
    }

    static BasicQuadratureRule gauss(std::size_t order) { return composite(order, 1); }

    /// Composite rule on (-1,1) with panels graded geometrically toward both
    /// endpoints: breakpoints +-(1 - 2^-k), k = 0..levels. Suited to integrands
    /// with algebraic endpoint singularities such as (1-x^2)^(-0.4). Depth is
    /// capped at 40 so nodes stay distinguishable from +-1.
    static BasicQuadratureRule graded(std::size_t nodes_per_panel, std::size_t levels = 40) {
        if (levels == 0 || levels > 40) throw std::invalid_argument("graded quadrature needs 1 to 40 levels");
        BasicQuadratureRule rule;
        rule.nodes_per_panel_ = nodes_per_panel;
        rule.panels_ = 2 * (levels + 1);
        rule.levels_ = levels;
        std::vector<Real> t, w;
        gauss_legendre<Real>(nodes_per_panel, t, w);
        std::vector<Real> xs, ws; // ascending in (0,1)
        for (std::size_t p = 0; p <= levels; ++p) {
            // Panel p covers distances d to +1 in [2^-(p+1), 2^-p]; the last one [0, 2^-p].
            const Real far = std::ldexp(Real(1), -static_cast<int>(p));
            const Real near = p == levels ? Real(0) : far / 2;
            for (std::size_t k = 0; k < nodes_per_panel; ++k) {
                xs.push_back(1 - (near + (far - near) * (1 - t[k]) / 2));
                if (!(xs.back() < 1))
                    throw std::invalid_argument("graded quadrature: nodes reach the endpoint, use fewer levels or nodes");
                ws.push_back(w[k] * (far - near) / 4);
            }
        }
        for (std::size_t k = xs.size(); k-- > 0;) {
            rule.nodes_.push_back(-xs[k]);
            rule.weights_.push_back(ws[k]);
        }
        rule.nodes_.insert(rule.nodes_.end(), xs.begin(), xs.end());
        rule.weights_.insert(rule.weights_.end(), ws.begin(), ws.end());
        return rule;
    }

    /// 64 nodes per panel, 8 panels.
    static BasicQuadratureRule standard() { return composite(64, 8); }

    const std::vector<Real>& nodes() const noexcept { return nodes_; }
    const std::vector<Real>& weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t nodes_per_panel() const noexcept { return nodes_per_panel_; }
    std::size_t panels() const noexcept { return panels_; }
    Real lower() const noexcept { return lower_; }
    Real upper() const noexcept { return upper_; }

    /// Polynomials up to this degree are integrated exactly.
    std::size_t exactness() const noexcept { return 2 * nodes_per_panel_ - 1; }

    /// Composite rules double their panel count; graded rules double the
    /// per-panel order.
    BasicQuadratureRule refined() const {
        if (levels_ > 0) return graded(2 * nodes_per_panel_, levels_);
        return composite(nodes_per_panel_, 2 * panels_, lower_, upper_);
    }

    bool is_graded() const noexcept { return levels_ > 0; }

    template <class F>
    Real integrate(F&& f) const {
        Real sum = 0;
        for (std::size_t k = 0; k < nodes_.size(); ++k) sum += weights_[k] * f(nodes_[k]);
        return sum;
    }

private:
    BasicQuadratureRule() = default;

    std::vector<Real> nodes_;
    std::vector<Real> weights_;
    std::size_t nodes_per_panel_ = 0;
    std::size_t panels_ = 0;
    std::size_t levels_ = 0;
    Real lower_ = -1;
    Real upper_ = 1;
};

using QuadratureRule = BasicQuadratureRule<double>;

/// Integrates f against dx/2 on the rule's interval, doubling the panel count
/// until two successive results agree to `rel_tol` (relative to max(1,|I|)).
template <class F>
double integrate_converged(F&& f, QuadratureRule rule, double rel_tol = 1e-12, int max_doublings = 12) {
    double previous = rule.integrate(f);
    for (int d = 0; d < max_doublings; ++d) {
        rule = rule.refined();
        const double current = rule.integrate(f);
        if (std::abs(current - previous) <= rel_tol * std::max(1.0, std::abs(current))) return current;
        previous = current;
    }
    throw numerical_error("quadrature did not converge after " + std::to_string(max_doublings) +
                          " panel doublings");
}

} // namespace costwise
