#pragma once

#include "costwise/legendre.hpp"
#include "costwise/quadrature.hpp"
#include "costwise/rng.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace costwise {

/// ∫_{-1}^{1} (1-x^2)^beta dx = sqrt(pi) Gamma(beta+1) / Gamma(beta+3/2).
inline double jacobi_normalization(double beta) {
    if (!(beta > -1.0) || !std::isfinite(beta))
        throw std::domain_error("jacobi_normalization: beta must exceed -1 (integrability)");
    return std::exp(0.5 * std::log(std::numbers::pi) + std::lgamma(beta + 1.0) - std::lgamma(beta + 1.5));
}

enum class MeasureKind { uniform, chebyshev, jacobi, scaled_chebyshev, christoffel };

struct Interval {
    double lower = -1.0;
    double upper = 1.0;

    bool contains(double x) const noexcept { return x >= lower && x <= upper; }
    bool interior(double x) const noexcept { return x > lower && x < upper; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// A probability measure on (a subinterval of) (-1,1), absolutely continuous
/// with respect to the uniform measure rho (d rho = dx/2).
///
/// Densities `density_wrt_rho` are v = d mu / d rho. At endpoints where v
/// blows up they return +infinity; samplers never produce endpoints.
/// Immutable after construction.
class Measure {
public:
    static Measure uniform() { return Measure(MeasureKind::uniform, 0.0, 0, 2.0); }
    static Measure chebyshev() { return Measure(MeasureKind::chebyshev, 0.0, 0, std::numbers::pi); }

    /// d mu ∝ (1-x^2)^beta dx.
    static Measure jacobi(double beta) {
        return Measure(MeasureKind::jacobi, beta, 0, jacobi_normalization(beta));
    }

    /// Arcsine measure of (-(1-sigma), 1-sigma).
    static Measure scaled_chebyshev(double sigma) {
        if (!(sigma > 0.0 && sigma < 1.0))
            throw std::domain_error("scaled_chebyshev: sigma must lie in (0,1)");
        return Measure(MeasureKind::scaled_chebyshev, sigma, 0, (1.0 - sigma) * std::numbers::pi);
    }

    /// d mu = K_n(x)/n d rho.
    static Measure christoffel(std::size_t n) {
        if (n == 0) throw std::domain_error("christoffel measure: n must be positive");
        return Measure(MeasureKind::christoffel, 0.0, n, 2.0 * static_cast<double>(n));
    }

    /// Parses descriptors such as "uniform", "chebyshev", "jacobi:0.5",
    /// "scaled-chebyshev:0.01", "christoffel:10".
    static Measure parse(std::string_view text);

    MeasureKind kind() const noexcept { return kind_; }
    double beta() const noexcept { return kind_ == MeasureKind::jacobi ? parameter_ : 0.0; }
    double sigma() const noexcept { return kind_ == MeasureKind::scaled_chebyshev ? parameter_ : 0.0; }
    std::size_t christoffel_degree() const noexcept { return degree_; }

    /// Z such that the Lebesgue density is (unnormalized density) / Z.
    double normalization() const noexcept { return normalization_; }

    Interval support() const noexcept {
        if (kind_ == MeasureKind::scaled_chebyshev) return {-(1.0 - parameter_), 1.0 - parameter_};
        return {};
    }

    double density_wrt_rho(double x) const;
    double weight(double x) const;
    double cdf(double x) const;
    double sample_one(Stream& stream) const;
    std::vector<double> sample(std::size_t m, Stream& stream) const;

    /// Canonical text form; equal measures give identical strings.
    std::string descriptor() const;

    friend bool operator==(const Measure&, const Measure&) = default;

private:
    Measure(MeasureKind kind, double parameter, std::size_t degree, double normalization)
        : kind_(kind), parameter_(parameter), degree_(degree), normalization_(normalization) {}

    double draw(Stream& stream) const;

    MeasureKind kind_;
    double parameter_;
    std::size_t degree_;
    double normalization_;
};

namespace detail {

inline std::string format_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view text, std::string_view what) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw std::invalid_argument(std::string(what) + ": cannot parse number '" + std::string(text) + "'");
    return v;
}

// 1 - x^2 without cancellation near the endpoints.
inline double one_minus_sq(double x) { return (1.0 - x) * (1.0 + x); }

/// Inverse CDF of the symmetric Beta(a, a) law on t = (1+x)/2, restricted to
/// the lower half t <= 1/2 (the upper half follows by symmetry). The CDF is
/// tabulated at t = sin^2(pi u / 2) on a uniform u grid, so the nodes cluster
/// at the endpoint where the density is singular or flat. Each draw brackets
/// U in the table and then runs safeguarded Newton on the exact CDF.
class BetaInverseTable {
public:
    static constexpr std::size_t grid = 4096; // nodes over the whole interval

    explicit BetaInverseTable(double a) : a_(a), log_beta_(std::log(boost::math::beta(a, a))) {
        const std::size_t half = grid / 2;
        t_.resize(half + 1);
        f_.resize(half + 1);
        for (std::size_t k = 0; k <= half; ++k) {
            const double s = std::sin(0.5 * std::numbers::pi * 0.5 * static_cast<double>(k) / static_cast<double>(half));
            t_[k] = s * s;
            f_[k] = k == 0 ? 0.0 : boost::math::ibeta(a, a, t_[k]);
        }
        t_[half] = 0.5;
        f_[half] = 0.5;
    }

    /// t in (0, 1/2] with |I_t(a,a) - U| <= 1e-12 U, for U in (0, 1/2].
    double solve(double target) const {
        const std::size_t last = f_.size() - 1;
        std::size_t k = static_cast<std::size_t>(std::upper_bound(f_.begin(), f_.end(), target) - f_.begin());
        k = std::clamp<std::size_t>(k, 1, last) - 1;
        double lo = t_[k], hi = t_[k + 1];
        // Start from linear interpolation in the grid variable u.
        const double half = static_cast<double>(last);
        const double frac = (target - f_[k]) / (f_[k + 1] - f_[k]);
        const double u = 0.5 * (static_cast<double>(k) + frac) / half;
        const double s = std::sin(0.5 * std::numbers::pi * u);
        double t = std::clamp(s * s, lo, hi);
        const double tol = 1e-12 * target;
        for (int it = 0; it < 200; ++it) {
            const double r = boost::math::ibeta(a_, a_, t) - target;
            if (std::abs(r) <= tol) return t;
            (r < 0.0 ? lo : hi) = t;
            if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return t;
            const double dens = std::exp((a_ - 1.0) * std::log(t * (1.0 - t)) - log_beta_);
            double next = t - r / dens;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            t = next;
        }
        return t;
    }

private:
    double a_;
    double log_beta_;
    std::vector<double> t_;
    std::vector<double> f_;
};

/// Tables are built once per exponent and shared by every thread.
inline const BetaInverseTable& beta_inverse_table(double a) {
    static std::mutex mutex;
    static std::map<double, std::unique_ptr<const BetaInverseTable>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[a];
    if (!slot) slot = std::make_unique<const BetaInverseTable>(a);
    return *slot;
}

} // namespace detail

/// Draws from phi_i^2 d rho (i is 1-based) by rejection against the arcsine
/// law. The envelope |phi_i(x)| <= 2 / (sqrt(pi) (1-x^2)^{1/4}) bounds the
/// likelihood ratio by 2, so at least half of the proposals are accepted.
/// `proposals`, when given, is incremented once per proposal drawn.
inline double sample_orthonormal_square(std::size_t index, Stream& stream, std::size_t* proposals = nullptr) {
    if (index == 0) throw std::invalid_argument("sample_orthonormal_square: index is 1-based");
    std::vector<double> phi(index);
    for (;;) {
        if (proposals) ++*proposals;
        const double t = std::numbers::pi * stream.uniform_open();
        const double x = std::cos(t);
        eval_orthonormal_legendre<double>(x, phi);
        const double ratio = phi[index - 1] * phi[index - 1] * std::numbers::pi * std::sin(t) / 4.0;
        if (stream.uniform_open() <= ratio) return x;
    }
}

inline double Measure::density_wrt_rho(double x) const {
    if (!std::isfinite(x)) throw std::domain_error("density_wrt_rho: non-finite x");
    const Interval s = support();
    if (!s.contains(x)) return 0.0;
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
    case MeasureKind::uniform:
        return 1.0;
    case MeasureKind::chebyshev: {
        const double q = detail::one_minus_sq(x);
        return q > 0.0 ? 2.0 / (std::numbers::pi * std::sqrt(q)) : inf;
    }
    case MeasureKind::jacobi: {
        const double q = detail::one_minus_sq(x);
        if (q <= 0.0) return parameter_ < 0.0 ? inf : (parameter_ == 0.0 ? 2.0 / normalization_ : 0.0);
        return 2.0 * std::pow(q, parameter_) / normalization_;
    }
    case MeasureKind::scaled_chebyshev: {
        const double h = 1.0 - parameter_;
        const double y = x / h;
        const double q = detail::one_minus_sq(y);
        return q > 0.0 ? 2.0 / (h * std::numbers::pi * std::sqrt(q)) : inf;
    }
    case MeasureKind::christoffel:
        return LegendreBasis(degree_).christoffel(x) / static_cast<double>(degree_);
    }
    return 0.0;
}

inline double Measure::weight(double x) const {
    const double v = density_wrt_rho(x);
    if (!(v > 0.0) || !std::isfinite(v))
        throw std::domain_error("weight: x = " + detail::format_real(x) + " is not in the interior of the support of " +
                                descriptor());
    return 1.0 / v;
}

inline double Measure::cdf(double x) const {
    if (!std::isfinite(x)) throw std::domain_error("cdf: non-finite x");
    const Interval s = support();
    if (x <= s.lower) return 0.0;
    if (x >= s.upper) return 1.0;
    switch (kind_) {
    case MeasureKind::uniform:
        return 0.5 * (x + 1.0);
    case MeasureKind::chebyshev:
        return 1.0 - std::acos(x) / std::numbers::pi;
    case MeasureKind::scaled_chebyshev:
        return 1.0 - std::acos(x / (1.0 - parameter_)) / std::numbers::pi;
    case MeasureKind::jacobi: {
        const double a = parameter_ + 1.0;
        if (x <= 0.0) return boost::math::ibeta(a, a, 0.5 * (1.0 + x));
        return 1.0 - boost::math::ibeta(a, a, 0.5 * (1.0 - x));
    }
    case MeasureKind::christoffel: {
        // K_n/n is a polynomial of degree 2n-2; n-point Gauss is exact on [-1, x].
        std::vector<double> t, w;
        gauss_legendre<double>(degree_, t, w);
        const LegendreBasis basis(degree_);
        const double half = 0.5 * (x + 1.0);
        double sum = 0.0;
        for (std::size_t k = 0; k < t.size(); ++k) sum += w[k] * basis.christoffel(-1.0 + half * (t[k] + 1.0));
        return sum * half / (2.0 * static_cast<double>(degree_));
    }
    }
    return 0.0;
}

inline double Measure::sample_one(Stream& stream) const {
    // cos(pi u) rounds to +-1 for u within ~5e-9 of an endpoint; redraw so
    // every emitted point lies in the open support.
    const Interval s = support();
    for (;;) {
        const double x = draw(stream);
        if (s.interior(x)) return x;
    }
}

inline double Measure::draw(Stream& stream) const {
    switch (kind_) {
    case MeasureKind::uniform:
        return stream.uniform(-1.0, 1.0);
    case MeasureKind::chebyshev:
        return std::cos(std::numbers::pi * stream.uniform_open());
    case MeasureKind::scaled_chebyshev:
        return (1.0 - parameter_) * std::cos(std::numbers::pi * stream.uniform_open());
    case MeasureKind::jacobi: {
        const auto& table = detail::beta_inverse_table(parameter_ + 1.0);
        const double u = stream.uniform_open();
        // Invert on the nearer tail so points close to +1 keep full precision.
        if (u <= 0.5) return 2.0 * table.solve(u) - 1.0;
        return 1.0 - 2.0 * table.solve(1.0 - u);
    }
    case MeasureKind::christoffel: {
        const std::size_t index = stream.index(degree_) + 1;
        return sample_orthonormal_square(index, stream);
    }
    }
    return 0.0;
}

inline std::vector<double> Measure::sample(std::size_t m, Stream& stream) const {
    if (m == 0) throw std::invalid_argument("sample: m must be at least 1");
    std::vector<double> xs(m);
    for (double& x : xs) x = sample_one(stream);
    return xs;
}

inline std::string Measure::descriptor() const {
    switch (kind_) {
    case MeasureKind::uniform:
        return "uniform";
    case MeasureKind::chebyshev:
        return "chebyshev";
    case MeasureKind::jacobi:
        return "jacobi:" + detail::format_real(parameter_);
    case MeasureKind::scaled_chebyshev:
        return "scaled-chebyshev:" + detail::format_real(parameter_);
    case MeasureKind::christoffel:
        return "christoffel:" + std::to_string(degree_);
    }
    return {};
}

inline Measure Measure::parse(std::string_view text) {
    const auto colon = text.find(':');
    const std::string_view name = text.substr(0, colon);
    const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    const auto need_arg = [&]() {
        if (arg.empty()) throw std::invalid_argument("measure '" + std::string(name) + "' needs a parameter");
        return arg;
    };
    if (name == "uniform") return uniform();
    if (name == "chebyshev") return chebyshev();
    if (name == "jacobi") return jacobi(detail::parse_real(need_arg(), "jacobi"));
    if (name == "scaled-chebyshev") return scaled_chebyshev(detail::parse_real(need_arg(), "scaled-chebyshev"));
    if (name == "christoffel") {
        const double n = detail::parse_real(need_arg(), "christoffel");
        if (!(n >= 1.0) || n != std::floor(n)) throw std::invalid_argument("christoffel: n must be a positive integer");
        return christoffel(static_cast<std::size_t>(n));
    }
    throw std::invalid_argument("unknown measure '" + std::string(text) + "'");
}

inline double density_wrt_rho(const Measure& measure, double x) { return measure.density_wrt_rho(x); }
inline double weight(const Measure& measure, double x) { return measure.weight(x); }
inline std::vector<double> sample(const Measure& measure, std::size_t m, Stream& stream) {
    return measure.sample(m, stream);
}

} // namespace costwise
