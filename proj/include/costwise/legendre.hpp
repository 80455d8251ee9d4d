#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace costwise {

/// Writes phi_1(x), ..., phi_n(x) into `out`, where phi_i = sqrt(2i-1) P_{i-1}
/// is orthonormal with respect to dx/2 on (-1,1). The recurrence runs directly
/// on the normalized values so nothing overflows at large degree.
template <class Real>
void eval_orthonormal_legendre(Real x, std::span<Real> out) {
    const std::size_t n = out.size();
    if (n == 0) return;
    out[0] = 1;
    if (n == 1) return;
    using std::sqrt;
    out[1] = sqrt(Real(3)) * x;
    for (std::size_t k = 2; k < n; ++k) {
        // phi_{k+1} = sqrt(2k+1)/k * (sqrt(2k-1) x phi_k - (k-1)/sqrt(2k-3) phi_{k-1})
        const Real kk = static_cast<Real>(k);
        const Real a = sqrt((2 * kk + 1) * (2 * kk - 1)) / kk;
        const Real b = (kk - 1) / kk * sqrt((2 * kk + 1) / (2 * kk - 3));
        out[k] = a * x * out[k - 1] - b * out[k - 2];
    }
}

/// Orthonormal Legendre system spanning polynomials of degree < n in L^2
/// of the uniform probability measure on (-1,1).
class LegendreBasis {
public:
    explicit LegendreBasis(std::size_t n) : n_(n) {
        if (n == 0) throw std::invalid_argument("LegendreBasis: dimension must be positive");
    }

    std::size_t size() const noexcept { return n_; }

    void eval(double x, std::span<double> out) const {
        if (out.size() != n_) throw std::invalid_argument("LegendreBasis::eval: output size mismatch");
        eval_orthonormal_legendre<double>(x, out);
    }

    std::vector<double> operator()(double x) const {
        std::vector<double> v(n_);
        eval_orthonormal_legendre<double>(x, v);
        return v;
    }

    /// K(x) = sum_i phi_i(x)^2.
    double christoffel(double x) const {
        // Same recurrence as eval_orthonormal_legendre, accumulated without storage.
        double prev = 1.0, sum = 1.0;
        if (n_ == 1) return sum;
        double cur = std::sqrt(3.0) * x;
        sum += cur * cur;
        for (std::size_t k = 2; k < n_; ++k) {
            const double kk = static_cast<double>(k);
            const double a = std::sqrt((2 * kk + 1) * (2 * kk - 1)) / kk;
            const double b = (kk - 1) / kk * std::sqrt((2 * kk + 1) / (2 * kk - 3));
            const double next = a * x * cur - b * prev;
            prev = cur;
            cur = next;
            sum += cur * cur;
        }
        return sum;
    }

    friend bool operator==(const LegendreBasis&, const LegendreBasis&) = default;

private:
    std::size_t n_;
};

inline std::vector<double> eval_basis(const LegendreBasis& basis, double x) {
    if (!std::isfinite(x)) throw std::domain_error("eval_basis: non-finite x");
    return basis(x);
}

inline double christoffel(const LegendreBasis& basis, double x) {
    if (!std::isfinite(x)) throw std::domain_error("christoffel: non-finite x");
    return basis.christoffel(x);
}

/// The symmetric subinterval Omega = (-(1-sigma), 1-sigma).
class Subdomain {
public:
    Subdomain() = default;
    explicit Subdomain(double sigma) : sigma_(sigma) {
        if (!(sigma >= 0.0 && sigma < 1.0))
            throw std::domain_error("Subdomain: sigma must lie in [0,1), got " + std::to_string(sigma));
    }

    static Subdomain full() { return Subdomain(0.0); }

    double sigma() const noexcept { return sigma_; }
    double half_width() const noexcept { return 1.0 - sigma_; }
    bool contains(double x) const noexcept { return std::abs(x) < half_width(); }
    bool is_full() const noexcept { return sigma_ == 0.0; }

private:
    double sigma_ = 0.0;
};

/// Christoffel function of P_{n-1} as a subspace of L^2 over Omega (uniform
/// measure restricted, not renormalized): K_Omega(x) = K(x/(1-sigma)) / (1-sigma).
inline double christoffel_scaled(const LegendreBasis& basis, const Subdomain& omega, double x) {
    if (!std::isfinite(x) || std::abs(x) >= omega.half_width())
        throw std::domain_error("christoffel_scaled: x outside the open subdomain");
    const double s = omega.half_width();
    return basis.christoffel(x / s) / s;
}

/// Bernstein-ellipse parameter (1 + sqrt(2 sigma - sigma^2)) / (1 - sigma).
inline double rho_sigma(double sigma) {
    if (!(sigma >= 0.0 && sigma < 1.0))
        throw std::domain_error("rho_sigma: sigma must lie in [0,1)");
    return (1.0 + std::sqrt(sigma * (2.0 - sigma))) / (1.0 - sigma);
}

/// n * rho_sigma^(n-1): bounds the L^2(Omega) -> L^2(D) and L^inf(Omega) -> L^2(D)
/// Remez constants of P_{n-1}.
inline double remez_bound(const LegendreBasis& basis, const Subdomain& omega) {
    const double n = static_cast<double>(basis.size());
    return n * std::pow(rho_sigma(omega.sigma()), n - 1.0);
}

/// Largest sigma with (1 + 4 sqrt(sigma))^n = r, i.e. sigma = (r^{1/n} - 1)^2 / 16.
/// This keeps rho_sigma^n <= r, valid once n >= log(r) / log(1 + sqrt 8).
inline double sigma_for_r(std::size_t n, double r) {
    if (n == 0) throw std::domain_error("sigma_for_r: n must be positive");
    if (!(r > 1.0) || !std::isfinite(r)) throw std::domain_error("sigma_for_r: r must exceed 1");
    const double threshold = std::log(r) / std::log(1.0 + std::sqrt(8.0));
    if (static_cast<double>(n) < threshold)
        throw std::domain_error("sigma_for_r: n = " + std::to_string(n) + " is below log(r)/log(1+sqrt 8) = " +
                                std::to_string(threshold));
    const double root = std::expm1(std::log(r) / static_cast<double>(n));
    return root * root / 16.0;
}

} // namespace costwise
