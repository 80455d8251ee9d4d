#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace costwise {

/// Evaluation cost c(x) = scale * (1 - x^2)^(-alpha) on (-1,1).
struct CostModel {
    double alpha = 0.0;
    double scale = 1.0;

    CostModel() = default;
    explicit CostModel(double alpha_, double scale_ = 1.0) : alpha(alpha_), scale(scale_) {
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::domain_error("CostModel: alpha must be >= 0");
        if (!(scale > 0.0) || !std::isfinite(scale)) throw std::domain_error("CostModel: scale must be > 0");
    }

    double operator()(double x) const {
        if (alpha == 0.0) return scale;
        const double q = (1.0 - x) * (1.0 + x);
        if (q <= 0.0) return std::numeric_limits<double>::infinity();
        return scale * std::pow(q, -alpha);
    }

    friend bool operator==(const CostModel&, const CostModel&) = default;
};

} // namespace costwise
