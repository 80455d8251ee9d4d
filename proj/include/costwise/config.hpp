#pragma once

#include "costwise/error.hpp"
#include "costwise/legendre.hpp"
#include "costwise/measures.hpp"
#include "costwise/strategies.hpp"

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace costwise {

enum class ExperimentKind { convergence, theta, budget };

inline std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::convergence:
        return "convergence";
    case ExperimentKind::theta:
        return "theta";
    case ExperimentKind::budget:
        return "budget";
    }
    return "";
}

inline ExperimentKind parse_experiment_kind(std::string_view text) {
    if (text == "convergence") return ExperimentKind::convergence;
    if (text == "theta") return ExperimentKind::theta;
    if (text == "budget") return ExperimentKind::budget;
    throw config_error("unknown experiment kind '" + std::string(text) + "'");
}

/// m = ceil(coefficient * n^exponent).
struct MRule {
    double coefficient = 1.0;
    double exponent = 1.0;

    std::size_t operator()(std::size_t n) const {
        const double m = std::ceil(coefficient * std::pow(static_cast<double>(n), exponent));
        if (!(m >= 1.0) || !std::isfinite(m)) throw config_error("m_rule yields no valid sample count");
        return static_cast<std::size_t>(m);
    }
};

/// Sampling strategies, by configuration id:
///   "jacobi-alpha-minus-one"  d mu ∝ (1-x^2)^(alpha-1) dx
///   "strategy-one"            Jacobi with the hierarchical exponent
///   "strategy-two"            arcsine measure on the shrunken interval
///   "christoffel"             K_n/n d rho
///   "uniform", "chebyshev"
///   "measure:<descriptor>"    any descriptor accepted by Measure::parse
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::convergence;
    std::string id = "experiment";
    double alpha = 1.5;
    double delta = default_delta;
    std::string strategy = "jacobi-alpha-minus-one";
    std::vector<std::size_t> n;
    std::optional<MRule> m_rule;
    std::size_t trials = 50;
    double epsilon = 0.1;
    double theta = 10.0;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::size_t quadrature_margin = 16;
    std::size_t grid_size = 10000;
    std::string output;
    std::size_t m_step = 50;
    std::size_t m_cap = 200000;
    std::optional<double> sigma;
    double multiplier = 8.0;

    CostModel cost() const { return CostModel(alpha); }

    Measure measure(std::size_t n_value) const {
        if (strategy == "jacobi-alpha-minus-one") return Measure::jacobi(alpha - 1.0);
        if (strategy == "strategy-one") return strategy_one(alpha, delta);
        if (strategy == "strategy-two")
            return sigma ? Measure::scaled_chebyshev(*sigma) : strategy_two(n_value);
        if (strategy == "christoffel") return christoffel_sampling_measure(n_value);
        if (strategy == "uniform") return Measure::uniform();
        if (strategy == "chebyshev") return Measure::chebyshev();
        if (strategy.starts_with("measure:")) return Measure::parse(std::string_view(strategy).substr(8));
        throw config_error("unknown strategy '" + strategy + "'");
    }

    Subdomain subdomain(const Measure& mu, std::size_t n_value) const {
        if (sigma) return Subdomain(*sigma);
        return analysis_subdomain(mu, n_value);
    }

    std::size_t m_for(std::size_t n_value) const {
        if (!m_rule) throw config_error("m_rule is required for " + std::string(to_string(kind)));
        return (*m_rule)(n_value);
    }

    /// Predicted exponent p in C_exp ~ n^p log(3n/eps).
    double scaling_exponent() const {
        if (strategy == "strategy-one" && alpha >= 0.5) return 2.0 * (alpha + delta);
        return std::max(1.0, 2.0 * alpha);
    }

    /// Throws config_error on any inconsistency.
    void validate() const;
};

inline std::vector<std::size_t> default_n_grid(ExperimentKind kind) {
    std::vector<std::size_t> grid;
    switch (kind) {
    case ExperimentKind::convergence:
        for (std::size_t n = 4; n <= 30; n += 2) grid.push_back(n);
        break;
    case ExperimentKind::theta:
        for (std::size_t n = 4; n <= 24; n += 4) grid.push_back(n);
        break;
    case ExperimentKind::budget:
        for (std::size_t n = 4; n <= 64; n *= 2) grid.push_back(n);
        break;
    }
    return grid;
}

inline void ExperimentConfig::validate() const {
    if (id.empty()) throw config_error("id must not be empty");
    if (n.empty()) throw config_error("n list is empty");
    for (std::size_t k = 0; k < n.size(); ++k) {
        if (n[k] == 0) throw config_error("n values must be positive");
        if (k > 0 && n[k] <= n[k - 1]) throw config_error("n list must be strictly increasing");
    }
    if (trials < 1) throw config_error("trials must be at least 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw config_error("alpha must be >= 0");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw config_error("epsilon must lie in (0,1)");
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw config_error("noise amplitude must be >= 0");
    if (!(multiplier > 0.0)) throw config_error("multiplier must be positive");
    if (grid_size < 1000) throw config_error("grid_size must be at least 1000");
    if (sigma && !(*sigma >= 0.0 && *sigma < 1.0)) throw config_error("sigma must lie in [0,1)");
    if (kind == ExperimentKind::theta) {
        if (!(theta > 1.0)) throw config_error("theta must exceed 1");
        if (m_step < 1) throw config_error("m_step must be at least 1");
    }
    if (m_rule || kind == ExperimentKind::convergence) {
        for (std::size_t nv : n) {
            const std::size_t m = m_for(nv);
            if (m < nv)
                throw config_error("m_rule gives m = " + std::to_string(m) + " < n = " + std::to_string(nv));
        }
    }
    // Surface bad strategy parameters as configuration errors.
    try {
        for (std::size_t nv : n) (void)measure(nv);
    } catch (const config_error&) {
        throw;
    } catch (const std::exception& e) {
        throw config_error(std::string("strategy '") + strategy + "': " + e.what());
    }
}

namespace detail {

inline std::vector<std::size_t> parse_n_list(const nlohmann::json& j) {
    std::vector<std::size_t> out;
    if (j.is_array()) {
        for (const auto& v : j) {
            if (!v.is_number_integer() || v.get<long long>() <= 0) throw config_error("n entries must be positive integers");
            out.push_back(v.get<std::size_t>());
        }
        return out;
    }
    if (j.is_object()) {
        const long long from = j.at("from").get<long long>();
        const long long to = j.at("to").get<long long>();
        const long long step = j.value("step", 1LL);
        if (from <= 0 || to < from || step <= 0) throw config_error("n range needs 0 < from <= to and step > 0");
        for (long long v = from; v <= to; v += step) out.push_back(static_cast<std::size_t>(v));
        return out;
    }
    throw config_error("n must be a list or a {from, to, step} range");
}

template <class T>
T non_negative_integer(const nlohmann::json& j, const char* key) {
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw config_error(std::string(key) + " must be a non-negative integer");
    return j.get<T>();
}

} // namespace detail

/// Parses a configuration document. `expected`, when given, is the kind
/// implied by the CLI subcommand; a conflicting "kind" field is an error.
inline ExperimentConfig parse_config(const nlohmann::json& j, std::optional<ExperimentKind> expected = {}) {
    static const std::set<std::string> known = {
        "kind",  "id",    "alpha",  "delta", "strategy",          "n",         "m_rule", "trials",
        "epsilon", "theta", "noise", "seed", "quadrature_margin", "grid_size", "output", "m_step",
        "m_cap", "sigma", "multiplier"};
    if (!j.is_object()) throw config_error("configuration must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known.contains(key)) throw config_error("unknown configuration key '" + key + "'");

    ExperimentConfig c;
    try {
        if (j.contains("kind")) c.kind = parse_experiment_kind(j.at("kind").get<std::string>());
        else if (expected) c.kind = *expected;
        else throw config_error("configuration has no 'kind'");
        if (expected && c.kind != *expected)
            throw config_error("configuration kind '" + std::string(to_string(c.kind)) + "' does not match command '" +
                               std::string(to_string(*expected)) + "'");
        c.id = j.value("id", std::string(to_string(c.kind)));
        c.alpha = j.value("alpha", c.alpha);
        c.delta = j.value("delta", c.delta);
        c.strategy = j.value("strategy", c.strategy);
        c.n = j.contains("n") ? detail::parse_n_list(j.at("n")) : default_n_grid(c.kind);
        if (j.contains("m_rule")) {
            const auto& r = j.at("m_rule");
            c.m_rule = MRule{r.at("coefficient").get<double>(), r.at("exponent").get<double>()};
        }
        if (j.contains("trials")) c.trials = detail::non_negative_integer<std::size_t>(j.at("trials"), "trials");
        c.epsilon = j.value("epsilon", c.epsilon);
        c.theta = j.value("theta", c.theta);
        c.noise = j.value("noise", c.noise);
        if (j.contains("seed")) c.seed = detail::non_negative_integer<std::uint64_t>(j.at("seed"), "seed");
        if (j.contains("quadrature_margin"))
            c.quadrature_margin = detail::non_negative_integer<std::size_t>(j.at("quadrature_margin"), "quadrature_margin");
        if (j.contains("grid_size")) c.grid_size = detail::non_negative_integer<std::size_t>(j.at("grid_size"), "grid_size");
        c.output = j.value("output", c.output);
        if (j.contains("m_step")) c.m_step = detail::non_negative_integer<std::size_t>(j.at("m_step"), "m_step");
        if (j.contains("m_cap")) c.m_cap = detail::non_negative_integer<std::size_t>(j.at("m_cap"), "m_cap");
        if (j.contains("sigma")) c.sigma = j.at("sigma").get<double>();
        c.multiplier = j.value("multiplier", c.multiplier);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("configuration: ") + e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path, std::optional<ExperimentKind> expected = {}) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open configuration file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("'" + path + "': " + e.what());
    }
    return parse_config(j, expected);
}

} // namespace costwise
