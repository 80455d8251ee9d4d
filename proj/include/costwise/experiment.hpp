#pragma once

#include "costwise/config.hpp"
#include "costwise/cost.hpp"
#include "costwise/csv.hpp"
#include "costwise/error.hpp"
#include "costwise/legendre.hpp"
#include "costwise/measures.hpp"
#include "costwise/oracle.hpp"
#include "costwise/rng.hpp"
#include "costwise/strategies.hpp"
#include "costwise/wls.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace costwise {

/// Worker count: COSTWISE_JOBS if set, else `requested`, else the hardware
/// concurrency. Always at least 1.
inline std::size_t resolve_jobs(std::size_t requested = 0) {
    if (const char* env = std::getenv("COSTWISE_JOBS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1) throw config_error("COSTWISE_JOBS must be a positive integer");
        return static_cast<std::size_t>(v);
    }
    if (requested > 0) return requested;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) on `jobs` threads. The first exception
/// thrown by any task is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t count, std::size_t jobs, Body&& body) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// The regression target f(x) = (1.1 - x)^{-1}.
inline TargetFunction convergence_target() { return inverse_pole_target(1.1); }

/// Seed of the stream that generates one trial's sample set.
inline std::uint64_t trial_seed(const ExperimentConfig& config, std::size_t n, std::size_t m, std::size_t trial) {
    return substream_seed(config.seed, {hash_label(config.id), n, m, trial});
}

/// Regenerates the sample set behind a record (points, noise, values, costs).
inline SampleSet regenerate_samples(const ExperimentConfig& config, const TargetFunction& f, std::size_t n,
                                    std::size_t m, std::uint64_t seed) {
    Stream stream(seed);
    return draw_sample_set(config.measure(n), m, f, config.cost(), stream, config.noise);
}

inline std::vector<ExperimentRecord> run_convergence(const ExperimentConfig& config, std::size_t jobs = 1,
                                                     const TargetFunction& f = convergence_target()) {
    if (config.kind != ExperimentKind::convergence) throw config_error("run_convergence: wrong experiment kind");
    config.validate();
    const CostModel cost = config.cost();

    struct Point {
        std::size_t n, m;
        Measure measure;
        QuadratureRule rule;
        double best_error;
        double expected_cost;
    };
    std::vector<Point> points;
    for (std::size_t n : config.n) {
        const LegendreBasis basis(n);
        const Measure mu = config.measure(n);
        QuadratureRule rule = default_rule(n, config.quadrature_margin);
        const double best = l2_error(f, best_approx(f, basis, rule), rule);
        const std::size_t m = config.m_for(n);
        points.push_back({n, m, mu, std::move(rule), best, expected_cost(mu, cost, m)});
    }

    std::vector<ExperimentRecord> records(points.size() * config.trials);
    parallel_for(records.size(), jobs, [&](std::size_t task) {
        const Point& p = points[task / config.trials];
        const std::size_t trial = task % config.trials;
        const auto start = std::chrono::steady_clock::now();
        ExperimentRecord r;
        r.experiment = config.id;
        r.n = p.n;
        r.m = p.m;
        r.trial = trial;
        r.seed = trial_seed(config, p.n, p.m, trial);
        Stream stream(r.seed);
        const SampleSet samples = draw_sample_set(p.measure, p.m, f, cost, stream, config.noise);
        const LegendreBasis basis(p.n);
        const Estimator est = fit(samples, basis);
        r.l2_error = l2_error(f, est, p.rule);
        r.linf_error = linf_error(f, est, config.grid_size);
        r.best_approx_l2_error = p.best_error;
        r.cond = est.diagnostics.cond;
        r.sigma_min = est.diagnostics.sigma_min;
        r.total_cost = samples.total_cost();
        r.expected_cost = p.expected_cost;
        r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        records[task] = std::move(r);
    });
    // Task order is already (n, m, trial); keep the sort so the contract does
    // not depend on how tasks are numbered.
    std::stable_sort(records.begin(), records.end(), [](const ExperimentRecord& a, const ExperimentRecord& b) {
        return std::tie(a.n, a.m, a.trial) < std::tie(b.n, b.m, b.trial);
    });
    return records;
}

struct ThetaRecord {
    std::string experiment;
    std::size_t n = 0;
    double theta = 0.0;
    bool reached = false;
    std::size_t theta_m = 0; // Theta(n; theta); the last m tried when not reached
    double mean_cond = 0.0;
    std::size_t trials = 0;
    double wall_time = 0.0;
};

inline constexpr std::string_view theta_header = "experiment,n,theta,reached,theta_m,mean_cond,trials,wall_time";

/// Condition number sqrt(lambda_max / lambda_min) of a Gram matrix A^T A;
/// +inf once lambda_min is not resolved.
inline double gram_condition(const Eigen::MatrixXd& gram) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw numerical_error("gram_condition: eigensolver failed");
    const double lmin = eig.eigenvalues()(0);
    const double lmax = eig.eigenvalues()(eig.eigenvalues().size() - 1);
    if (!(lmin > 0.0)) return std::numeric_limits<double>::infinity();
    return std::sqrt(lmax / lmin);
}

/// Theta(n; theta): for each n, grow m = n, n + m_step, ... until the mean
/// condition number over the trials is at most theta. Every trial keeps one
/// sample stream and reuses its first m points at the next m (nested samples),
/// accumulating the unscaled Gram matrix sum_i w_i phi(x_i) phi(x_i)^T.
inline std::vector<ThetaRecord> run_theta(const ExperimentConfig& config, std::size_t jobs = 1,
                                          std::ostream* warnings = &std::cerr) {
    if (config.kind != ExperimentKind::theta) throw config_error("run_theta: wrong experiment kind");
    config.validate();
    std::vector<ThetaRecord> out;
    for (std::size_t n : config.n) {
        const auto start = std::chrono::steady_clock::now();
        const Measure mu = config.measure(n);
        const LegendreBasis basis(n);
        struct Trial {
            Stream stream;
            Eigen::MatrixXd gram;
            double cond = 0.0;
        };
        std::vector<Trial> trials;
        trials.reserve(config.trials);
        for (std::size_t t = 0; t < config.trials; ++t)
            trials.push_back({Stream(substream_seed(config.seed, {hash_label(config.id), n, t})),
                              Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), 0.0});

        ThetaRecord rec;
        rec.experiment = config.id;
        rec.n = n;
        rec.theta = config.theta;
        rec.trials = config.trials;
        std::size_t have = 0;
        for (std::size_t m = n; m <= config.m_cap; m += config.m_step) {
            const std::size_t add = m - have;
            parallel_for(trials.size(), jobs, [&](std::size_t t) {
                Trial& tr = trials[t];
                std::vector<double> phi(n);
                Eigen::Map<Eigen::VectorXd> v(phi.data(), static_cast<Eigen::Index>(n));
                for (std::size_t k = 0; k < add; ++k) {
                    const double x = mu.sample_one(tr.stream);
                    basis.eval(x, phi);
                    tr.gram.selfadjointView<Eigen::Lower>().rankUpdate(v, mu.weight(x));
                }
                Eigen::MatrixXd full = tr.gram.selfadjointView<Eigen::Lower>();
                tr.cond = gram_condition(full);
            });
            have = m;
            double mean = 0.0;
            for (const auto& tr : trials) mean += tr.cond;
            mean /= static_cast<double>(trials.size());
            rec.theta_m = m;
            rec.mean_cond = mean;
            if (mean <= config.theta) {
                rec.reached = true;
                break;
            }
        }
        if (!rec.reached && warnings)
            *warnings << "warning: theta not reached for n = " << n << " within m_cap = " << config.m_cap << '\n';
        rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.push_back(rec);
    }
    return out;
}

inline void write_theta(std::ostream& out, const std::vector<ThetaRecord>& records) {
    out << theta_header << '\n';
    for (const auto& r : records) {
        out << csv::field(r.experiment) << ',' << r.n << ',' << csv::number(r.theta) << ',' << (r.reached ? 1 : 0)
            << ',';
        // Sentinel for a search that hit the cap.
        if (r.reached) out << r.theta_m;
        else out << "-1";
        out << ',' << csv::number(r.mean_cond) << ',' << r.trials << ',' << csv::number(r.wall_time) << '\n';
    }
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more points");
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += std::log(x[k]);
        my += std::log(y[k]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = std::log(x[k]) - mx;
        sxy += dx * (std::log(y[k]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

struct BudgetRow {
    std::string experiment;
    std::size_t n = 0;
    std::string measure;
    double alpha = 0.0;
    double beta = 0.0; // endpoint exponent of the sampling density
    double sigma = 0.0;
    double kappa_w = 0.0;
    double rho_sigma_pow_n = 0.0;
    double remez_bound = 0.0;
    std::size_t m = 0;
    double expected_cost = 0.0;
    double cost_bound = 0.0;
    double scaling_exponent = 0.0;
    double scaling_ratio = 0.0; // C_exp / (n^p log(3n/eps))
    std::string note;
};

inline constexpr std::string_view budget_header =
    "experiment,n,measure,alpha,beta,sigma,kappa_w,rho_sigma_pow_n,remez_bound,m,expected_cost,cost_bound,"
    "scaling_exponent,scaling_ratio,note";

inline std::vector<BudgetRow> run_budget(const ExperimentConfig& config) {
    if (config.kind != ExperimentKind::budget) throw config_error("run_budget: wrong experiment kind");
    config.validate();
    const CostModel cost = config.cost();
    std::vector<BudgetRow> rows;
    for (std::size_t n : config.n) {
        const LegendreBasis basis(n);
        const Measure mu = config.measure(n);
        const Subdomain omega = config.subdomain(mu, n);
        const BudgetPlan plan = plan_budget(basis, mu, omega, cost, config.epsilon, config.multiplier);
        BudgetRow r;
        r.experiment = config.id;
        r.n = n;
        r.measure = mu.descriptor();
        r.alpha = config.alpha;
        r.beta = endpoint_exponent(mu);
        r.sigma = plan.sigma;
        r.kappa_w = plan.kappa_w_value;
        r.rho_sigma_pow_n = plan.rho_sigma_pow_n;
        r.remez_bound = plan.remez_bound;
        r.m = plan.m;
        r.expected_cost = plan.expected_cost;
        r.cost_bound = plan.cost_bound;
        r.scaling_exponent = config.scaling_exponent();
        const double nd = static_cast<double>(n);
        r.scaling_ratio = plan.expected_cost / (std::pow(nd, r.scaling_exponent) * std::log(3.0 * nd / config.epsilon));
        if (!std::isfinite(plan.expected_cost))
            r.note = "divergent: beta=" + csv::number(r.beta) + " alpha=" + csv::number(config.alpha) +
                     " (beta - alpha <= -1)";
        rows.push_back(std::move(r));
    }
    return rows;
}

inline void write_budget(std::ostream& out, const std::vector<BudgetRow>& rows) {
    const auto value = [](double v) { return std::isinf(v) ? std::string("infinite") : csv::number(v); };
    out << budget_header << '\n';
    for (const auto& r : rows) {
        out << csv::field(r.experiment) << ',' << r.n << ',' << csv::field(r.measure) << ',' << csv::number(r.alpha)
            << ',' << csv::number(r.beta) << ',' << csv::number(r.sigma) << ',' << csv::number(r.kappa_w) << ','
            << csv::number(r.rho_sigma_pow_n) << ',' << csv::number(r.remez_bound) << ',' << r.m << ','
            << value(r.expected_cost) << ',' << value(r.cost_bound) << ',' << csv::number(r.scaling_exponent) << ','
            << value(r.scaling_ratio) << ',' << csv::field(r.note) << '\n';
    }
}

/// Points CSV for `costwise sample`: index, x, weight.
inline void write_sample(std::ostream& out, const Measure& measure, std::size_t m, std::uint64_t seed) {
    Stream stream(seed);
    const std::vector<double> xs = measure.sample(m, stream);
    out << "index,x,weight\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
        out << i << ',' << csv::number(xs[i]) << ',' << csv::number(measure.weight(xs[i])) << '\n';
}

} // namespace costwise
