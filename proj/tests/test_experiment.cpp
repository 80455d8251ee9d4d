#include "costwise/experiment.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

using namespace costwise;
using nlohmann::json;

namespace {

json convergence_json() {
    return json{{"kind", "convergence"},
                {"id", "unit"},
                {"alpha", 1.5},
                {"n", {4, 6}},
                {"m_rule", {{"coefficient", 0.5}, {"exponent", 3}}},
                {"trials", 4},
                {"seed", 12}};
}

std::string strip_last_column(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
    return out;
}

std::string to_csv(const std::vector<ExperimentRecord>& r) {
    std::ostringstream s;
    write_records(s, r);
    return s.str();
}

std::string summarize_text(const std::string& csv, const std::vector<std::string>& keys) {
    std::istringstream in(csv);
    std::ostringstream out;
    summarize(in, keys, out);
    return out.str();
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
    std::istringstream in(csv);
    const auto t = csv::read(in);
    auto r = t.rows;
    r.insert(r.begin(), t.header);
    return r;
}

} // namespace

TEST(Config, ParsesAndAppliesDefaults) {
    const ExperimentConfig c = parse_config(convergence_json());
    EXPECT_EQ(c.kind, ExperimentKind::convergence);
    EXPECT_EQ(c.n, (std::vector<std::size_t>{4, 6}));
    EXPECT_EQ(c.m_for(4), 32u);
    EXPECT_EQ(c.m_for(6), 108u);
    EXPECT_EQ(c.epsilon, 0.1);
    EXPECT_EQ(c.noise, 0.0);
    EXPECT_EQ(c.measure(4), Measure::jacobi(0.5));

    json j = convergence_json();
    j.erase("n");
    j.erase("trials");
    const ExperimentConfig d = parse_config(j);
    EXPECT_EQ(d.trials, 50u);
    EXPECT_EQ(d.n, default_n_grid(ExperimentKind::convergence));
    EXPECT_EQ(d.n.front(), 4u);
    EXPECT_EQ(d.n.back(), 30u);
    EXPECT_EQ(default_n_grid(ExperimentKind::theta), (std::vector<std::size_t>{4, 8, 12, 16, 20, 24}));
}

TEST(Config, MRuleRoundsUp) {
    const MRule r{0.5, 1.5};
    EXPECT_EQ(r(4), 4u);   // 0.5 * 8
    EXPECT_EQ(r(5), 6u);   // 0.5 * 11.18
    EXPECT_EQ(r(30), 83u); // 0.5 * 164.3
}

TEST(Config, Validation) {
    const auto bad = [](auto mutate) {
        json j = convergence_json();
        mutate(j);
        EXPECT_THROW(parse_config(j), config_error) << j.dump();
    };
    bad([](json& j) { j["trials"] = 0; });
    bad([](json& j) { j["n"] = {6, 4}; });
    bad([](json& j) { j["n"] = {4, 4}; });
    bad([](json& j) { j["n"] = json::array(); });
    bad([](json& j) { j["m_rule"] = {{"coefficient", 0.5}, {"exponent", 0.5}}; }); // m < n
    bad([](json& j) { j.erase("m_rule"); });
    bad([](json& j) { j["epsilon"] = 1.5; });
    bad([](json& j) { j["strategy"] = "nonsense"; });
    bad([](json& j) { j["strategy"] = "strategy-one"; j["alpha"] = 1.0; j["delta"] = 0.0; });
    bad([](json& j) { j["alpha"] = 0.0; }); // Jacobi(-1) is not a measure
    bad([](json& j) { j["typo"] = 1; });
    bad([](json& j) { j["trials"] = "many"; });
    bad([](json& j) { j["seed"] = -3; });
    bad([](json& j) { j["grid_size"] = 10; });
    EXPECT_THROW(parse_config(convergence_json(), ExperimentKind::theta), config_error);
    EXPECT_THROW(load_config("/nonexistent/config.json"), config_error);
}

TEST(Config, Strategies) {
    json j = convergence_json();
    j["strategy"] = "strategy-two";
    EXPECT_EQ(parse_config(j).measure(8), strategy_two(8));
    j["strategy"] = "christoffel";
    EXPECT_EQ(parse_config(j).measure(8), Measure::christoffel(8));
    j["strategy"] = "measure:scaled-chebyshev:0.25";
    EXPECT_EQ(parse_config(j).measure(8), Measure::scaled_chebyshev(0.25));
    j["strategy"] = "strategy-one";
    j["delta"] = 0.25;
    const auto c = parse_config(j);
    EXPECT_EQ(c.measure(4), c.measure(30));
    EXPECT_DOUBLE_EQ(c.scaling_exponent(), 3.5);
    j["alpha"] = 0.25;
    EXPECT_DOUBLE_EQ(parse_config(j).scaling_exponent(), 1.0);
}

TEST(Convergence, RecordsAreWellFormedAndSorted) {
    const auto c = parse_config(convergence_json());
    const auto records = run_convergence(c, 2);
    ASSERT_EQ(records.size(), 8u);
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& r = records[k];
        EXPECT_EQ(r.n, k < 4 ? 4u : 6u);
        EXPECT_EQ(r.trial, k % 4);
        EXPECT_GE(r.cond, 1.0);
        EXPECT_GT(r.total_cost, 0.0);
        EXPECT_GE(r.l2_error, r.best_approx_l2_error * (1 - 1e-9));
        EXPECT_GE(r.linf_error, 0.0);
        EXPECT_TRUE(std::isinf(r.expected_cost)); // Jacobi(alpha - 1) against alpha diverges
    }
}

TEST(Convergence, DeterministicAcrossRunsAndJobCounts) {
    const auto c = parse_config(convergence_json());
    const std::string a = strip_last_column(to_csv(run_convergence(c, 1)));
    const std::string b = strip_last_column(to_csv(run_convergence(c, 1)));
    const std::string d = strip_last_column(to_csv(run_convergence(c, 3)));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, d);
    EXPECT_EQ(a.substr(0, a.find('\n')), std::string(experiment_header.substr(0, experiment_header.rfind(','))));
}

TEST(Convergence, SeedRegeneratesTheSample) {
    json j = convergence_json();
    j["noise"] = 1e-3;
    const auto c = parse_config(j);
    const TargetFunction f = convergence_target();
    for (const auto& r : run_convergence(c)) {
        const SampleSet s = regenerate_samples(c, f, r.n, r.m, r.seed);
        double total = 0.0;
        for (double x : s.points) total += c.cost()(x);
        EXPECT_DOUBLE_EQ(r.total_cost, s.total_cost());
        EXPECT_NEAR(r.total_cost, total, 1e-12 * total);
        const Estimator e = fit(s, LegendreBasis(r.n));
        EXPECT_DOUBLE_EQ(r.cond, e.diagnostics.cond);
    }
}

TEST(Convergence, TotalCostMatchesExpectedCost) {
    // Mean of C_tot over trials within 3 standard errors of C_exp.
    json j = convergence_json();
    j["strategy"] = "strategy-two";
    j["alpha"] = 1.0;
    j["n"] = {8};
    j["m_rule"] = {{"coefficient", 2.0}, {"exponent", 2}};
    j["trials"] = 400;
    const auto records = run_convergence(parse_config(j));
    double mean = 0.0, sq = 0.0;
    for (const auto& r : records) mean += r.total_cost;
    mean /= records.size();
    for (const auto& r : records) sq += (r.total_cost - mean) * (r.total_cost - mean);
    const double se = std::sqrt(sq / (records.size() - 1) / records.size());
    EXPECT_TRUE(std::isfinite(records.front().expected_cost));
    EXPECT_NEAR(mean, records.front().expected_cost, 3.0 * se);
}

TEST(Convergence, WellSampledFitsTrackBestApproximation) {
    json j = convergence_json();
    j["strategy"] = "christoffel";
    j["alpha"] = 0.0;
    j["n"] = {10};
    j["m_rule"] = {{"coefficient", 20}, {"exponent", 1}};
    for (const auto& r : run_convergence(parse_config(j))) {
        EXPECT_LT(r.cond, 3.0);
        EXPECT_LT(r.l2_error, 3.0 * r.best_approx_l2_error);
    }
}

TEST(Summarize, GeometricMeanAndStd) {
    const std::string csv = "experiment,n,m,trial,cond\n"
                            "a,4,8,0,1\n"
                            "a,4,8,1,100\n"
                            "a,6,9,0,7\n";
    const auto r = rows(summarize_text(csv, {"n", "m"}));
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[0], (std::vector<std::string>{"n", "m", "count", "cond_geo_mean", "cond_geo_std", "cond_excluded"}));
    EXPECT_EQ(r[1][2], "2");
    EXPECT_NEAR(std::stod(r[1][3]), 10.0, 1e-12);
    EXPECT_NEAR(std::stod(r[1][4]), 10.0, 1e-12); // exp(|log 100| / 2)
    EXPECT_NEAR(std::stod(r[2][3]), 7.0, 1e-12);
    EXPECT_EQ(std::stod(r[2][4]), 1.0);
}

TEST(Summarize, ZerosAreExcludedAndCounted) {
    const std::string csv = "n,l2_error\n4,0\n4,0\n4,2\n4,8\n";
    const auto r = rows(summarize_text(csv, {"n"}));
    EXPECT_EQ(r[1][1], "4");
    EXPECT_NEAR(std::stod(r[1][2]), 4.0, 1e-12);
    EXPECT_EQ(r[1][4], "2");
}

TEST(Summarize, ReportsLineNumbers) {
    const auto message = [](const std::string& csv) {
        try {
            summarize_text(csv, {"n"});
        } catch (const config_error& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message("n,cond\n4,1\n4,abc\n").find("line 3"), std::string::npos);
    EXPECT_NE(message("n,cond\n4,1\n4,2,3\n").find("line 3"), std::string::npos);
    EXPECT_NE(message("n,cond\n4,\"1\n").find("line 2"), std::string::npos);
    EXPECT_NE(message("m,cond\n4,1\n").find("'n'"), std::string::npos);
    EXPECT_FALSE(message("").empty());
}

TEST(Summarize, RoundTripsExperimentOutput) {
    const auto c = parse_config(convergence_json());
    const auto r = rows(summarize_text(to_csv(run_convergence(c)), {"n", "m"}));
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[1][0], "4");
    EXPECT_EQ(r[1][1], "32");
    EXPECT_EQ(r[1][2], "4");
}

TEST(Theta, SearchStartsAtNAndRespectsCap) {
    json j{{"kind", "theta"}, {"id", "t"}, {"alpha", 1.5}, {"n", {3, 5}}, {"trials", 5}, {"theta", 10}, {"seed", 1}};
    const auto records = run_theta(parse_config(j));
    ASSERT_EQ(records.size(), 2u);
    for (const auto& r : records) {
        EXPECT_TRUE(r.reached);
        EXPECT_GE(r.theta_m, r.n);
        EXPECT_EQ((r.theta_m - r.n) % 50, 0u);
        EXPECT_LE(r.mean_cond, 10.0);
    }
    j["m_cap"] = 5;
    j["theta"] = 1.0001;
    std::ostringstream warn;
    const auto capped = run_theta(parse_config(j), 1, &warn);
    EXPECT_FALSE(capped[0].reached);
    EXPECT_NE(warn.str().find("theta not reached"), std::string::npos);
    std::ostringstream out;
    write_theta(out, capped);
    EXPECT_NE(out.str().find(",0,-1,"), std::string::npos);
}

TEST(Theta, GramConditionMatchesSvd) {
    Stream stream(5);
    const auto s = draw_sample_set(Measure::chebyshev(), 80, [](double) { return 0.0; }, CostModel(), stream);
    const auto sys = design_matrix(s, LegendreBasis(7));
    const Eigen::MatrixXd gram = sys.matrix.transpose() * sys.matrix;
    EXPECT_NEAR(gram_condition(gram), fit(s, LegendreBasis(7)).diagnostics.cond, 1e-9);
}

TEST(Theta, Deterministic) {
    json j{{"kind", "theta"}, {"id", "t"}, {"n", {4, 8}}, {"trials", 6}, {"seed", 3}};
    const auto a = run_theta(parse_config(j), 1);
    const auto b = run_theta(parse_config(j), 4);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].theta_m, b[k].theta_m);
        EXPECT_EQ(a[k].mean_cond, b[k].mean_cond);
    }
}

TEST(Budget, ReportsDivergenceAndScaling) {
    json j{{"kind", "budget"}, {"id", "b"}, {"alpha", 1.5}, {"strategy", "christoffel"}, {"n", {4, 8}}};
    const auto rows_c = run_budget(parse_config(j));
    for (const auto& r : rows_c) {
        EXPECT_TRUE(std::isinf(r.expected_cost));
        EXPECT_NE(r.note.find("beta=0 alpha=1.5"), std::string::npos);
        EXPECT_NEAR(r.kappa_w, static_cast<double>(r.n), 1e-6);
    }
    std::ostringstream out;
    write_budget(out, rows_c);
    EXPECT_NE(out.str().find(",infinite,"), std::string::npos);

    j["strategy"] = "jacobi-alpha-minus-one";
    for (const auto& r : run_budget(parse_config(j))) {
        EXPECT_TRUE(std::isinf(r.expected_cost));
        EXPECT_NE(r.note.find("beta=0.5 alpha=1.5"), std::string::npos);
        EXPECT_GT(r.sigma, 0.0);
    }

    j["strategy"] = "strategy-two";
    j["n"] = {4, 8, 16, 32, 64};
    const auto rows_two = run_budget(parse_config(j));
    for (const auto& r : rows_two) {
        EXPECT_TRUE(std::isfinite(r.expected_cost));
        EXPECT_LE(r.rho_sigma_pow_n, 2.0 + 1e-9);
        EXPECT_DOUBLE_EQ(r.scaling_exponent, 3.0);
        EXPECT_TRUE(r.note.empty());
    }
    EXPECT_LE(rows_two.back().scaling_ratio / rows_two.front().scaling_ratio, 10.0);
}

TEST(Sample, WritesPointsAndWeights) {
    std::ostringstream out;
    write_sample(out, Measure::jacobi(0.5), 5, 9);
    const auto r = rows(out.str());
    ASSERT_EQ(r.size(), 6u);
    EXPECT_EQ(r[0], (std::vector<std::string>{"index", "x", "weight"}));
    for (std::size_t k = 1; k < r.size(); ++k) {
        const double x = std::stod(r[k][1]);
        EXPECT_NEAR(std::stod(r[k][2]), Measure::jacobi(0.5).weight(x), 1e-12);
    }
    std::ostringstream again;
    write_sample(again, Measure::jacobi(0.5), 5, 9);
    EXPECT_EQ(out.str(), again.str());
}

TEST(Parallel, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(10, 3,
                              [](std::size_t i) {
                                  if (i == 7) throw numerical_error("boom");
                              }),
                 numerical_error);
    std::vector<int> hit(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
    for (int h : hit) EXPECT_EQ(h, 1);
}
