// costwise: experiment driver. Subcommands write CSV to --out, the config's
// "output" path, or stdout (in that order of preference).

#include "costwise/config.hpp"
#include "costwise/csv.hpp"
#include "costwise/error.hpp"
#include "costwise/experiment.hpp"
#include "costwise/measures.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

void emit(const std::string& path, const std::function<void(std::ostream&)>& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw costwise::config_error("cannot open output file '" + path + "'");
    write(out);
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

// Conventions behind the CSV numbers, written next to a file output as
// <path>.meta.json. Not written for stdout.
void emit_metadata(const std::string& path, const costwise::ExperimentConfig& c) {
    if (path.empty() || path == "-") return;
    nlohmann::ordered_json j;
    j["kind"] = std::string(costwise::to_string(c.kind));
    j["id"] = c.id;
    j["seed"] = c.seed;
    j["alpha"] = c.alpha;
    j["delta"] = c.delta;
    j["strategy"] = c.strategy;
    j["epsilon"] = c.epsilon;
    j["trials"] = c.trials;
    if (c.m_rule) j["m_rule"] = {{"coefficient", c.m_rule->coefficient}, {"exponent", c.m_rule->exponent}};
    j["cond"] = "2-norm condition number of A = diag(sqrt(w(x_i)/m)) [phi_j(x_i)], from its singular values";
    j["l2_error"] = "L2 w.r.t. dx/2 on (-1,1), composite Gauss-Legendre, checked against a panel-doubled rule";
    j["linf_error"] = "max over " + std::to_string(c.grid_size) + " Chebyshev points cos(pi (k + 1/2) / N)";
    if (c.kind == costwise::ExperimentKind::theta)
        j["theta_m"] = "first m = n + k m_step whose arithmetic mean cond over trials is <= theta; samples are "
                       "nested across m within a trial; -1 when m_cap is hit";
    j["trial_seed"] = "substream_seed(seed, {hash_label(id), n, m, trial}); theta uses {hash_label(id), n, trial}";
    std::ofstream out(path + ".meta.json", std::ios::binary);
    if (!out) throw costwise::config_error("cannot open '" + path + ".meta.json'");
    out << j.dump(2) << '\n';
}

std::vector<std::string> split_keys(const std::string& text) {
    std::vector<std::string> keys;
    std::stringstream ss(text);
    std::string key;
    while (std::getline(ss, key, ','))
        if (!key.empty()) keys.push_back(key);
    return keys;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cost-aware weighted least-squares experiments"};
    app.require_subcommand(1);
    std::size_t jobs = 0;
    app.add_option("--jobs", jobs, "worker threads (COSTWISE_JOBS overrides)");

    std::string config_path, out_path;
    auto* convergence = app.add_subcommand("convergence", "error and conditioning versus n");
    auto* theta = app.add_subcommand("theta", "smallest m with mean condition number <= theta");
    auto* budget = app.add_subcommand("budget", "sample counts and expected costs");
    for (auto* sub : {convergence, theta, budget}) {
        sub->add_option("--config", config_path, "JSON configuration")->required();
        sub->add_option("--out", out_path, "output CSV (default: config 'output' or stdout)");
        sub->add_option("--jobs", jobs, "worker threads (COSTWISE_JOBS overrides)");
    }

    std::string measure_text;
    std::size_t m = 0;
    std::uint64_t seed = 0;
    auto* sample = app.add_subcommand("sample", "draw points from a sampling measure");
    sample->add_option("--measure", measure_text, "e.g. chebyshev, jacobi:0.5, scaled-chebyshev:0.01")->required();
    sample->add_option("--m", m, "number of points")->required()->check(CLI::PositiveNumber);
    sample->add_option("--seed", seed, "seed")->required();
    sample->add_option("--out", out_path, "output CSV (default stdout)");

    std::string in_path, group = "n,m";
    auto* summarize = app.add_subcommand("summarize", "geometric mean / std per group");
    summarize->add_option("--in", in_path, "experiment CSV")->required();
    summarize->add_option("--group", group, "comma-separated group columns");
    summarize->add_option("--out", out_path, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        using costwise::ExperimentKind;
        if (*convergence || *theta || *budget) {
            const ExperimentKind kind = *convergence ? ExperimentKind::convergence
                                        : *theta     ? ExperimentKind::theta
                                                     : ExperimentKind::budget;
            const costwise::ExperimentConfig config = costwise::load_config(config_path, kind);
            const std::string target = out_path.empty() ? config.output : out_path;
            const std::size_t workers = costwise::resolve_jobs(jobs);
            if (kind == ExperimentKind::convergence) {
                const auto records = costwise::run_convergence(config, workers);
                emit(target, [&](std::ostream& o) { costwise::write_records(o, records); });
            } else if (kind == ExperimentKind::theta) {
                const auto records = costwise::run_theta(config, workers);
                emit(target, [&](std::ostream& o) { costwise::write_theta(o, records); });
            } else {
                const auto rows = costwise::run_budget(config);
                emit(target, [&](std::ostream& o) { costwise::write_budget(o, rows); });
            }
            emit_metadata(target, config);
        } else if (*sample) {
            const costwise::Measure measure = costwise::Measure::parse(measure_text);
            emit(out_path, [&](std::ostream& o) { costwise::write_sample(o, measure, m, seed); });
        } else if (*summarize) {
            std::ifstream in(in_path);
            if (!in) throw costwise::config_error("cannot open '" + in_path + "'");
            const auto keys = split_keys(group);
            emit(out_path, [&](std::ostream& o) { costwise::summarize(in, keys, o); });
        }
    } catch (const costwise::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::invalid_argument& e) { // includes config_error
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
