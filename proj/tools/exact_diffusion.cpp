// exact-diffusion: sample | compare | validate

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "exdiff/config.hpp"
#include "exdiff/debug.hpp"
#include "exdiff/exact.hpp"
#include "exdiff/io.hpp"
#include "exdiff/suite.hpp"
#include "exdiff/validation.hpp"

namespace {

using namespace exdiff;
using Clock = std::chrono::steady_clock;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitValidation = 3;
constexpr std::uint64_t kDefaultValidateSeed = 20261019;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

ExperimentConfig load(const Overrides& o) {
    ExperimentConfig c = load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    return c;
}

unsigned threads_for(const Overrides& o, const ExperimentConfig& c) {
    return resolve_threads(o.threads > 0 ? o.threads : c.threads.value_or(0));
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string title_for(const ExperimentConfig& c) {
    return c.family + " (" + format_double(c.p1) + ", " + format_double(c.p2) + "), x=" + format_double(c.x) +
           ", T=" + format_double(c.T);
}

std::string sidecar_path(const ExperimentConfig& c) {
    if (!c.json_path.empty()) return c.json_path;
    return std::filesystem::path(c.csv_path).replace_extension(".json").string();
}

int cmd_sample(const Overrides& o) {
    const ExperimentConfig c = load(o);
    const unsigned threads = threads_for(o, c);
    const ExactSimulator sim(c.drift(), c.x, c.T);
    const auto t0 = Clock::now();
    const auto paths = sim.sample_paths(c.times, c.n_paths, c.seed, threads);
    const double elapsed = seconds_since(t0);
    const std::string csv = skeletons_csv(paths);
    const std::string svg = c.svg_path.empty() ? std::string() : render_svg(csv, title_for(c));
    write_file_atomic(c.csv_path, csv);
    if (!c.svg_path.empty()) write_file_atomic(c.svg_path, svg);
    std::size_t rounds = 0;
    for (const auto& p : paths) rounds += p.rounds;
    std::cout << "sampled " << c.n_paths << " skeletons in " << elapsed << " s on " << threads
              << " thread(s); mean rounds per path " << double(rounds) / double(c.n_paths) << "\n"
              << "wrote " << c.csv_path << (c.svg_path.empty() ? "" : " and " + c.svg_path) << "\n";
    return 0;
}

int cmd_compare(const Overrides& o) {
    const ExperimentConfig c = load(o);
    if (!c.comparison) throw ConfigError("compare needs a 'comparison' block");
    const unsigned threads = threads_for(o, c);
    const DriftSpec drift = c.drift();
    const ExactSimulator sim(drift, c.x, c.T);

    auto t0 = Clock::now();
    const auto paths = sim.sample_paths({}, c.n_paths, c.seed, threads);
    const double exact_seconds = seconds_since(t0);
    std::vector<double> exact;
    exact.reserve(paths.size());
    for (const auto& p : paths) exact.push_back(p.points.back().x);

    t0 = Clock::now();
    const auto euler = euler_maruyama(drift, c.x, c.T, c.comparison->dt, c.comparison->n, c.seed, threads);
    const double euler_seconds = seconds_since(t0);

    const TestStatistic ks = ks_two_sample(exact, euler);
    const double h_exact = silverman_bandwidth(exact);
    const double h_euler = silverman_bandwidth(euler);
    const auto [e0, e1] = std::minmax_element(exact.begin(), exact.end());
    const auto [u0, u1] = std::minmax_element(euler.begin(), euler.end());
    const double pad = 3.0 * std::max(h_exact, h_euler);
    const double lo = std::min(*e0, *u0) - pad;
    const double hi = std::max(*e1, *u1) + pad;
    std::vector<double> grid(512);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = lo + (hi - lo) * double(i) / double(grid.size() - 1);
    const std::string csv = kde_comparison_csv(grid, kde_at(exact, h_exact, grid), kde_at(euler, h_euler, grid));

    nlohmann::json report{
        {"drift", {{"family", c.family}, {"p1", c.p1}, {"p2", c.p2}}},
        {"x", c.x},
        {"T", c.T},
        {"seed", c.seed},
        {"threads", threads},
        {"n_exact", exact.size()},
        {"n_euler", euler.size()},
        {"euler_dt", c.comparison->dt},
        {"ks_statistic", ks.statistic},
        {"ks_p_value", ks.p_value},
        {"bandwidth", {{"exact", h_exact}, {"euler", h_euler}}},
        {"timing", {{"exact_total_seconds", exact_seconds}, {"euler_total_seconds", euler_seconds}}}};

    const std::string svg = c.svg_path.empty() ? std::string() : render_svg(csv, title_for(c));
    write_file_atomic(c.csv_path, csv);
    write_file_atomic(sidecar_path(c), report.dump(2) + "\n");
    if (!c.svg_path.empty()) write_file_atomic(c.svg_path, svg);
    std::cout << "KS D=" << ks.statistic << " p=" << ks.p_value << "; exact " << exact_seconds << " s, euler "
              << euler_seconds << " s\n"
              << "wrote " << c.csv_path << ", " << sidecar_path(c) << (c.svg_path.empty() ? "" : ", " + c.svg_path)
              << "\n";
    return 0;
}

int cmd_validate(const std::string& filter, std::uint64_t seed, const std::string& report_path,
                 const std::string& mutate) {
    debug::Mutation m = debug::Mutation::None;
    if (mutate == "corrupt-p1") {
        m = debug::Mutation::CorruptP1;
    } else if (!mutate.empty()) {
        throw ConfigError("unknown mutation '" + mutate + "'");
    }
    const debug::ScopedMutation guard(m);
    const auto results = run_oracle_suite(filter, seed, [](const OracleResult& r) {
        std::printf("%-4s %-40s %-12s %-12.6g threshold %-10.4g %s\n", r.pass ? "ok" : "FAIL", r.name.c_str(),
                    r.kind.c_str(), r.value, r.threshold, r.detail.c_str());
        std::fflush(stdout);
    });
    if (results.empty()) throw ConfigError("filter '" + filter + "' matches no test");
    const std::string report = oracle_report_json(results, seed);
    if (!report_path.empty()) write_file_atomic(report_path, report + "\n");
    const auto missing = uncovered_samplers();
    for (const auto& s : missing) std::printf("FAIL sampler without oracle: %s\n", s.c_str());
    const bool pass = missing.empty() &&
                      std::all_of(results.begin(), results.end(), [](const OracleResult& r) { return r.pass; });
    std::printf("%zu tests, %s\n", results.size(), pass ? "all passed" : "FAILURES");
    return pass ? 0 : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact simulation of diffusions with a discontinuous drift"};
    app.require_subcommand(1);

    Overrides o;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* cmd, bool config_required) {
        auto* opt = cmd->add_option("--config", o.config, "JSON experiment file");
        if (config_required) opt->required();
        cmd->add_option("--seed", seed, "override the config seed");
        cmd->add_option("--threads", o.threads, "worker threads (default: EXACT_DIFFUSION_THREADS, then all cores)");
    };

    auto* sample = app.add_subcommand("sample", "write exact skeletons as CSV (and SVG)");
    add_common(sample, true);
    auto* compare = app.add_subcommand("compare", "exact vs Euler-Maruyama: KDE CSV, JSON report, SVG");
    add_common(compare, true);
    auto* validate = app.add_subcommand("validate", "run the oracle test suite");
    add_common(validate, false);
    std::string filter;
    std::string report;
    std::string mutate;
    validate->add_option("--filter", filter, "run tests whose name or suite contains this");
    validate->add_option("--report", report, "write the JSON report here");
    validate->add_option("--mutate", mutate, "inject a known defect (corrupt-p1)")->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        for (auto* cmd : {sample, compare, validate})
            if (cmd->parsed() && cmd->count("--seed")) o.seed = seed;
        if (sample->parsed()) return cmd_sample(o);
        if (compare->parsed()) return cmd_compare(o);
        std::uint64_t validate_seed = o.seed.value_or(kDefaultValidateSeed);
        if (!o.config.empty() && !o.seed) validate_seed = load_config(o.config).seed;
        return cmd_validate(filter, validate_seed, report, mutate);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const AssumptionViolation& e) {
        std::cerr << "drift rejected: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
