// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--seed S] [--only 1,5,8]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "exdiff/distributions.hpp"
#include "exdiff/endpoint.hpp"
#include "exdiff/exact.hpp"
#include "exdiff/io.hpp"
#include "exdiff/local_time_laws.hpp"
#include "exdiff/rng.hpp"
#include "exdiff/suite.hpp"
#include "exdiff/validation.hpp"

namespace {

using namespace exdiff;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kN = 100000;
constexpr double kPValue = 0.001;
constexpr double kKs = 0.0061;
constexpr double kWeightTol = 1e-6;
constexpr double kSumTol = 1e-10;
constexpr double kAtomZ = 3.0;
constexpr double kSpeedup = 2.0;
constexpr std::size_t kTrials = 1000000;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "[fail] ") + what;
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct ReferenceCase {
    std::string name;
    DriftSpec drift;
};

std::vector<ReferenceCase> reference_cases() {
    return {{"(0.2,-0.9)", make_piecewise_constant(0.2, -0.9)},
            {"(0.3,0.9)", make_piecewise_constant(0.3, 0.9)},
            {"sine(7pi/6,pi/4)", make_piecewise_sine(7 * std::numbers::pi / 6, std::numbers::pi / 4)}};
}

std::vector<double> terminal_values(const ExactSimulator& sim, std::size_t n, std::uint64_t seed) {
    const auto paths = sim.sample_paths({}, n, seed);
    std::vector<double> out;
    out.reserve(n);
    for (const auto& p : paths) out.push_back(p.points.back().x);
    return out;
}

const OracleResult& find(const std::vector<OracleResult>& rs, const std::string& name) {
    for (const auto& r : rs)
        if (r.name == name) return r;
    throw std::runtime_error("oracle test " + name + " did not run");
}

std::vector<OracleResult> run_named(const std::vector<std::string>& names, std::uint64_t seed) {
    std::vector<OracleResult> out;
    for (const auto& n : names) {
        auto rs = run_oracle_suite(n, seed);
        for (auto& r : rs)
            if (r.name == n) out.push_back(std::move(r));
    }
    return out;
}

// ---- criteria -----------------------------------------------------------------

Outcome exact_vs_euler(std::uint64_t seed) {
    Outcome o;
    for (const auto& c : reference_cases()) {
        const ExactSimulator sim(c.drift, 0.0, 1.0);
        auto t0 = Clock::now();
        const auto exact = terminal_values(sim, kN, seed);
        const double te = seconds_since(t0);
        t0 = Clock::now();
        const auto euler = euler_maruyama(c.drift, 0.0, 1.0, 1e-4, kN, seed);
        const double tu = seconds_since(t0);
        const double p = ks_two_sample(exact, euler).p_value;
        o.require(p > kPValue, c.name + " KS p=" + fmt(p) + " (exact " + fmt(te) + " s, euler " + fmt(tu) + " s)");
    }
    return o;
}

Outcome speed(std::uint64_t seed) {
    Outcome o;
    const EndpointLaw law(make_piecewise_constant(0.2, -0.9), 0.0, 1.0);
    auto time = [&](auto sampler, std::uint64_t stream) {
        double best = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            RngStream rng(seed, stream + rep);
            double sink = 0.0;
            const auto t0 = Clock::now();
            for (std::size_t i = 0; i < kN; ++i) sink += sampler(law, rng).b;
            best = std::min(best, seconds_since(t0));
            if (!std::isfinite(sink)) throw std::runtime_error("non-finite endpoint draw");
        }
        return best;
    };
    const double two = time(sample_endpoint_theta_positive, 0);
    const double mix = time(sample_endpoint_mixture, 10);
    const double ratio = mix / two;
    o.require(ratio >= kSpeedup, "(0.2,-0.9) 1e5 endpoints: two-step " + fmt(two) + " s, mixture " + fmt(mix) +
                                     " s, ratio " + fmt(ratio));
    return o;
}

Outcome conditional_laws(std::uint64_t seed) {
    Outcome o;
    const std::vector<std::string> names{"bridge_L_given_endpoints_ks", "bridge_zero_increment_ks", "bridge_xi1_ks",
                                         "bridge_xi3_ks",  "bridge_xi2_pairs_ks", "bridge_xi2_envelope_ks",
                                         "bridge_point_ks"};
    for (const auto& r : run_named(names, seed)) o.require(r.value < kKs, r.name + " max D=" + fmt(r.value));
    return o;
}

Outcome case_weights(std::uint64_t seed) {
    Outcome o;
    const auto rs = run_named({"bridge_case_weights_quadrature", "bridge_case_weights_sum"}, seed);
    const auto& q = find(rs, "bridge_case_weights_quadrature");
    const auto& s = find(rs, "bridge_case_weights_sum");
    o.require(q.value < kWeightTol, "p1/p3 vs quadrature, 10 sets, max err " + fmt(q.value));
    o.require(s.value < kSumTol, "|p1+p2+p3-1| over 1e4 queries " + fmt(s.value));
    return o;
}

Outcome degenerate(std::uint64_t seed) {
    Outcome o;
    const std::vector<double> times{0.25, 0.5, 0.75, 1.0};
    const double x0 = 0.3;
    const ExactSimulator bm(make_piecewise_constant(0.0, 0.0), x0, 1.0);
    const auto paths = bm.sample_paths(times, kN, seed);
    for (double t : times) {
        std::vector<double> v;
        v.reserve(kN);
        for (const auto& p : paths)
            for (const auto& pt : p.points)
                if (pt.t == t) v.push_back(pt.x);
        if (v.size() != kN) throw std::runtime_error("grid time missing from a skeleton");
        const double p = ks_one_sample(v, [&](double u) { return normal_cdf(u, x0, t); }).p_value;
        o.require(p > kPValue, "BM t=" + fmt(t) + " p=" + fmt(p));
    }
    const double a = 0.7, x = -0.4, T = 1.5;
    const ExactSimulator constant(make_piecewise_constant(a, a), x, T);
    const auto xt = terminal_values(constant, kN, seed + 1);
    const double p = ks_one_sample(xt, [&](double u) { return normal_cdf(u, x + a * T, T); }).p_value;
    o.require(p > kPValue, "constant a=0.7 p=" + fmt(p));
    return o;
}

Outcome endpoint_law(std::uint64_t seed) {
    Outcome o;
    const std::vector<std::string> chi2{"endpoint_two_step_chi2_x0", "endpoint_two_step_chi2_x05",
                                        "endpoint_two_step_sine_chi2_x05", "endpoint_mixture_chi2_x0",
                                        "endpoint_mixture_chi2_x05"};
    auto names = chi2;
    names.push_back("endpoint_atom_mass");
    const auto rs = run_named(names, seed);
    for (const auto& n : chi2) {
        const auto& r = find(rs, n);
        o.require(r.value > kPValue, n + " p=" + fmt(r.value));
    }
    const auto& atom = find(rs, "endpoint_atom_mass");
    o.require(atom.value < kAtomZ, "atom mass x in {0.5, 1}, max |z|=" + fmt(atom.value));
    return o;
}

// Random bridge conditioning data with l1 < l3 (or l1 == l3 when `flat`).
BridgeQuery random_query(RngStream& rng, bool flat) {
    BridgeQuery q{};
    q.s1 = 0.0;
    q.s3 = 0.05 + 3.0 * rng.uniform();
    q.s2 = q.s3 * (0.02 + 0.96 * rng.uniform());
    q.l1 = 2.0 * rng.uniform();
    q.b1 = 1.5 * rng.normal();
    q.b3 = 1.5 * rng.normal();
    if (flat) {
        q.l3 = q.l1;
        q.b3 = std::copysign(std::fabs(q.b3) + 1e-3, q.b1);
        q.b1 = std::copysign(std::fabs(q.b1) + 1e-3, q.b1);
    } else {
        q.l3 = q.l1 + 0.01 + 2.0 * rng.uniform();
    }
    return q;
}

Outcome invariants(std::uint64_t seed) {
    Outcome o;
    RngStream rng(seed, 7000);
    auto in_unit = [](double r) { return r >= 0.0 && r <= 1.0; };

    // Skeletons: ordering, monotone local time, requested times present.
    std::size_t bad_order = 0, bad_l = 0, skeletons = 0;
    const auto cases = reference_cases();
    const std::size_t configs = 20;
    for (std::size_t k = 0; k < configs; ++k) {
        const double x = 2.0 * rng.normal();
        const double T = 0.2 + 2.0 * rng.uniform();
        const std::vector<double> times{T * 0.25, T * 0.5, T * 0.75};
        const ExactSimulator sim(cases[k % cases.size()].drift, x, T);
        const auto paths = sim.sample_paths(times, kTrials / configs, seed + 100 + k);
        for (const auto& p : paths) {
            ++skeletons;
            for (std::size_t i = 1; i < p.points.size(); ++i) {
                bad_order += !(p.points[i].t > p.points[i - 1].t);
                bad_l += !(p.points[i].l >= p.points[i - 1].l);
            }
        }
    }
    o.require(bad_order == 0, std::to_string(skeletons) + " skeletons, ordering violations " + std::to_string(bad_order));
    o.require(bad_l == 0, "local time decreases " + std::to_string(bad_l));

    std::size_t bad_lge = 0;
    for (std::size_t i = 0; i < kTrials; ++i) {
        const EndpointPair e{0.0, 0.01 + 2.0 * rng.uniform(), 1.5 * rng.normal(), 1.5 * rng.normal(), 2.0 * rng.uniform()};
        bad_lge += !(sample_L_given_endpoints(e, rng) >= e.l1);
    }
    o.require(bad_lge == 0, "L given endpoints below l1 " + std::to_string(bad_lge));

    // Acceptance ratios.
    std::size_t bad_thin = 0;
    for (std::size_t i = 0; i < kTrials; ++i) {
        const auto& d = cases[i % cases.size()].drift;
        const double u = 5.0 * rng.normal();
        bad_thin += !in_unit(phi(d, u) / d.big_m());
    }
    o.require(bad_thin == 0, "phi/M outside [0,1] " + std::to_string(bad_thin));

    std::size_t bad_flat = 0;
    for (std::size_t i = 0; i < kTrials; ++i) {
        const BridgeQuery q = random_query(rng, false);
        const double b = 3.0 * rng.normal();
        bad_flat += !in_unit(xi1_acceptance_ratio(q, b)) + !in_unit(xi3_acceptance_ratio(q, b));
    }
    o.require(bad_flat == 0, "flat-end ratios outside [0,1] " + std::to_string(bad_flat));

    std::size_t bad_zero = 0;
    for (std::size_t i = 0; i < kTrials; ++i) {
        const BridgeQuery q = random_query(rng, true);
        const auto g = zero_increment_proposal(q);
        bad_zero += !in_unit(zero_increment_acceptance(q, g.mean + std::sqrt(g.variance) * rng.normal()));
    }
    o.require(bad_zero == 0, "zero-increment ratios outside [0,1] " + std::to_string(bad_zero));

    std::size_t bad_mix = 0, mix_trials = 0;
    for (double x : {0.0, 0.5, -1.0, 1.0}) {
        const EndpointLaw law(make_piecewise_constant(0.3, 0.9), x, 1.0);
        const auto& m = law.mixture();
        const double log_n = std::log(double(m.components.size()));
        for (std::size_t i = 0; i < kTrials / 4; ++i, ++mix_trials) {
            const auto& c = m.components[i % m.components.size()];
            const auto d = c.sample(rng);
            const double target = c.atom ? law.log_gstar_tilde(d.b) : law.log_gtilde(d.b, d.l);
            const double ratio = std::exp(target - (m.log_k + c.log_density(d.b, d.l) - log_n));
            bad_mix += !in_unit(ratio);
        }
    }
    o.require(bad_mix == 0, std::to_string(mix_trials) + " mixture ratios, outside [0,1] " + std::to_string(bad_mix));

    // R2: membership in (u, v) iff the pulled-back point satisfies the constraints.
    std::size_t bad_r2 = 0;
    for (std::size_t i = 0; i < kTrials; ++i) {
        const BridgeQuery q = random_query(rng, false);
        const auto r = UVRegion::from_query(q);
        const double u = r.abs_b1 + 6.0 * rng.uniform();
        const double v = r.abs_b3 + 6.0 * rng.uniform();
        const auto p = r.to_bridge(u, v);
        const double slack = 1e-12 * (1.0 + std::fabs(u) + std::fabs(v));
        const bool strictly = p.b > slack && p.l > q.l1 + slack && p.l < q.l3 - slack;
        const bool outside = p.b < -slack || p.l < q.l1 - slack || p.l > q.l3 + slack;
        if (strictly && !r.contains(u, v)) ++bad_r2;
        if (outside && r.contains(u, v)) ++bad_r2;
    }
    o.require(bad_r2 == 0, "R2 membership mismatches " + std::to_string(bad_r2));
    return o;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism(std::uint64_t seed) {
    Outcome o;
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("exdiff_acceptance_" + std::to_string(seed));
    fs::create_directories(dir);
    const std::vector<double> times{0.25, 0.5, 0.75};
    const std::size_t n = 20000;
    std::vector<std::string> files;
    for (const auto& c : reference_cases()) {
        const ExactSimulator sim(c.drift, 0.0, 1.0);
        std::vector<std::string> bytes;
        for (unsigned threads : {1u, 2u, 4u, 1u}) {
            const fs::path f = dir / ("run" + std::to_string(bytes.size()) + ".csv");
            write_file_atomic(f, skeletons_csv(sim.sample_paths(times, n, seed, threads)));
            bytes.push_back(slurp(f));
        }
        const bool same = std::all_of(bytes.begin(), bytes.end(), [&](const std::string& b) { return b == bytes[0]; });
        o.require(same && !bytes[0].empty(),
                  c.name + " " + std::to_string(bytes[0].size()) + " bytes, threads 1/2/4 and rerun identical");
    }
    fs::remove_all(dir);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::uint64_t seed = 20261019;
    std::vector<int> only;
    app.add_option("--seed", seed);
    app.add_option("--only", only, "criterion numbers")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    struct Criterion {
        int id;
        const char* title;
        std::function<Outcome(std::uint64_t)> run;
    };
    const std::vector<Criterion> criteria{
        {1, "exact vs Euler dt=1e-4, n=1e5, KS p > 0.001", exact_vs_euler},
        {2, "two-step endpoint sampler >= 2x faster than the mixture", speed},
        {3, "conditional samplers, KS D < 0.0061 at n=1e5, >= 5 sets each", conditional_laws},
        {4, "p1, p3 vs quadrature within 1e-6; p1+p2+p3 = 1 within 1e-10", case_weights},
        {5, "zero drift fdd and constant drift, KS p > 0.001, n=1e5", degenerate},
        {6, "endpoint chi2 p > 0.001 (theta > 0, theta < 0); atom mass within 3 SE", endpoint_law},
        {7, "structural invariants, 1e6 trials each, zero violations", invariants},
        {8, "same seed gives byte-identical CSV for any thread count", determinism},
    };

    bool all = true;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = Clock::now();
        Outcome r;
        try {
            r = c.run(seed);
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("error: ") + e.what();
        }
        all = all && r.pass;
        std::printf("%s  criterion %d: %s [%.1f s]\n      %s\n", r.pass ? "PASS" : "FAIL", c.id, c.title,
                    seconds_since(t0), r.detail.c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
