#include "exdiff/suite.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "exdiff/distributions.hpp"
#include "exdiff/endpoint.hpp"
#include "exdiff/exact.hpp"
#include "exdiff/local_time_laws.hpp"
#include "exdiff/validation.hpp"

namespace exdiff {

namespace {

constexpr std::size_t kN = 100000;
constexpr int kSets = 5;

OracleResult p_value_result(double p, std::string detail) {
    OracleResult r;
    r.kind = "p_value";
    r.value = p;
    r.detail = std::move(detail);
    return r;
}

OracleResult bound_result(double value, double threshold, std::string detail) {
    OracleResult r;
    r.kind = "bound";
    r.value = value;
    r.threshold = threshold;
    r.pass = value < threshold;
    r.detail = std::move(detail);
    return r;
}

OracleResult ks_result(double statistic, std::string detail) {
    OracleResult r = bound_result(statistic, kKsBound, std::move(detail));
    r.kind = "ks_statistic";
    return r;
}

template <class F>
std::vector<double> draw(std::size_t n, F&& f) {
    std::vector<double> out(n);
    for (auto& v : out) v = f();
    return out;
}

double log_uniform(RngStream& rng, double lo, double hi) {
    return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * rng.uniform());
}

enum class QueryKind { Flat, Increasing };

// Queries drawn the way the simulator meets them: (b3, l3) follows (b1, l1)
// under Brownian motion.
BridgeQuery random_query(RngStream& rng, QueryKind kind) {
    for (;;) {
        const double d12 = log_uniform(rng, 1e-2, 1e1);
        const double d23 = log_uniform(rng, 1e-2, 1e1);
        const double b1 = -3.0 + 6.0 * rng.uniform();
        const double l1 = rng.uniform();
        const double b3 = b1 + std::sqrt(d12 + d23) * rng.normal();
        if (std::fabs(b3) > 3.0) continue;
        const double l3 = sample_L_given_endpoints({0.0, d12 + d23, b1, b3, l1}, rng);
        const bool flat = l3 == l1;
        if (flat != (kind == QueryKind::Flat)) continue;
        return {0.0, d12, d12 + d23, b1, b3, l1, l3};
    }
}

// A query on which branch 0, 1 or 2 (p1, p2, p3) carries at least `min_weight`.
// The flat-end samplers are only efficient where the simulator actually calls
// them, so their laws are checked there.
BridgeQuery used_query(RngStream& rng, int branch, double min_weight = 0.05) {
    for (;;) {
        const BridgeQuery q = random_query(rng, QueryKind::Increasing);
        const CaseWeights w = compute_case_weights(q);
        const double p[] = {w.p1, w.p2, w.p3};
        if (p[branch] >= min_weight) return q;
    }
}

std::string describe(const BridgeQuery& q) {
    std::ostringstream s;
    s.precision(4);
    s << "(s=" << q.s1 << "," << q.s2 << "," << q.s3 << " b=" << q.b1 << "," << q.b3
      << " l=" << q.l1 << "," << q.l3 << ")";
    return s.str();
}

// ---- Oracle densities, assembled from f and f* -------------------------------------

double oracle_xi1(const BridgeQuery& q, double b) {
    return atom_density_fstar(q.b1, q.s2 - q.s1, b) *
           joint_density_f({b, q.s3 - q.s2, q.b3, q.l3 - q.l1});
}

double oracle_xi3(const BridgeQuery& q, double b) {
    return joint_density_f({q.b1, q.s2 - q.s1, b, q.l3 - q.l1}) *
           atom_density_fstar(b, q.s3 - q.s2, q.b3);
}

double oracle_xi2(const BridgeQuery& q, double b, double l) {
    if (!(l > q.l1 && l < q.l3)) return 0.0;
    return joint_density_f({q.b1, q.s2 - q.s1, b, l - q.l1}) *
           joint_density_f({b, q.s3 - q.s2, q.b3, q.l3 - l});
}

double oracle_xi2_b_marginal(const BridgeQuery& q, double b) {
    return integrate([&](double l) { return oracle_xi2(q, b, l); }, q.l1, q.l3, 1e-9);
}

double oracle_xi2_l_marginal(const BridgeQuery& q, double l) {
    auto f = [&](double b) { return oracle_xi2(q, b, l); };
    return integrate(f, -kInf, 0.0, 1e-9) + integrate(f, 0.0, kInf, 1e-9);
}

double bridge_scale(const BridgeQuery& q) {
    return std::fabs(q.b1) + std::fabs(q.b3) + 8.0 * std::sqrt(q.s3 - q.s1);
}

// CDF of a density on the sign half-line of `side` (or the whole line for 0).
QuadratureCdf half_line_cdf(std::function<double(double)> f, double side, double scale) {
    if (side > 0.0) return QuadratureCdf(std::move(f), 0.0, kInf, {scale});
    if (side < 0.0) return QuadratureCdf(std::move(f), -kInf, 0.0, {-scale});
    return QuadratureCdf(std::move(f), -kInf, kInf, {-scale, 0.0, scale});
}

double max_ks(std::vector<double> samples, const QuadratureCdf& cdf) {
    return ks_one_sample(std::move(samples), [&](double u) { return cdf(u); }).statistic;
}

// Bisection on a CDF for a bracketing quantile.
double quantile(const std::function<double(double)>& cdf, double p, double lo, double hi) {
    for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, std::fabs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double bonferroni(double min_p, int tests) { return std::min(1.0, min_p * tests); }

// ---- primitives ------------------------------------------------------------------------

OracleResult truncated_normal_ks(std::uint64_t seed) {
    struct P {
        double mu, var, lo, hi;
    };
    const P sets[] = {{0.0, 1.0, 0.0, kInf}, {0.3, 2.0, 1.1, kInf}, {-1.0, 0.25, 3.0, kInf},
                      {0.0, 1.0, -0.5, 0.2}, {2.0, 4.0, -kInf, -1.0}};
    double worst = 0.0;
    int i = 0;
    for (const auto& s : sets) {
        RngStream rng(seed, 100 + i++);
        auto x = draw(kN, [&] { return sample_truncated_normal(s.mu, s.var, s.lo, s.hi, rng); });
        const double flo = normal_cdf(s.lo == -kInf ? -1e300 : s.lo, s.mu, s.var);
        const double fhi = normal_cdf(s.hi == kInf ? 1e300 : s.hi, s.mu, s.var);
        // Upper-tail form keeps precision for the deep-tail set.
        auto cdf = [&](double u) {
            if (s.lo > s.mu) {
                const double sd = std::sqrt(s.var);
                const double a = std_normal_sf((s.lo - s.mu) / sd);
                return 1.0 - std_normal_sf((u - s.mu) / sd) / a;
            }
            return (normal_cdf(u, s.mu, s.var) - flo) / (fhi - flo);
        };
        worst = std::max(worst, ks_one_sample(x, cdf).statistic);
    }
    return ks_result(worst, "max KS over 5 truncations incl. a 6-sigma tail");
}

OracleResult truncated_rayleigh_ks(std::uint64_t seed) {
    const std::pair<double, double> sets[] = {{1.0, 0.0}, {4.0, 1.0}, {0.3, 2.5}, {10.0, 0.1}, {0.01, 0.5}};
    double worst = 0.0;
    int i = 0;
    for (auto [s2, m] : sets) {
        RngStream rng(seed, 200 + i++);
        auto x = draw(kN, [&] { return sample_truncated_rayleigh(s2, m, rng); });
        auto cdf = [&](double y) { return y <= m ? 0.0 : -std::expm1(-(y * y - m * m) / (2.0 * s2)); };
        worst = std::max(worst, ks_one_sample(x, cdf).statistic);
    }
    return ks_result(worst, "max KS over 5 (scale, min) pairs");
}

OracleResult linear_gaussian_tail_ks(std::uint64_t seed) {
    struct P {
        double c, m, var;
    };
    // One set per proposal branch, plus boundaries between them.
    const P sets[] = {{2.0, 0.0, 1.0}, {0.5, -1.0, 2.0}, {0.1, 0.8, 0.5}, {0.0, 0.3, 1.0}, {1.0, 1.5, 0.04}, {0.7, 0.7, 1.0}};
    double worst = 0.0;
    int i = 0;
    for (const auto& s : sets) {
        const QuadratureCdf cdf(
            [&](double w) { return w > s.c ? w * std::exp(-0.5 * (w - s.m) * (w - s.m) / s.var) : 0.0; }, s.c, kInf,
            {s.c + 10.0 * std::sqrt(s.var)});
        RngStream rng(seed, 250 + i++);
        worst = std::max(worst, max_ks(draw(kN, [&] { return sample_linear_gaussian_tail(s.c, s.m, s.var, rng); }), cdf));
    }
    return ks_result(worst, "w exp(-(w - m)^2 / 2v) on w > c, 6 (c, m, v)");
}

OracleResult poisson_counts(std::uint64_t seed) {
    RngStream rng(seed, 300);
    const double rate = 2.0;
    std::vector<double> observed(16, 0.0);
    std::vector<double> time_samples;
    for (std::size_t i = 0; i < kN; ++i) {
        const auto t = sample_poisson_times(rate, 1.0, rng);
        observed[std::min<std::size_t>(t.size(), 15)] += 1.0;
        if (!t.empty()) time_samples.push_back(t.front());
    }
    std::vector<double> probs(16);
    double acc = 0.0;
    for (int k = 0; k < 15; ++k) {
        probs[k] = std::exp(-rate + k * std::log(rate) - std::lgamma(k + 1.0));
        acc += probs[k];
    }
    probs[15] = 1.0 - acc;
    const double p_counts = chi_square_test(observed, probs).p_value;
    // First event given at least one: density rate e^{-rate t} / (1 - e^{-rate}).
    const double p_first =
        ks_one_sample(time_samples, [&](double t) { return std::expm1(-rate * t) / std::expm1(-rate); })
            .p_value;
    return p_value_result(bonferroni(std::min(p_counts, p_first), 2),
                          "chi-square on counts and KS on the first event time");
}

OracleResult local_time_density_mass(std::uint64_t) {
    const std::pair<double, double> sets[] = {{1.0, 1.0}, {0.0, 1.0}, {-0.5, 0.3}, {2.0, 4.0}, {0.1, 0.01}};
    double worst = 0.0;
    for (auto [x, s] : sets) {
        auto cont = [&](double b) {
            return integrate([&](double l) { return l > 0.0 ? joint_density_f({x, s, b, l}) : 0.0; }, 0.0,
                             kInf, 1e-11);
        };
        auto atom = [&](double b) { return atom_density_fstar(x, s, b); };
        const double mass = integrate(cont, -kInf, 0.0, 1e-11) + integrate(cont, 0.0, kInf, 1e-11) +
                            integrate(atom, -kInf, 0.0, 1e-11) + integrate(atom, 0.0, kInf, 1e-11);
        worst = std::max(worst, std::fabs(mass - 1.0));
    }
    return bound_result(worst, 1e-6, "max |mass - 1| of f + f* over 5 (x, s)");
}

OracleResult levy_marginal(std::uint64_t seed) {
    RngStream rng(seed, 400);
    const double T = 1.7;
    const auto pairs = levy_identity_oracle(T, kN, rng);
    std::vector<double> l;
    for (auto& p : pairs) l.push_back(p[1]);
    const double p = ks_one_sample(l, [&](double u) { return u <= 0.0 ? 0.0 : std::erf(u / std::sqrt(2.0 * T)); }).p_value;
    return p_value_result(p, "L_T against |N(0, T)|");
}

OracleResult levy_joint(std::uint64_t seed) {
    RngStream rng(seed, 410);
    const double T = 1.0;
    const auto pairs = levy_identity_oracle(T, kN, rng);
    const std::vector<double> b_edges{0.0, 0.15, 0.3, 0.5, 0.75, 1.05, 1.5, kInf};
    const std::vector<double> l_edges{0.0, 0.15, 0.3, 0.5, 0.75, 1.05, 1.5, kInf};
    const std::size_t nb = b_edges.size() - 1;
    const std::size_t nl = l_edges.size() - 1;
    std::vector<double> observed(nb * nl, 0.0);
    for (auto& p : pairs) observed[find_cell(b_edges, p[0]) * nl + find_cell(l_edges, p[1])] += 1.0;
    std::vector<double> probs(nb * nl);
    for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t j = 0; j < nl; ++j)
            probs[i * nl + j] = 2.0 * integrate(
                                          [&](double b) {
                                              return integrate([&](double l) { return l > 0.0 ? joint_density_f({0.0, T, b, l}) : 0.0; },
                                                               l_edges[j], l_edges[j + 1], 1e-11);
                                          },
                                          b_edges[i], b_edges[i + 1], 1e-11);
    return p_value_result(chi_square_test(observed, probs).p_value, "(|B_T|, L_T) against 2 f_T^0, 7x7 cells");
}

// ---- bridge ------------------------------------------------------------------------------

OracleResult l_given_endpoints_ks(std::uint64_t seed) {
    RngStream params(seed, 500);
    double worst = 0.0;
    for (int k = 0; k < kSets; ++k) {
        const double d = log_uniform(params, 1e-2, 1e1);
        double b1 = -3.0 + 6.0 * params.uniform();
        double b2 = -3.0 + 6.0 * params.uniform();
        if (k == 0) b1 = b2 = 0.0;
        if (k == 1) b2 = std::copysign(std::fabs(b2), b1);
        const double l1 = params.uniform();
        const EndpointPair e{0.0, d, b1, b2, l1};
        const double phi_b = normal_pdf(b2, b1, d);
        const double atom = atom_density_fstar(b1, d, b2) / phi_b;
        const QuadratureCdf inc(
            [&](double y) { return y > 0.0 ? joint_density_f({b1, d, b2, y}) / phi_b : 0.0; }, 0.0, kInf,
            {std::fabs(b1) + std::fabs(b2) + 8.0 * std::sqrt(d)});
        RngStream rng(seed, 510 + k);
        auto x = draw(kN, [&] { return sample_L_given_endpoints(e, rng); });
        auto cdf = [&](double v) { return v < l1 ? 0.0 : atom + inc.unnormalized(v - l1); };
        auto left = [&](double v) { return v <= l1 ? 0.0 : atom + inc.unnormalized(v - l1); };
        worst = std::max(worst, ks_one_sample(x, cdf, left).statistic);
    }
    return ks_result(worst, "L_{s2} | endpoints vs f / phi quadrature, 5 sets");
}

OracleResult zero_increment_ks(std::uint64_t seed) {
    RngStream params(seed, 600);
    double worst = 0.0;
    std::string sets;
    for (int k = 0; k < kSets; ++k) {
        const BridgeQuery q = random_query(params, QueryKind::Flat);
        sets += describe(q);
        const double d12 = q.s2 - q.s1;
        const double d23 = q.s3 - q.s2;
        const auto cdf = half_line_cdf(
            [&](double b) { return atom_density_fstar(q.b1, d12, b) * atom_density_fstar(b, d23, q.b3); },
            q.b1, bridge_scale(q));
        RngStream rng(seed, 610 + k);
        worst = std::max(worst, max_ks(draw(kN, [&] { return sample_B_conditional_zero_increment(q, rng); }), cdf));
    }
    return ks_result(worst, "nu1 vs f* f* quadrature " + sets);
}

OracleResult case_weights_quadrature(std::uint64_t seed) {
    RngStream params(seed, 700);
    double worst = 0.0;
    for (int k = 0; k < 2 * kSets; ++k) {
        const BridgeQuery q = used_query(params, k % 2 == 0 ? 0 : 2, 0.01);
        const CaseWeights w = compute_case_weights(q);
        const double f13 = joint_density_f({q.b1, q.s3 - q.s1, q.b3, q.l3 - q.l1});
        const double scale = bridge_scale(q);
        double p1 = 0.0;
        double p3 = 0.0;
        if (q.b1 != 0.0)
            p1 = half_line_cdf([&](double b) { return oracle_xi1(q, b); }, q.b1, scale).total_mass() / f13;
        if (q.b3 != 0.0)
            p3 = half_line_cdf([&](double b) { return oracle_xi3(q, b); }, q.b3, scale).total_mass() / f13;
        worst = std::max({worst, std::fabs(w.p1 - p1), std::fabs(w.p3 - p3)});
    }
    return bound_result(worst, 1e-6, "closed-form p1, p3 vs half-line quadrature of xi1, xi3, 10 sets");
}

OracleResult p2_quadrature(std::uint64_t seed) {
    RngStream params(seed, 720);
    double worst = 0.0;
    for (int k = 0; k < kSets; ++k) {
        const BridgeQuery q = used_query(params, 1, 0.01);
        const CaseWeights w = compute_case_weights(q);
        const double f13 = joint_density_f({q.b1, q.s3 - q.s1, q.b3, q.l3 - q.l1});
        auto m = [&](double b) {
            return integrate([&](double l) { return oracle_xi2(q, b, l); }, q.l1, q.l3, 1e-12);
        };
        const double p2 = (integrate(m, -kInf, 0.0, 1e-10) + integrate(m, 0.0, kInf, 1e-10)) / f13;
        worst = std::max(worst, std::fabs(w.p2 - p2));
    }
    return bound_result(worst, 1e-6, "p2 vs quadrature of xi2 over the interior region, 5 sets");
}

OracleResult case_weights_sum(std::uint64_t seed) {
    RngStream params(seed, 710);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const BridgeQuery q = random_query(params, QueryKind::Increasing);
        const CaseWeights w = compute_case_weights(q);
        worst = std::max(worst, std::fabs(w.p1 + w.p2 + w.p3 - 1.0));
        for (double p : {w.p1, w.p2, w.p3})
            if (!(p >= 0.0 && p <= 1.0)) worst = kInf;
    }
    return bound_result(worst, 1e-10, "|p1 + p2 + p3 - 1| over 1e4 queries");
}

OracleResult flat_end_ks(std::uint64_t seed, bool left) {
    RngStream params(seed, left ? 800 : 850);
    double worst = 0.0;
    for (int k = 0; k < kSets; ++k) {
        const BridgeQuery q = used_query(params, left ? 0 : 2);
        const auto cdf = half_line_cdf(
            [&](double b) { return left ? oracle_xi1(q, b) : oracle_xi3(q, b); }, left ? q.b1 : q.b3,
            bridge_scale(q));
        RngStream rng(seed, (left ? 810 : 860) + k);
        worst = std::max(worst, max_ks(draw(kN, [&] { return left ? sample_xi1(q, rng) : sample_xi3(q, rng); }), cdf));
    }
    return ks_result(worst, std::string(left ? "xi1" : "xi3") + " vs quadrature, 5 sets");
}

// pair_attempts == 0 exercises the envelope route alone.
std::vector<BridgePoint> xi2_draws(const BridgeQuery& q, RngStream& rng, int pair_attempts) {
    if (pair_attempts == 0) return sample_xi2_envelope(q, kN, rng);
    std::vector<BridgePoint> out;
    for (std::size_t i = 0; i < kN; ++i) out.push_back(sample_xi2_with_budget(q, rng, pair_attempts));
    return out;
}

OracleResult xi2_marginals_ks(std::uint64_t seed, int pair_attempts, int stream) {
    RngStream params(seed, stream);
    double worst = 0.0;
    for (int k = 0; k < kSets; ++k) {
        const BridgeQuery q = used_query(params, 1);
        const double scale = bridge_scale(q);
        QuadratureCdf b_cdf([&](double b) { return oracle_xi2_b_marginal(q, b); }, -kInf, kInf,
                            {-scale, 0.0, scale}, 1e-8);
        QuadratureCdf l_cdf([&](double l) { return oracle_xi2_l_marginal(q, l); }, q.l1, q.l3, {}, 1e-8);
        b_cdf.tabulate();
        l_cdf.tabulate();
        RngStream rng(seed, stream + 10 + k);
        std::vector<double> bs;
        std::vector<double> ls;
        for (const BridgePoint& p : xi2_draws(q, rng, pair_attempts)) {
            bs.push_back(p.b);
            ls.push_back(p.l);
        }
        worst = std::max({worst, max_ks(bs, b_cdf), max_ks(ls, l_cdf)});
    }
    return ks_result(worst, pair_attempts > 0 ? "xi2 b and l marginals, Rayleigh pairs, 5 sets"
                                              : "xi2 b and l marginals, envelope route, 5 sets");
}

OracleResult xi2_joint_chi2(std::uint64_t seed, int pair_attempts, int stream) {
    RngStream params(seed, stream);
    const BridgeQuery q = used_query(params, 1);
    const double scale = bridge_scale(q);
    QuadratureCdf b_cdf([&](double b) { return oracle_xi2_b_marginal(q, b); }, -kInf, kInf,
                        {-scale, 0.0, scale}, 1e-8);
    QuadratureCdf l_cdf([&](double l) { return oracle_xi2_l_marginal(q, l); }, q.l1, q.l3, {}, 1e-8);
    b_cdf.tabulate();
    l_cdf.tabulate();
    std::vector<double> b_edges{-kInf};
    std::vector<double> l_edges{q.l1};
    for (int i = 1; i < 10; ++i) {
        // The b marginal is even, so its median is 0 up to bisection noise; a
        // sliver cell next to the kink would stall the cell quadrature.
        const double b = quantile(b_cdf, i / 10.0, -scale, scale);
        b_edges.push_back(std::fabs(b) < 1e-9 * scale ? 0.0 : b);
        l_edges.push_back(quantile(l_cdf, i / 10.0, q.l1, q.l3));
    }
    b_edges.push_back(kInf);
    l_edges.push_back(q.l3);
    std::vector<double> probs(100, 0.0);
    for (int i = 0; i < 10; ++i) {
        std::vector<std::pair<double, double>> pieces{{b_edges[i], b_edges[i + 1]}};
        if (b_edges[i] < 0.0 && b_edges[i + 1] > 0.0) pieces = {{b_edges[i], 0.0}, {0.0, b_edges[i + 1]}};
        for (int j = 0; j < 10; ++j)
            for (auto [lo, hi] : pieces)
                probs[i * 10 + j] += integrate(
                    [&](double b) {
                        return integrate([&](double l) { return oracle_xi2(q, b, l); }, l_edges[j], l_edges[j + 1], 1e-10);
                    },
                    lo, hi, 1e-7);
    }
    double total = 0.0;
    for (double p : probs) total += p;
    for (double& p : probs) p /= total;
    std::vector<double> observed(100, 0.0);
    RngStream rng(seed, stream + 1);
    for (const BridgePoint& p : xi2_draws(q, rng, pair_attempts)) {
        const int bi = find_cell(b_edges, p.b);
        const int li = std::clamp(find_cell(l_edges, p.l), 0, 9);
        observed[bi * 10 + li] += 1.0;
    }
    return p_value_result(chi_square_test(observed, probs).p_value, "10x10 joint cells " + describe(q));
}

OracleResult bridge_point_ks(std::uint64_t seed) {
    RngStream params(seed, 1000);
    double worst = 0.0;
    for (int k = 0; k < kSets; ++k) {
        const BridgeQuery q = random_query(params, QueryKind::Increasing);
        const double scale = bridge_scale(q);
        QuadratureCdf cdf(
            [&](double b) { return oracle_xi1(q, b) + oracle_xi3(q, b) + oracle_xi2_b_marginal(q, b); }, -kInf,
            kInf, {-scale, 0.0, scale}, 1e-8);
        cdf.tabulate();
        RngStream rng(seed, 1010 + k);
        worst = std::max(worst, max_ks(draw(kN, [&] { return sample_bridge_point(q, rng).b; }), cdf));
    }
    return ks_result(worst, "B_{s2} marginal of the three-way split, 5 sets");
}

OracleResult bridge_case_frequencies(std::uint64_t seed) {
    RngStream params(seed, 1100);
    double min_p = 1.0;
    std::string sets;
    for (int k = 0; k < kSets; ++k) {
        // At least two branches in use, otherwise the test has no degrees of freedom.
        BridgeQuery q = random_query(params, QueryKind::Increasing);
        CaseWeights w = compute_case_weights(q);
        while ((w.p1 >= 0.05) + (w.p2 >= 0.05) + (w.p3 >= 0.05) < 2) {
            q = random_query(params, QueryKind::Increasing);
            w = compute_case_weights(q);
        }
        sets += describe(q);
        std::vector<double> observed(3, 0.0);
        RngStream rng(seed, 1110 + k);
        for (std::size_t i = 0; i < kN; ++i) {
            BridgeCase c;
            sample_bridge_point(q, rng, c);
            observed[c == BridgeCase::LeftFlat ? 0 : (c == BridgeCase::Interior ? 1 : 2)] += 1.0;
        }
        const std::vector<double> probs{w.p1, w.p2, w.p3};
        min_p = std::min(min_p, chi_square_test(observed, probs).p_value);
    }
    return p_value_result(bonferroni(min_p, kSets), "case counts vs (p1, p2, p3) " + sets);
}

OracleResult interpolate_midpoint_ks(std::uint64_t seed) {
    const std::vector<SkeletonPoint> pts{{0.0, 0.4, 0.0}, {1.0, -0.3, 0.5}};
    const BridgeQuery q{0.0, 0.5, 1.0, 0.4, -0.3, 0.0, 0.5};
    const double scale = bridge_scale(q);
    QuadratureCdf cdf(
        [&](double b) { return oracle_xi1(q, b) + oracle_xi3(q, b) + oracle_xi2_b_marginal(q, b); }, -kInf, kInf,
        {-scale, 0.0, scale}, 1e-8);
    cdf.tabulate();
    RngStream rng(seed, 1200);
    const std::vector<double> mid{0.5};
    auto x = draw(kN, [&] { return interpolate_skeleton(pts, mid, rng)[1].x; });
    return ks_result(max_ks(x, cdf), "midpoint of (0, 0.4, 0) -> (1, -0.3, 0.5)");
}

OracleResult uv_region_pullback(std::uint64_t seed) {
    RngStream rng(seed, 1300);
    double disagreements = 0.0;
    for (int i = 0; i < 1000000; ++i) {
        const double l1 = 2.0 * rng.uniform();
        const double l3 = l1 + 2.0 * rng.uniform();
        const double b1 = -3.0 + 6.0 * rng.uniform();
        const double b3 = -3.0 + 6.0 * rng.uniform();
        const BridgeQuery q{0.0, 0.5, 1.0, b1, b3, l1, l3};
        const UVRegion r = UVRegion::from_query(q);
        const double u = 8.0 * rng.uniform();
        const double v = 8.0 * rng.uniform();
        // Solve u = l2 - l1 + |b2| + |b1|, v = l3 - l2 + |b3| + |b2| directly.
        const double l2 = 0.5 * (u - v + l1 + l3 - std::fabs(b1) + std::fabs(b3));
        const double ab2 = 0.5 * (u + v - l3 + l1 - std::fabs(b1) - std::fabs(b3));
        const bool pullback = l2 >= l1 && l2 <= l3 && ab2 >= 0.0;
        if (pullback != r.contains(u, v)) disagreements += 1.0;
    }
    return bound_result(disagreements, 0.5, "R2 membership vs pullback, 1e6 points");
}

// ---- endpoint --------------------------------------------------------------------------

DriftSpec reference_drift(int which) {
    switch (which) {
        case 0: return make_piecewise_constant(0.2, -0.9);
        case 1: return make_piecewise_constant(0.3, 0.9);
        default: return make_piecewise_sine(7.0 * std::numbers::pi / 6.0, std::numbers::pi / 4.0);
    }
}

OracleResult endpoint_chi2(std::uint64_t seed, int drift, double x, bool mixture, int stream) {
    const EndpointLaw law(reference_drift(drift), x, 1.0);
    const double T = law.T();
    // Bin placement only: b marginal from the closed-form l integral.
    auto b_density = [&](double b) {
        return std::exp(law.drift().antiderivative(b) + log_tilted_local_time_integral(x, T, b, law.theta())) +
               law.gstar_tilde(b);
    };
    const double scale = std::fabs(x) + 8.0 * std::sqrt(T);
    const QuadratureCdf b_cdf(b_density, -kInf, kInf, {-scale, 0.0, scale}, 1e-8);
    std::vector<double> b_edges{-kInf};
    std::vector<double> l_edges{0.0};
    for (int i = 1; i < 12; ++i) {
        b_edges.push_back(quantile(b_cdf, i / 12.0, -scale - 10.0, scale + 10.0));
        l_edges.push_back(std::sqrt(-2.0 * T * std::log1p(-i / 12.0)) * 0.6);
    }
    b_edges.push_back(kInf);
    l_edges.push_back(kInf);
    const auto probs = endpoint_cell_probabilities(law, b_edges, l_edges);
    std::vector<double> observed(probs.size(), 0.0);
    RngStream rng(seed, stream);
    for (std::size_t i = 0; i < kN; ++i) {
        const EndpointDraw d = mixture ? sample_endpoint_mixture(law, rng) : sample_endpoint_theta_positive(law, rng);
        const int bi = find_cell(b_edges, d.b);
        if (d.l == 0.0) {
            observed[144 + bi] += 1.0;
        } else {
            observed[bi * 12 + find_cell(l_edges, d.l)] += 1.0;
        }
    }
    std::ostringstream s;
    s << (mixture ? "mixture" : "two-step") << " sampler, " << law.drift().family() << " theta=" << law.theta()
      << " x=" << x << ", 12x12 + atom cells";
    return p_value_result(chi_square_test(observed, probs).p_value, s.str());
}

OracleResult endpoint_atom_mass(std::uint64_t seed) {
    double worst = 0.0;
    std::ostringstream s;
    int k = 0;
    for (int drift = 0; drift < 3; ++drift) {
        for (double x : {0.5, 1.0}) {
            const EndpointLaw law(reference_drift(drift), x, 1.0);
            const double p = endpoint_atom_probability(law);
            RngStream rng(seed, 1500 + k++);
            double hits = 0.0;
            for (std::size_t i = 0; i < kN; ++i) hits += sample_endpoint(law, rng).l == 0.0 ? 1.0 : 0.0;
            const double z = (hits / kN - p) / std::sqrt(p * (1.0 - p) / kN);
            worst = std::max(worst, std::fabs(z));
            s << law.drift().family() << "(x=" << x << ") p=" << p << " z=" << z << "; ";
        }
    }
    return bound_result(worst, 3.0, "max |z| of P(L_T = 0): " + s.str());
}

OracleResult endpoint_cross_check(std::uint64_t seed) {
    const EndpointLaw law(reference_drift(0), 0.5, 1.0);
    RngStream a(seed, 1600);
    RngStream b(seed, 1601);
    auto two = draw(kN, [&] { return sample_endpoint_theta_positive(law, a).b; });
    auto mix = draw(kN, [&] { return sample_endpoint_mixture(law, b).b; });
    return p_value_result(ks_two_sample(two, mix).p_value, "two-step vs mixture, theta > 0, b marginal");
}

OracleResult xt_from_h_ks(std::uint64_t seed) {
    double min_p = 1.0;
    int k = 0;
    for (int drift : {0, 2}) {
        for (double x : {0.0, -0.7}) {
            const EndpointLaw law(reference_drift(drift), x, 1.3);
            const double T = law.T();
            const QuadratureCdf cdf(
                [&](double u) {
                    return std::isfinite(u) ? std::exp(law.drift().antiderivative(u) + log_normal_pdf(u, x, T)) : 0.0;
                },
                -kInf,
                kInf, {-12.0, 0.0, 12.0});
            RngStream rng(seed, 1700 + k++);
            auto s = draw(kN, [&] { return sample_XT_from_h(law, rng); });
            min_p = std::min(min_p, ks_one_sample(s, [&](double u) { return cdf(u); }).p_value);
        }
    }
    return p_value_result(bonferroni(min_p, 4), "h = e^A phi against quadrature, linear and bounded A");
}

OracleResult mixture_components_normalised(std::uint64_t) {
    double worst = 0.0;
    for (double x : {0.0, 0.5, -0.7}) {
        for (int drift : {0, 1}) {
            const EndpointLaw law(reference_drift(drift), x, 1.0);
            for (const auto& c : law.mixture().components) {
                double mass = 0.0;
                if (c.atom) {
                    mass = integrate([&](double b) { return std::exp(c.log_density(b, 0.0)); }, c.b_lo, c.b_hi, 1e-11);
                } else {
                    mass = integrate(
                        [&](double b) {
                            return integrate([&](double l) { return l > 0.0 ? std::exp(c.log_density(b, l)) : 0.0; },
                                             0.0, kInf, 1e-11);
                        },
                        c.b_lo, c.b_hi, 1e-11);
                }
                worst = std::max(worst, std::fabs(mass - 1.0));
            }
        }
    }
    return bound_result(worst, 1e-8, "max |integral of h_i - 1| over all components");
}

OracleResult tilted_mass_refinement(std::uint64_t) {
    double worst = 0.0;
    for (int drift = 0; drift < 3; ++drift)
        for (double x : {0.0, 0.5})
            for (double T : {0.5, 1.0}) {
                const EndpointLaw law(reference_drift(drift), x, T);
                const double coarse = tilted_mass(law, 0);
                const double fine = tilted_mass(law, 1);
                if (!std::isfinite(fine) || !(fine > 0.0)) return bound_result(kInf, 1e-6, "mass not finite");
                worst = std::max(worst, std::fabs(coarse - fine));
            }
    return bound_result(worst, 1e-6, "two refinement levels of the tilted mass, 3 drifts x 4 (x, T)");
}

OracleResult zero_drift_endpoint_vs_levy(std::uint64_t seed) {
    const EndpointLaw law(make_piecewise_constant(0.0, 0.0), 0.0, 1.0);
    RngStream a(seed, 1800);
    RngStream b(seed, 1801);
    std::vector<double> l_exact;
    std::vector<double> b_exact;
    for (std::size_t i = 0; i < kN; ++i) {
        const auto d = sample_endpoint(law, a);
        l_exact.push_back(d.l);
        b_exact.push_back(std::fabs(d.b));
    }
    const auto levy = levy_identity_oracle(1.0, kN, b);
    std::vector<double> l_levy;
    std::vector<double> b_levy;
    for (auto& p : levy) {
        b_levy.push_back(p[0]);
        l_levy.push_back(p[1]);
    }
    const double p = std::min(ks_two_sample(l_exact, l_levy).p_value, ks_two_sample(b_exact, b_levy).p_value);
    return p_value_result(bonferroni(p, 2), "(|X_T|, L_T) with zero drift vs Levy oracle");
}

// ---- algorithm ---------------------------------------------------------------------------

OracleResult brownian_fdd(std::uint64_t seed) {
    const double x = 0.3;
    const ExactSimulator sim(make_piecewise_constant(0.0, 0.0), x, 1.0);
    const std::vector<double> times{0.25, 0.5, 0.75, 1.0};
    const auto paths = sim.sample_paths(times, kN, seed);
    double min_p = 1.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::vector<double> v;
        for (const auto& p : paths) {
            for (const auto& pt : p.points)
                if (pt.t == times[k]) v.push_back(pt.x);
        }
        const double t = times[k];
        min_p = std::min(min_p, ks_one_sample(v, [&](double u) { return normal_cdf(u, x, t); }).p_value);
    }
    return p_value_result(bonferroni(min_p, 4), "zero drift, X_t ~ N(x, t) at t = 0.25 .. 1");
}

OracleResult constant_drift_terminal(std::uint64_t seed) {
    const double a = 0.7;
    const double x = -0.4;
    const double T = 1.5;
    const ExactSimulator sim(make_piecewise_constant(a, a), x, T);
    const auto paths = sim.sample_paths({}, kN, seed ^ 0x5bd1e995u);
    std::vector<double> v;
    for (const auto& p : paths) v.push_back(p.points.back().x);
    const double p = ks_one_sample(v, [&](double u) { return normal_cdf(u, x + a * T, T); }).p_value;
    return p_value_result(p, "constant drift, X_T ~ N(x + aT, T)");
}

OracleResult thinning_acceptance_rate(std::uint64_t seed) {
    double worst = 0.0;
    std::ostringstream s;
    for (int drift : {0, 2}) {
        const double x = drift == 0 ? 0.0 : 0.4;
        const ExactSimulator sim(reference_drift(drift), x, 1.0);
        // E_W[e^{A(W_T) - theta L_T - int (alpha^2 + alpha') / 2}] = e^{A(x)}, hence
        // P(accept) = e^{A(x) + kappa T} / (mass of the tilted law).
        const double predicted =
            std::exp(sim.drift().antiderivative(x) + sim.drift().kappa() * sim.T()) / tilted_mass(sim.endpoint_law(), 1);
        const auto paths = sim.sample_paths({}, kN, seed + drift);
        double rounds = 0.0;
        for (const auto& p : paths) rounds += double(p.rounds);
        const double observed = double(kN) / rounds;
        const double z = (observed - predicted) / std::sqrt(predicted * (1.0 - predicted) / rounds);
        worst = std::max(worst, std::fabs(z));
        s << sim.drift().family() << ": predicted " << predicted << " observed " << observed << "; ";
    }
    return bound_result(worst, 3.0, "round acceptance vs quadrature identity: " + s.str());
}

OracleResult skeleton_invariants(std::uint64_t seed) {
    const ExactSimulator sim(reference_drift(1), 0.2, 2.0);
    RngStream times_rng(seed, 1900);
    double violations = 0.0;
    for (int i = 0; i < 20000; ++i) {
        std::vector<double> times;
        const int n = 1 + int(5 * times_rng.uniform());
        for (int k = 0; k < n; ++k) times.push_back(2.0 * times_rng.uniform());
        std::sort(times.begin(), times.end());
        RngStream rng(seed ^ 0x9e3779b97f4a7c15ull, i);
        const Skeleton s = sim.simulate(times, rng);
        const auto& p = s.points;
        bool ok = p.front() == SkeletonPoint{0.0, 0.2, 0.0} && p.back().t == 2.0;
        for (std::size_t k = 1; k < p.size(); ++k) ok = ok && p[k].t > p[k - 1].t && p[k].l >= p[k - 1].l;
        auto has = [&](double t) {
            return std::any_of(p.begin(), p.end(), [&](const SkeletonPoint& q) { return q.t == t; });
        };
        for (double t : times) ok = ok && has(t);
        for (double t : s.poisson_times) ok = ok && has(t);
        std::vector<double> all{0.0, 2.0};
        all.insert(all.end(), times.begin(), times.end());
        all.insert(all.end(), s.poisson_times.begin(), s.poisson_times.end());
        std::sort(all.begin(), all.end());
        all.erase(std::unique(all.begin(), all.end()), all.end());
        ok = ok && all.size() == p.size();
        if (!ok) violations += 1.0;
    }
    return bound_result(violations, 0.5, "ordering, monotone L and exact time set over 2e4 skeletons");
}

OracleResult thread_determinism(std::uint64_t seed) {
    const ExactSimulator sim(reference_drift(2), 0.0, 1.0);
    const std::vector<double> times{0.5};
    const auto one = sim.sample_paths(times, 2000, seed, 1);
    const auto many = sim.sample_paths(times, 2000, seed, 4);
    double mismatches = 0.0;
    for (std::size_t i = 0; i < one.size(); ++i)
        if (one[i].points != many[i].points) mismatches += 1.0;
    return bound_result(mismatches, 0.5, "1 vs 4 worker threads, 2000 paths");
}

std::vector<OracleTest> make_registry() {
    std::vector<OracleTest> t;
    auto add = [&](std::string name, std::string suite, std::vector<std::string> covers,
                   std::function<OracleResult(std::uint64_t)> fn) {
        t.push_back({std::move(name), std::move(suite), std::move(covers), std::move(fn)});
    };
    add("truncated_normal_ks", "primitives", {"sample_truncated_normal"}, truncated_normal_ks);
    add("truncated_rayleigh_ks", "primitives", {"sample_truncated_rayleigh"}, truncated_rayleigh_ks);
    add("linear_gaussian_tail_ks", "primitives", {"sample_linear_gaussian_tail"}, linear_gaussian_tail_ks);
    add("poisson_process", "primitives", {"sample_poisson_times"}, poisson_counts);
    add("local_time_density_mass", "primitives", {}, local_time_density_mass);
    add("levy_oracle_marginal", "primitives", {"levy_identity_oracle"}, levy_marginal);
    add("levy_oracle_joint_chi2", "primitives", {"levy_identity_oracle"}, levy_joint);
    add("bridge_L_given_endpoints_ks", "bridge", {"sample_L_given_endpoints"}, l_given_endpoints_ks);
    add("bridge_zero_increment_ks", "bridge", {"sample_B_conditional_zero_increment"}, zero_increment_ks);
    add("bridge_case_weights_quadrature", "bridge", {}, case_weights_quadrature);
    add("bridge_p2_quadrature", "bridge", {}, p2_quadrature);
    add("bridge_case_weights_sum", "bridge", {}, case_weights_sum);
    add("bridge_xi1_ks", "bridge", {"sample_xi1"}, [](std::uint64_t s) { return flat_end_ks(s, true); });
    add("bridge_xi3_ks", "bridge", {"sample_xi3"}, [](std::uint64_t s) { return flat_end_ks(s, false); });
    add("bridge_xi2_pairs_ks", "bridge", {"sample_xi2"},
        [](std::uint64_t s) { return xi2_marginals_ks(s, 64, 900); });
    add("bridge_xi2_envelope_ks", "bridge", {"sample_xi2_envelope"},
        [](std::uint64_t s) { return xi2_marginals_ks(s, 0, 950); });
    add("bridge_xi2_pairs_chi2", "bridge", {"sample_xi2"},
        [](std::uint64_t s) { return xi2_joint_chi2(s, 64, 980); });
    add("bridge_xi2_envelope_chi2", "bridge", {"sample_xi2_envelope"},
        [](std::uint64_t s) { return xi2_joint_chi2(s, 0, 990); });
    add("bridge_point_ks", "bridge", {"sample_bridge_point"}, bridge_point_ks);
    add("bridge_case_frequencies", "bridge", {"sample_bridge_point"}, bridge_case_frequencies);
    add("bridge_interpolate_midpoint_ks", "bridge", {"interpolate_skeleton"}, interpolate_midpoint_ks);
    add("bridge_uv_region_pullback", "bridge", {}, uv_region_pullback);
    add("endpoint_h_ks", "endpoint", {"sample_XT_from_h"}, xt_from_h_ks);
    add("endpoint_two_step_chi2_x0", "endpoint", {"sample_endpoint_theta_positive"},
        [](std::uint64_t s) { return endpoint_chi2(s, 0, 0.0, false, 1400); });
    add("endpoint_two_step_chi2_x05", "endpoint", {"sample_endpoint_theta_positive"},
        [](std::uint64_t s) { return endpoint_chi2(s, 0, 0.5, false, 1401); });
    add("endpoint_two_step_sine_chi2_x05", "endpoint", {"sample_endpoint_theta_positive"},
        [](std::uint64_t s) { return endpoint_chi2(s, 2, 0.5, false, 1402); });
    add("endpoint_mixture_chi2_x0", "endpoint", {"sample_endpoint_theta_negative"},
        [](std::uint64_t s) { return endpoint_chi2(s, 1, 0.0, true, 1403); });
    add("endpoint_mixture_chi2_x05", "endpoint", {"sample_endpoint_theta_negative"},
        [](std::uint64_t s) { return endpoint_chi2(s, 1, 0.5, true, 1404); });
    add("endpoint_atom_mass", "endpoint", {"sample_endpoint_theta_positive", "sample_endpoint_theta_negative"},
        endpoint_atom_mass);
    add("endpoint_sampler_cross_check", "endpoint", {"sample_endpoint_theta_negative"}, endpoint_cross_check);
    add("endpoint_mixture_components_normalised", "endpoint", {}, mixture_components_normalised);
    add("endpoint_tilted_mass_refinement", "endpoint", {}, tilted_mass_refinement);
    add("endpoint_zero_drift_vs_levy", "endpoint", {"sample_endpoint_theta_positive"}, zero_drift_endpoint_vs_levy);
    add("algorithm_brownian_fdd", "algorithm", {"simulate_skeleton"}, brownian_fdd);
    add("algorithm_constant_drift", "algorithm", {"simulate_skeleton"}, constant_drift_terminal);
    add("algorithm_thinning_rate", "algorithm", {"simulate_skeleton"}, thinning_acceptance_rate);
    add("algorithm_skeleton_invariants", "algorithm", {"simulate_skeleton"}, skeleton_invariants);
    add("algorithm_thread_determinism", "algorithm", {}, thread_determinism);
    return t;
}

}  // namespace

const std::vector<OracleTest>& oracle_registry() {
    static const std::vector<OracleTest> registry = make_registry();
    return registry;
}

const std::vector<std::string>& sampler_manifest() {
    static const std::vector<std::string> manifest{
        "sample_truncated_normal",        "sample_truncated_rayleigh",
        "sample_linear_gaussian_tail",
        "sample_poisson_times",           "sample_L_given_endpoints",
        "sample_B_conditional_zero_increment", "sample_xi1",
        "sample_xi3",                     "sample_xi2",
        "sample_xi2_envelope",            "sample_bridge_point",
        "interpolate_skeleton",           "sample_XT_from_h",
        "sample_endpoint_theta_positive", "sample_endpoint_theta_negative",
        "levy_identity_oracle",           "simulate_skeleton"};
    return manifest;
}

std::vector<std::string> uncovered_samplers() {
    std::vector<std::string> missing;
    for (const auto& s : sampler_manifest()) {
        const bool covered = std::any_of(oracle_registry().begin(), oracle_registry().end(), [&](const OracleTest& t) {
            return std::find(t.covers.begin(), t.covers.end(), s) != t.covers.end();
        });
        if (!covered) missing.push_back(s);
    }
    return missing;
}

std::vector<OracleResult> run_oracle_suite(std::string_view filter, std::uint64_t seed,
                                           const std::function<void(const OracleResult&)>& on_result) {
    const auto& registry = oracle_registry();
    std::vector<const OracleTest*> selected;
    for (const auto& t : registry)
        if (filter.empty() || t.name.find(filter) != std::string::npos || t.suite == filter) selected.push_back(&t);
    const double p_threshold = kFamilyAlpha / static_cast<double>(registry.size());

    std::vector<OracleResult> results;
    for (const OracleTest* t : selected) {
        OracleResult r;
        try {
            r = t->run(seed);
        } catch (const std::exception& e) {
            r = bound_result(kInf, 0.0, std::string("threw: ") + e.what());
            r.kind = "error";
            r.pass = false;
        }
        r.name = t->name;
        r.suite = t->suite;
        if (r.kind == "p_value") {
            r.threshold = p_threshold;
            r.pass = r.value > p_threshold;
        }
        if (on_result) on_result(r);
        results.push_back(std::move(r));
    }
    return results;
}

std::string oracle_report_json(const std::vector<OracleResult>& results, std::uint64_t seed) {
    nlohmann::json tests = nlohmann::json::array();
    bool all = true;
    for (const auto& r : results) {
        all = all && r.pass;
        tests.push_back({{"name", r.name},
                         {"suite", r.suite},
                         {"kind", r.kind},
                         {"statistic", std::isfinite(r.value) ? nlohmann::json(r.value) : nlohmann::json(nullptr)},
                         {"threshold", r.threshold},
                         {"pass", r.pass},
                         {"detail", r.detail}});
    }
    const auto missing = uncovered_samplers();
    nlohmann::json doc{{"seed", seed}, {"tests", tests}, {"uncovered_samplers", missing},
                       {"pass", all && missing.empty()}};
    return doc.dump(2);
}

}  // namespace exdiff
