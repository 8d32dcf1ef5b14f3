#include "exdiff/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "exdiff/distributions.hpp"
#include "exdiff/exact.hpp"

namespace exdiff {

namespace {

template <unsigned Points>
double gk(const std::function<double(double)>& f, double a, double b, double tol, double* err_out) {
    double err = 0.0;
    double l1 = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, Points>::integrate(
        f, a, b, 15, tol, &err, &l1);
    if (err_out) *err_out = err;
    if (!std::isfinite(v) || err > tol * std::max(1.0, l1)) {
        std::ostringstream msg;
        msg << "quadrature over [" << a << ", " << b << "] reached error " << err
            << ", requested " << tol;
        throw std::runtime_error(msg.str());
    }
    return v;
}

// Partial panels inside one already checked at construction. Boost's error
// estimate is meaningless on very short intervals, so only finiteness is checked.
double gk15_partial(const std::function<double(double)>& f, double a, double b) {
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0);
    if (!std::isfinite(v)) throw std::runtime_error("quadrature cdf: non-finite partial panel");
    return v;
}

}  // namespace

// ---- Euler-Maruyama ------------------------------------------------------------

std::vector<double> euler_maruyama(const DriftSpec& d, double x, double T, double dt,
                                   std::size_t n, std::uint64_t seed, unsigned threads) {
    if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("euler: dt and T must be positive");
    const double steps_real = T / dt;
    const auto steps = static_cast<std::uint64_t>(std::llround(steps_real));
    if (steps == 0 || std::fabs(double(steps) * dt - T) > 1e-9 * T)
        throw std::invalid_argument("euler: dt must divide T");
    const double sq = std::sqrt(dt);
    std::vector<double> out(n);
    parallel_for(n, threads, [&](std::size_t i) {
        RngStream rng(seed, kEulerStreamBase + i);
        double v = x;
        for (std::uint64_t k = 0; k < steps; ++k) v += d.alpha(v) * dt + sq * rng.normal();
        out[i] = v;
    });
    return out;
}

// ---- Quadrature ----------------------------------------------------------------

double integrate(const std::function<double(double)>& f, double a, double b, double tol,
                 double* error) {
    if (a == b) return 0.0;
    return gk<31>(f, a, b, tol, error);
}

QuadratureCdf::QuadratureCdf(std::function<double(double)> density, double lo, double hi,
                             std::vector<double> breakpoints, double tolerance, int subdivisions)
    : density_(std::move(density)), tolerance_(tolerance) {
    if (!(lo < hi)) throw std::invalid_argument("quadrature cdf: need lo < hi");
    std::vector<double> knots{lo};
    std::sort(breakpoints.begin(), breakpoints.end());
    for (double p : breakpoints)
        if (p > lo && p < hi && p > knots.back()) knots.push_back(p);
    knots.push_back(hi);

    edges_.push_back(lo);
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double a = knots[k];
        const double b = knots[k + 1];
        if (std::isfinite(a) && std::isfinite(b)) {
            for (int s = 1; s < subdivisions; ++s) edges_.push_back(a + (b - a) * s / subdivisions);
        }
        edges_.push_back(b);
    }
    cumulative_.push_back(0.0);
    for (std::size_t k = 0; k + 1 < edges_.size(); ++k) {
        double err = 0.0;
        const double piece = gk<31>(density_, edges_[k], edges_[k + 1], tolerance_, &err);
        error_ += err;
        cumulative_.push_back(cumulative_.back() + piece);
    }
    if (error_ > tolerance_ * std::max(1.0, cumulative_.back())) {
        std::ostringstream msg;
        msg << "quadrature cdf: accumulated error " << error_ << " exceeds " << tolerance_;
        throw std::runtime_error(msg.str());
    }
}

void QuadratureCdf::tabulate(int points, double max_error) {
    if (points < 1) throw std::invalid_argument("quadrature cdf: need points >= 1");
    const double scale = max_error * std::max(total_mass(), 1e-300);
    std::vector<Node> nodes;
    // Appends nodes on (p.u, q.u], halving until the midpoint check passes.
    std::function<void(const Node&, const Node&, int)> refine = [&](const Node& p, const Node& q, int depth) {
        const double mid = 0.5 * (p.u + q.u);
        const Node m{mid, p.cdf + gk15_partial(density_, p.u, mid), density_(mid)};
        nodes_ = {p, q};
        const double err = std::fabs(hermite(0, mid) - m.cdf);
        if (err <= scale) {
            nodes.push_back(q);
            return;
        }
        if (depth >= 20) {
            std::ostringstream msg;
            msg << "quadrature cdf: interpolation error " << err << " at " << mid;
            throw std::runtime_error(msg.str());
        }
        refine(p, m, depth + 1);
        refine(m, q, depth + 1);
    };
    for (std::size_t k = 0; k + 1 < edges_.size(); ++k) {
        const double a = edges_[k];
        const double b = edges_[k + 1];
        if (!std::isfinite(a) || !std::isfinite(b)) continue;
        if (nodes.empty() || nodes.back().u != a) nodes.push_back({a, cumulative_[k], density_(a)});
        for (int s = 1; s <= points; ++s) {
            const Node p = nodes.back();
            const double hi = s == points ? b : a + (b - a) * s / points;
            const double cdf = s == points ? cumulative_[k + 1] : p.cdf + gk15_partial(density_, p.u, hi);
            refine(p, {hi, cdf, density_(hi)}, 0);
        }
    }
    nodes_ = std::move(nodes);
}

double QuadratureCdf::hermite(std::size_t k, double u) const {
    const Node& p = nodes_[k];
    const Node& q = nodes_[k + 1];
    const double h = q.u - p.u;
    const double t = (u - p.u) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * p.cdf + (t3 - 2 * t2 + t) * h * p.density +
           (-2 * t3 + 3 * t2) * q.cdf + (t3 - t2) * h * q.density;
}

double QuadratureCdf::unnormalized(double u) const {
    if (u <= edges_.front()) return 0.0;
    if (u >= edges_.back()) return cumulative_.back();
    if (!nodes_.empty() && u > nodes_.front().u && u < nodes_.back().u) {
        const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), u,
                                         [](double v, const Node& n) { return v < n.u; });
        const auto k = static_cast<std::size_t>(it - nodes_.begin()) - 1;
        return hermite(k, u);
    }
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), u);
    const auto k = static_cast<std::size_t>(it - edges_.begin()) - 1;
    if (u == edges_[k]) return cumulative_[k];
    // Unbounded panels need the adaptive rule; the fixed 15-point one is only
    // accurate on the short finite panels.
    if (!std::isfinite(edges_[k]) || !std::isfinite(edges_[k + 1]))
        return cumulative_[k] + gk<31>(density_, edges_[k], u, tolerance_, nullptr);
    return cumulative_[k] + gk15_partial(density_, edges_[k], u);
}

double QuadratureCdf::operator()(double u) const {
    return std::clamp(unnormalized(u) / total_mass(), 0.0, 1.0);
}

// ---- Tests -----------------------------------------------------------------------

double kolmogorov_p_value(double d, double effective_n) {
    const double sn = std::sqrt(effective_n);
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-17) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestStatistic ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf,
                            const std::function<double(double)>& cdf_left) {
    if (samples.empty()) throw std::invalid_argument("ks: no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < samples.size()) {
        std::size_t j = i;
        while (j < samples.size() && samples[j] == samples[i]) ++j;
        const double v = samples[i];
        const double f = cdf(v);
        const double f_left = cdf_left ? cdf_left(v) : f;
        d = std::max({d, std::fabs(double(i) / n - f_left), std::fabs(double(j) / n - f)});
        i = j;
    }
    return {d, kolmogorov_p_value(d, n), 0.0};
}

TestStatistic ks_one_sample_sorted(std::span<const double> sorted, std::span<const double> cdf_values) {
    if (sorted.size() != cdf_values.size() || sorted.empty())
        throw std::invalid_argument("ks: sample and CDF arrays must match and be nonempty");
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        d = std::max({d, (double(i) + 1.0) / n - cdf_values[i], cdf_values[i] - double(i) / n});
    }
    return {d, kolmogorov_p_value(d, n), 0.0};
}

TestStatistic ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::fabs(double(i) / na - double(j) / nb));
    }
    return {d, kolmogorov_p_value(d, na * nb / (na + nb)), 0.0};
}

TestStatistic chi_square_test(std::span<const double> observed, std::span<const double> probabilities,
                              double min_expected) {
    if (observed.size() != probabilities.size() || observed.empty())
        throw std::invalid_argument("chi-square: observed and probabilities must match");
    const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
    std::vector<double> obs;
    std::vector<double> exp;
    double acc_o = 0.0;
    double acc_e = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        acc_o += observed[i];
        acc_e += n * probabilities[i];
        if (acc_e >= min_expected) {
            obs.push_back(acc_o);
            exp.push_back(acc_e);
            acc_o = acc_e = 0.0;
        }
    }
    if (acc_e > 0.0 || acc_o > 0.0) {
        if (exp.empty()) {
            obs.push_back(acc_o);
            exp.push_back(acc_e);
        } else {
            obs.back() += acc_o;
            exp.back() += acc_e;
        }
    }
    double stat = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double diff = obs[i] - exp[i];
        stat += exp[i] > 0.0 ? diff * diff / exp[i] : (obs[i] > 0.0 ? kInf : 0.0);
    }
    const double dof = static_cast<double>(obs.size()) - 1.0;
    const double p = dof > 0.0 ? (std::isfinite(stat) ? boost::math::gamma_q(0.5 * dof, 0.5 * stat) : 0.0)
                               : 1.0;
    return {stat, p, dof};
}

int find_cell(std::span<const double> edges, double u) {
    if (edges.size() < 2 || u < edges.front() || u >= edges.back()) return -1;
    const auto it = std::upper_bound(edges.begin(), edges.end(), u);
    return static_cast<int>(it - edges.begin()) - 1;
}

// ---- Local time oracle ---------------------------------------------------------------

std::vector<std::array<double, 2>> levy_identity_oracle(double T, std::size_t n, RngStream& rng,
                                                        int grid_steps) {
    if (!(T > 0.0) || grid_steps < 1) throw std::invalid_argument("levy oracle: bad arguments");
    const double dt = T / grid_steps;
    const double sd = std::sqrt(dt);
    std::vector<std::array<double, 2>> out(n);
    for (auto& pair : out) {
        double w = 0.0;
        double running_max = 0.0;
        for (int k = 0; k < grid_steps; ++k) {
            const double next = w + sd * rng.normal();
            const double gap = next - w;
            // Maximum of the Brownian bridge from w to next over dt.
            const double bridge_max =
                0.5 * (w + next + std::sqrt(gap * gap - 2.0 * dt * std::log(rng.uniform())));
            running_max = std::max(running_max, bridge_max);
            w = next;
        }
        pair = {running_max - w, running_max};
    }
    return out;
}

// ---- Density estimates ----------------------------------------------------------------

double DensityGrid::trapezoid_mass() const {
    auto trapz = [](const std::vector<double>& axis, auto value_at) {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < axis.size(); ++i)
            s += 0.5 * (value_at(i) + value_at(i + 1)) * (axis[i + 1] - axis[i]);
        return s;
    };
    if (axes.size() == 1) return trapz(axes[0], [&](std::size_t i) { return values[i]; });
    if (axes.size() == 2) {
        const std::size_t m = axes[1].size();
        return trapz(axes[0], [&](std::size_t i) {
            return trapz(axes[1], [&](std::size_t j) { return values[i * m + j]; });
        });
    }
    throw std::logic_error("density grid: only one or two axes are supported");
}

double silverman_bandwidth(std::span<const double> samples) {
    const auto n = samples.size();
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / double(n);
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / double(n - 1));
    auto quantile = [&](double p) {
        const double pos = p * double(n - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, n - 1);
        return s[lo] + (pos - double(lo)) * (s[hi] - s[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1.0;
    return 0.9 * spread * std::pow(double(n), -0.2);
}

std::vector<double> kde_at(std::span<const double> samples, double bandwidth, std::span<const double> points) {
    if (samples.size() < 2) throw std::invalid_argument("kde: need at least two samples");
    const double h = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(samples);
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double norm = 1.0 / (double(s.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    std::vector<double> out;
    out.reserve(points.size());
    for (double u : points) {
        const auto first = std::lower_bound(s.begin(), s.end(), u - 9.0 * h);
        const auto last = std::upper_bound(s.begin(), s.end(), u + 9.0 * h);
        double acc = 0.0;
        for (auto it = first; it != last; ++it) {
            const double z = (u - *it) / h;
            acc += std::exp(-0.5 * z * z);
        }
        out.push_back(acc * norm);
    }
    return out;
}

DensityGrid kde(std::span<const double> samples, double bandwidth, int points) {
    if (samples.size() < 2) throw std::invalid_argument("kde: need at least two samples");
    if (points < 2) throw std::invalid_argument("kde: need at least two grid points");
    const double h = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(samples);
    const auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *min_it - 3.0 * h;
    const double hi = *max_it + 3.0 * h;

    DensityGrid g;
    g.axes.emplace_back(points);
    for (int i = 0; i < points; ++i) g.axes[0][i] = lo + (hi - lo) * i / (points - 1);
    g.values = kde_at(samples, h, g.axes[0]);
    g.total_mass = g.trapezoid_mass();
    return g;
}

// ---- Endpoint law by quadrature ----------------------------------------------------------

namespace {

template <unsigned Points>
double nested_continuous_mass(const EndpointLaw& law, double b_lo, double b_hi, double l_lo,
                              double l_hi, double tol) {
    auto inner = [&](double b) {
        return gk<Points>([&](double l) { return l > 0.0 ? law.gtilde(b, l) : 0.0; }, l_lo, l_hi,
                          tol, nullptr);
    };
    return gk<Points>(inner, b_lo, b_hi, tol, nullptr);
}

template <unsigned Points>
double atom_mass(const EndpointLaw& law, double b_lo, double b_hi, double tol) {
    return gk<Points>([&](double b) { return law.gstar_tilde(b); }, b_lo, b_hi, tol, nullptr);
}

template <unsigned Points>
double full_mass(const EndpointLaw& law, double tol) {
    const double x = law.x();
    double total = nested_continuous_mass<Points>(law, -kInf, 0.0, 0.0, kInf, tol) +
                   nested_continuous_mass<Points>(law, 0.0, kInf, 0.0, kInf, tol);
    if (x > 0.0) total += atom_mass<Points>(law, 0.0, kInf, tol);
    if (x < 0.0) total += atom_mass<Points>(law, -kInf, 0.0, tol);
    return total;
}

}  // namespace

double tilted_mass(const EndpointLaw& law, int refinement) {
    if (refinement <= 0) return full_mass<15>(law, 1e-9);
    return full_mass<31>(law, 1e-12);
}

std::vector<double> endpoint_cell_probabilities(const EndpointLaw& law,
                                                std::span<const double> b_edges,
                                                std::span<const double> l_edges) {
    if (b_edges.size() < 2 || l_edges.size() < 2 || b_edges.front() != -kInf ||
        b_edges.back() != kInf || l_edges.front() != 0.0 || l_edges.back() != kInf) {
        throw std::invalid_argument("endpoint cells: edges must cover (-inf, inf) x [0, inf)");
    }
    const std::size_t nb = b_edges.size() - 1;
    const std::size_t nl = l_edges.size() - 1;
    std::vector<double> out(nb * nl + nb, 0.0);
    for (std::size_t i = 0; i < nb; ++i) {
        // Split at 0 so the kink of |b| never falls inside a panel.
        std::vector<std::pair<double, double>> pieces;
        if (b_edges[i] < 0.0 && b_edges[i + 1] > 0.0) {
            pieces = {{b_edges[i], 0.0}, {0.0, b_edges[i + 1]}};
        } else {
            pieces = {{b_edges[i], b_edges[i + 1]}};
        }
        for (auto [lo, hi] : pieces) {
            for (std::size_t j = 0; j < nl; ++j)
                out[i * nl + j] += nested_continuous_mass<31>(law, lo, hi, l_edges[j], l_edges[j + 1], 1e-11);
            out[nb * nl + i] += atom_mass<31>(law, lo, hi, 1e-11);
        }
    }
    const double total = std::accumulate(out.begin(), out.end(), 0.0);
    for (double& v : out) v /= total;
    return out;
}

double endpoint_atom_probability(const EndpointLaw& law) {
    const double x = law.x();
    if (x == 0.0) return 0.0;
    const double atom = x > 0.0 ? atom_mass<31>(law, 0.0, kInf, 1e-12) : atom_mass<31>(law, -kInf, 0.0, 1e-12);
    return atom / tilted_mass(law, 1);
}

}  // namespace exdiff
