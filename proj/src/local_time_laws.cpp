#include "exdiff/local_time_laws.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

#include "detail.hpp"
#include "exdiff/debug.hpp"
#include "exdiff/distributions.hpp"

namespace exdiff {

namespace {

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Probability that the bridge does not reach 0 from a to b in time dt.
double no_touch_probability(double a, double b, double dt) {
    if (!(a * b > 0.0)) return 0.0;
    return -std::expm1(-2.0 * a * b / dt);
}

// Stable closed form of P(L_{s2} = l at the near end).
// `a` is |b| at the flat end, `k` = l3 - l1 + |b| at the far end, `near` and
// `far` the durations adjacent to each end.
double flat_end_probability(double a, double k, double near, double far, double sigma) {
    if (!(a > 0.0)) return 0.0;
    const double total = near + far;
    const double mean_a = (a * far - k * near) / total;
    const double mean_b = mean_a - 2.0 * a * far / total;
    // c e^{-(a+k)^2/2 total} sigma sqrt(2 pi) [...] collapses to
    //   Phi(mean_a/sigma) - (k - a)/(k + a) e^{2 a k / total} Phi(mean_b/sigma).
    const double first = std::exp(log_std_normal_cdf(mean_a / sigma));
    const double ratio = (k - a) / (k + a);
    if (ratio == 0.0) return first;
    const double log_second = 2.0 * a * k / total + log_std_normal_cdf(mean_b / sigma);
    const double second = std::exp(log_second);
    return first - ratio * second;
}

struct Durations {
    double d12;
    double d23;
    double d13;
};

Durations durations(const BridgeQuery& q) { return {q.s2 - q.s1, q.s3 - q.s2, q.s3 - q.s1}; }

double log_f13(const BridgeQuery& q) {
    return log_joint_density_f({q.b1, q.s3 - q.s1, q.b3, q.l3 - q.l1});
}

// log of w e^{-w^2 / (2 var)} with w = k + y.
double log_linear_gauss(double k, double y, double var) {
    const double w = k + y;
    return std::log(w) - 0.5 * w * w / var;
}

double log_linear_gauss_sup(double k, double var) {
    const double sd = std::sqrt(var);
    if (k <= sd) return 0.5 * std::log(var) - 0.5;
    return log_linear_gauss(k, 0.0, var);
}

// Shared rejection step of the two flat-end samplers: `a` = |b| at the flat
// end, proposal N(a, near) on (0, inf), acceptance
// (1 - e^{-2 a y / near}) G(y) / G_max with G(y) = (k + y) e^{-(k + y)^2 / 2 far}.
double flat_end_ratio(double a, double k, double near, double far, double y) {
    if (!(y > 0.0)) return 0.0;
    const double touch = -std::expm1(-2.0 * a * y / near);
    return touch * std::exp(log_linear_gauss(k, y, far) - log_linear_gauss_sup(k, far));
}

double sample_flat_end(double a, double k, double near, double far, RngStream& rng,
                       const char* where) {
    for (std::uint64_t it = 0;; ++it) {
        detail::check_iterations(it, where);
        const double y = sample_truncated_normal(a, near, 0.0, rng);
        const double ratio = detail::checked_ratio(flat_end_ratio(a, k, near, far, y), where);
        if (rng.uniform() <= ratio) return y;
    }
}

}  // namespace

// ---- BridgeQuery / UVRegion ---------------------------------------------------

void BridgeQuery::validate() const {
    if (!(s1 < s2 && s2 < s3)) throw std::domain_error("bridge query: need s1 < s2 < s3");
    if (!(l1 >= 0.0) || !(l3 >= l1))
        throw std::domain_error("bridge query: need 0 <= l1 <= l3");
    if (!std::isfinite(b1) || !std::isfinite(b3))
        throw std::domain_error("bridge query: endpoint values must be finite");
    if (l1 == l3 && !(b1 * b3 > 0.0)) {
        throw std::domain_error(
            "bridge query: constant local time requires b1 and b3 of the same strict sign");
    }
}

UVRegion UVRegion::from_query(const BridgeQuery& q) {
    const double a = std::fabs(q.b1);
    const double c = std::fabs(q.b3);
    UVRegion r{};
    r.l1 = q.l1;
    r.l3 = q.l3;
    r.abs_b1 = a;
    r.abs_b3 = c;
    // Pull back l2 = l3, l2 = l1 and b2 = 0 through the transform.
    r.lower_offset = q.l1 - q.l3 - a + c;
    r.upper_offset = q.l3 - q.l1 - a + c;
    r.sum_offset = q.l3 - q.l1 + a + c;
    return r;
}

bool UVRegion::contains(double u, double v) const {
    return v >= u + lower_offset && v <= u + upper_offset && v >= -u + sum_offset;
}

BridgePoint UVRegion::to_bridge(double u, double v) const {
    const double l2 = 0.5 * (u - v + l3 + l1 - abs_b1 + abs_b3);
    const double b2 = 0.5 * (u + v - l3 + l1 - abs_b1 - abs_b3);
    return {std::max(b2, 0.0), std::clamp(l2, l1, l3)};
}

std::array<double, 2> UVRegion::to_uv(double abs_b2, double l2) const {
    return {l2 - l1 + abs_b2 + abs_b1, l3 - l2 + abs_b3 + abs_b2};
}

// ---- L given endpoints --------------------------------------------------------

double prob_local_time_constant(const EndpointPair& e) {
    if (!(e.s2 > e.s1)) throw std::domain_error("endpoint pair: need s2 > s1");
    return no_touch_probability(e.b1, e.b2, e.s2 - e.s1);
}

double sample_L_given_endpoints(const EndpointPair& e, RngStream& rng) {
    const double p_flat = prob_local_time_constant(e);
    if (p_flat > 0.0 && rng.uniform() <= p_flat) return e.l1;
    const double floor = std::fabs(e.b1) + std::fabs(e.b2);
    const double y = sample_truncated_rayleigh(e.s2 - e.s1, floor, rng);
    return e.l1 + (y - floor);
}

// ---- constant local time ------------------------------------------------------

GaussianParams zero_increment_proposal(const BridgeQuery& q) {
    const auto [d12, d23, d13] = durations(q);
    return {(q.b1 * d23 + q.b3 * d12) / d13, d12 * d23 / d13};
}

double zero_increment_acceptance(const BridgeQuery& q, double b2) {
    const auto [d12, d23, d13] = durations(q);
    return no_touch_probability(q.b1, b2, d12) * no_touch_probability(b2, q.b3, d23);
}

double zero_increment_density(double b2, const BridgeQuery& q) {
    const auto [d12, d23, d13] = durations(q);
    if (!(b2 * q.b1 > 0.0)) return 0.0;
    const auto [mean, var] = zero_increment_proposal(q);
    return normal_pdf(b2, mean, var) * zero_increment_acceptance(q, b2) /
           no_touch_probability(q.b1, q.b3, d13);
}

double sample_B_conditional_zero_increment(const BridgeQuery& q, RngStream& rng) {
    q.validate();
    if (q.l1 != q.l3) throw std::domain_error("zero-increment bridge: need l1 == l3");
    const auto [mean, var] = zero_increment_proposal(q);
    const double side = sign_of(q.b1);
    for (std::uint64_t it = 0;; ++it) {
        detail::check_iterations(it, "zero-increment bridge");
        // Propose on the positive half-line in mirrored coordinates.
        const double z = side * sample_truncated_normal(side * mean, var, 0.0, rng);
        const double ratio =
            detail::checked_ratio(zero_increment_acceptance(q, z), "zero-increment bridge");
        if (rng.uniform() <= ratio) return z;
    }
}

// ---- increasing local time ----------------------------------------------------

CaseWeights compute_case_weights(const BridgeQuery& q) {
    q.validate();
    if (!(q.l3 > q.l1)) throw std::domain_error("case weights: need l3 > l1");
    const auto [d12, d23, d13] = durations(q);
    const double dl = q.l3 - q.l1;

    CaseWeights w;
    w.sigma2 = d12 * d23 / d13;
    const double sigma = std::sqrt(w.sigma2);
    w.k1 = dl + std::fabs(q.b3);
    w.k2 = dl + std::fabs(q.b1);
    const double log_f = log_f13(q);
    constexpr double kLog2Pi = 1.83787706640934548356;
    w.c1 = std::exp(-log_f - kLog2Pi - 0.5 * std::log(d12) - 1.5 * std::log(d23));
    w.c2 = std::exp(-log_f - kLog2Pi - 1.5 * std::log(d12) - 0.5 * std::log(d23));
    w.mu[0] = (q.b1 * d23 - w.k1 * d12) / d13;
    w.mu[1] = w.mu[0] - 2.0 * q.b1 * d23 / d13;
    w.mu[2] = (q.b1 * d23 + w.k1 * d12) / d13;
    w.mu[3] = w.mu[2] - 2.0 * q.b1 * d23 / d13;
    w.nu[0] = (q.b3 * d12 - w.k2 * d23) / d13;
    w.nu[1] = w.nu[0] - 2.0 * q.b3 * d12 / d13;
    w.nu[2] = (q.b3 * d12 + w.k2 * d23) / d13;
    w.nu[3] = w.nu[2] - 2.0 * q.b3 * d12 / d13;

    // The b < 0 branches are the b > 0 branches reflected (mu3 = -mu1(|b1|), ...).
    w.p1 = std::clamp(flat_end_probability(std::fabs(q.b1), w.k1, d12, d23, sigma), 0.0, 1.0);
    w.p3 = std::clamp(flat_end_probability(std::fabs(q.b3), w.k2, d23, d12, sigma), 0.0, 1.0);
    if (debug::mutation_active(debug::Mutation::CorruptP1)) w.p1 *= 1.01;

    const double raw_p2 = 1.0 - w.p1 - w.p3;
    w.p2 = std::clamp(raw_p2, 0.0, 1.0);
    w.clamp_adjustment = w.p2 - raw_p2;
    if (std::fabs(w.clamp_adjustment) > 1e-9) {
        std::clog << "exdiff: case weights clamped by " << w.clamp_adjustment
                  << " (p1=" << w.p1 << ", p3=" << w.p3 << ")\n";
    }
    return w;
}

double xi1_density(double b2, const BridgeQuery& q) {
    const auto [d12, d23, d13] = durations(q);
    if (!(b2 * q.b1 > 0.0)) return 0.0;
    const double dl = q.l3 - q.l1;
    return std::exp(log_atom_density_fstar(q.b1, d12, b2) +
                    log_joint_density_f({b2, d23, q.b3, dl}) - log_f13(q));
}

double xi3_density(double b2, const BridgeQuery& q) {
    const auto [d12, d23, d13] = durations(q);
    if (!(b2 * q.b3 > 0.0)) return 0.0;
    const double dl = q.l3 - q.l1;
    return std::exp(log_joint_density_f({q.b1, d12, b2, dl}) +
                    log_atom_density_fstar(b2, d23, q.b3) - log_f13(q));
}

double xi2_density(double b2, double l2, const BridgeQuery& q) {
    const auto [d12, d23, d13] = durations(q);
    if (!(l2 > q.l1 && l2 < q.l3)) return 0.0;
    return std::exp(log_joint_density_f({q.b1, d12, b2, l2 - q.l1}) +
                    log_joint_density_f({b2, d23, q.b3, q.l3 - l2}) - log_f13(q));
}

double xi1_acceptance_ratio(const BridgeQuery& q, double b2) {
    if (!(b2 * q.b1 > 0.0)) return 0.0;
    const auto [d12, d23, d13] = durations(q);
    return flat_end_ratio(std::fabs(q.b1), q.l3 - q.l1 + std::fabs(q.b3), d12, d23,
                          std::fabs(b2));
}

double xi3_acceptance_ratio(const BridgeQuery& q, double b2) {
    if (!(b2 * q.b3 > 0.0)) return 0.0;
    const auto [d12, d23, d13] = durations(q);
    return flat_end_ratio(std::fabs(q.b3), q.l3 - q.l1 + std::fabs(q.b1), d23, d12,
                          std::fabs(b2));
}

double sample_xi1(const BridgeQuery& q, RngStream& rng) {
    q.validate();
    if (!(q.b1 != 0.0) || !(q.l3 > q.l1))
        throw std::domain_error("xi1: need b1 != 0 and l3 > l1 (otherwise p1 = 0)");
    const auto [d12, d23, d13] = durations(q);
    const double y = sample_flat_end(std::fabs(q.b1), q.l3 - q.l1 + std::fabs(q.b3), d12, d23,
                                     rng, "xi1 sampler");
    return sign_of(q.b1) * y;
}

double sample_xi3(const BridgeQuery& q, RngStream& rng) {
    q.validate();
    if (!(q.b3 != 0.0) || !(q.l3 > q.l1))
        throw std::domain_error("xi3: need b3 != 0 and l3 > l1 (otherwise p3 = 0)");
    const auto [d12, d23, d13] = durations(q);
    const double y = sample_flat_end(std::fabs(q.b3), q.l3 - q.l1 + std::fabs(q.b1), d23, d12,
                                     rng, "xi3 sampler");
    return sign_of(q.b3) * y;
}

namespace {

// Envelope sampler for the interior case. Target in (u, v) is
// rho_a(u) rho_c(v) on R2 with rho_s(y) = (y / s) e^{-y^2 / 2s}. For fixed u the
// v-section is [lo(u), hi(u)]; the u-marginal rho_a(u) W(u) is dominated by a
// piecewise-constant envelope with a Rayleigh tail, and v | u is drawn exactly.
class InteriorEnvelope {
  public:
    explicit InteriorEnvelope(const BridgeQuery& q)
        : region_(UVRegion::from_query(q)),
          a_(q.s2 - q.s1),
          c_(q.s3 - q.s2),
          abs_b1_(std::fabs(q.b1)),
          dl_(q.l3 - q.l1) {
        build();
    }

    std::array<double, 2> sample(RngStream& rng) const {
        for (std::uint64_t it = 0;; ++it) {
            detail::check_iterations(it, "xi2 envelope");
            const double pick = rng.uniform() * cumulative_.back();
            const auto idx = static_cast<std::size_t>(
                std::upper_bound(cumulative_.begin(), cumulative_.end(), pick) -
                cumulative_.begin());
            double u;
            double log_ratio;
            if (idx >= cells_.size()) {
                u = sample_truncated_rayleigh(a_, tail_start_, rng);
                log_ratio = log_w(u) - log_tail_w_bound_;
            } else {
                const Cell& cell = cells_[idx];
                u = cell.lo + (cell.hi - cell.lo) * rng.uniform();
                log_ratio = log_rho(u, a_) + log_w(u) - cell.log_bound;
            }
            const double ratio = detail::checked_ratio(
                log_ratio == -kInf ? 0.0 : std::exp(log_ratio), "xi2 envelope");
            if (rng.uniform() > ratio) continue;
            const double lo = v_low(u);
            const double hi = v_high(u);
            const double span = -0.5 * (hi * hi - lo * lo) / c_;
            const double v2 = lo * lo - 2.0 * c_ * std::log1p(rng.uniform() * std::expm1(span));
            const double v = std::sqrt(std::max(v2, 0.0));
            return {u, std::clamp(v, lo, hi)};
        }
    }

  private:
    struct Cell {
        double lo;
        double hi;
        double log_bound;
    };

    static double log_rho(double y, double var) {
        if (!(y > 0.0)) return -kInf;
        return std::log(y / var) - 0.5 * y * y / var;
    }

    double v_low(double u) const {
        return std::max(region_.sum_offset - u, u + region_.lower_offset);
    }
    double v_high(double u) const { return u + region_.upper_offset; }

    // log of P(v in [lo(u), hi(u)]) under rho_c.
    double log_w(double u) const {
        if (u <= abs_b1_) return -kInf;
        const double lo = v_low(u);
        const double hi = v_high(u);
        if (!(hi > lo)) return -kInf;
        return detail::log_diff_exp(-0.5 * lo * lo / c_, -0.5 * hi * hi / c_);
    }

    double log_w_bound(double lo_min, double hi_max, double len_max) const {
        const double by_mass =
            detail::log_diff_exp(-0.5 * lo_min * lo_min / c_, -0.5 * hi_max * hi_max / c_);
        const double peak_v = std::clamp(std::sqrt(c_), lo_min, hi_max);
        const double by_length = std::log(len_max) + log_rho(peak_v, c_);
        return std::min(by_mass, by_length);
    }

    void build() {
        const double sa = std::sqrt(a_);
        const double sc = std::sqrt(c_);
        const double vertex = abs_b1_ + dl_;  // minimiser of lo(u)
        const double start = abs_b1_;
        tail_start_ = std::max(abs_b1_, sa) + dl_ + 10.0 * sa;

        std::vector<double> edges{start};
        constexpr std::size_t kMaxCells = 4000;
        double u = start;
        while (u < tail_start_ && edges.size() <= kMaxCells) {
            const double scale_u = std::min(sa, a_ / std::max(u, sa));
            const double hv = v_high(u);
            const double scale_v = std::min(sc, c_ / std::max(hv, sc));
            const double h = 0.25 * std::min(scale_u, scale_v);
            u = std::min(u + h, tail_start_);
            edges.push_back(u);
        }
        if (edges.back() < tail_start_) {
            edges.clear();
            for (std::size_t i = 0; i <= kMaxCells; ++i)
                edges.push_back(start + (tail_start_ - start) * double(i) / double(kMaxCells));
        }

        std::vector<double> log_masses;
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            const double u0 = edges[i];
            const double u1 = edges[i + 1];
            const double log_rho_sup = log_rho(std::clamp(sa, u0, u1), a_);
            const double lo_min = v_low(std::clamp(vertex, u0, u1));
            const double hi_max = v_high(u1);
            const double len_max = std::min(2.0 * (u1 - abs_b1_), 2.0 * dl_);
            const double bound = log_rho_sup + log_w_bound(lo_min, hi_max, len_max);
            cells_.push_back({u0, u1, bound});
            log_masses.push_back(bound + std::log(u1 - u0));
        }
        const double lo_tail = v_low(tail_start_);
        log_tail_w_bound_ = std::min(
            -0.5 * lo_tail * lo_tail / c_,
            std::log(2.0 * dl_) + log_rho(std::max(sc, lo_tail), c_));
        log_masses.push_back(log_tail_w_bound_ - 0.5 * tail_start_ * tail_start_ / a_);

        const double top = *std::max_element(log_masses.begin(), log_masses.end());
        double acc = 0.0;
        for (double lm : log_masses) {
            acc += std::exp(lm - top);
            cumulative_.push_back(acc);
        }
    }

    UVRegion region_;
    double a_;
    double c_;
    double abs_b1_;
    double dl_;
    double tail_start_ = 0.0;
    double log_tail_w_bound_ = 0.0;
    std::vector<Cell> cells_;
    std::vector<double> cumulative_;
};

BridgePoint finish_interior(const UVRegion& region, double u, double v, RngStream& rng) {
    BridgePoint p = region.to_bridge(u, v);
    // xi2 is symmetric in b2.
    if (rng.uniform() < 0.5) p.b = -p.b;
    return p;
}

}  // namespace

BridgePoint sample_xi2_with_budget(const BridgeQuery& q, RngStream& rng, int pair_attempts) {
    q.validate();
    if (!(q.l3 > q.l1)) throw std::domain_error("xi2: need l3 > l1");
    const UVRegion region = UVRegion::from_query(q);
    const double a = q.s2 - q.s1;
    const double c = q.s3 - q.s2;
    for (int i = 0; i < pair_attempts; ++i) {
        const double u = sample_truncated_rayleigh(a, 0.0, rng);
        const double v = sample_truncated_rayleigh(c, 0.0, rng);
        if (region.contains(u, v)) return finish_interior(region, u, v, rng);
    }
    const InteriorEnvelope envelope(q);
    const auto [u, v] = envelope.sample(rng);
    return finish_interior(region, u, v, rng);
}

std::vector<BridgePoint> sample_xi2_envelope(const BridgeQuery& q, std::size_t n, RngStream& rng) {
    q.validate();
    if (!(q.l3 > q.l1)) throw std::domain_error("xi2: need l3 > l1");
    const UVRegion region = UVRegion::from_query(q);
    const InteriorEnvelope envelope(q);
    std::vector<BridgePoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [u, v] = envelope.sample(rng);
        out.push_back(finish_interior(region, u, v, rng));
    }
    return out;
}

BridgePoint sample_xi2(const BridgeQuery& q, RngStream& rng) {
    const CaseWeights w = compute_case_weights(q);
    if (!(w.p2 > 0.0)) throw std::domain_error("xi2: interior case has probability 0");
    return sample_xi2_with_budget(q, rng, 64);
}

BridgePoint sample_bridge_point(const BridgeQuery& q, RngStream& rng) {
    BridgeCase which;
    return sample_bridge_point(q, rng, which);
}

BridgePoint sample_bridge_point(const BridgeQuery& q, RngStream& rng, BridgeCase& which) {
    q.validate();
    if (q.l1 == q.l3) {
        which = BridgeCase::ConstantLocalTime;
        return {sample_B_conditional_zero_increment(q, rng), q.l1};
    }
    const CaseWeights w = compute_case_weights(q);
    const double u = rng.uniform();
    if (u <= w.p1) {
        which = BridgeCase::LeftFlat;
        return {sample_xi1(q, rng), q.l1};
    }
    if (u <= w.p1 + w.p3) {
        which = BridgeCase::RightFlat;
        return {sample_xi3(q, rng), q.l3};
    }
    which = BridgeCase::Interior;
    return sample_xi2_with_budget(q, rng, 64);
}

std::vector<SkeletonPoint> interpolate_skeleton(std::span<const SkeletonPoint> points,
                                                std::span<const double> new_times,
                                                RngStream& rng) {
    if (points.empty()) throw std::domain_error("interpolate_skeleton: empty skeleton");
    std::vector<SkeletonPoint> out(points.begin(), points.end());
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (!(out[i].t > out[i - 1].t))
            throw std::domain_error("interpolate_skeleton: skeleton times must increase");
    }
    std::vector<double> times(new_times.begin(), new_times.end());
    std::sort(times.begin(), times.end());
    for (double t : times) {
        if (!(t >= out.front().t && t <= out.back().t))
            throw std::domain_error("interpolate_skeleton: time outside the skeleton range");
        auto it = std::lower_bound(out.begin(), out.end(), t,
                                   [](const SkeletonPoint& p, double v) { return p.t < v; });
        if (it->t == t) continue;
        const SkeletonPoint& left = *(it - 1);
        const SkeletonPoint& right = *it;
        const BridgeQuery q{left.t, t, right.t, left.x, right.x, left.l, right.l};
        const BridgePoint bp = sample_bridge_point(q, rng);
        out.insert(it, SkeletonPoint{t, bp.b, bp.l});
    }
    return out;
}

}  // namespace exdiff
