#include "exdiff/endpoint.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "detail.hpp"
#include "exdiff/distributions.hpp"
#include "exdiff/local_time_laws.hpp"

namespace exdiff {

namespace {

// log P(lo < Z < hi) for a standard normal Z.
double log_std_normal_interval(double lo, double hi) {
    if (lo >= 0.0) {
        const double log_q_lo = log_std_normal_cdf(-lo);
        if (hi == kInf) return log_q_lo;
        const double log_q_hi = log_std_normal_cdf(-hi);
        return detail::log_diff_exp(log_q_lo, log_q_hi);
    }
    if (hi <= 0.0) return log_std_normal_interval(-hi, -lo);
    return std::log1p(-std_normal_sf(hi) - std_normal_cdf(lo));
}

double log_gauss_interval(double mu, double var, double lo, double hi) {
    const double sd = std::sqrt(var);
    return log_std_normal_interval((lo - mu) / sd, (hi - mu) / sd);
}

struct Side {
    double slope;  // A(u) = slope * u on this half-line
    double sign;   // +1 for b >= 0
};

MixtureComponent continuous_component(const std::string& name, double x, double T, double theta,
                                      const Side& side, double lo, double hi) {
    const double m = -theta * T;
    const double ax = std::fabs(x);
    const double mu = side.slope * T - side.sign * ax;
    const double log_mass = log_gauss_interval(mu, T, lo, hi);

    MixtureComponent c;
    c.name = name;
    c.atom = false;
    c.b_lo = lo;
    c.b_hi = hi;
    c.sample = [=](RngStream& rng) {
        const double b = sample_truncated_normal(mu, T, lo, hi, rng);
        const double floor = std::fabs(b) + ax;
        const double w = sample_linear_gaussian_tail(floor, m, T, rng);
        return EndpointDraw{b, w - floor};
    };
    c.log_density = [=](double b, double l) {
        if (!(b > lo && b < hi) || !(l > 0.0)) return -kInf;
        const double floor = std::fabs(b) + ax;
        const double w = l + floor;
        const double d = w - m;
        return log_normal_pdf(b, mu, T) - log_mass + std::log(w) - 0.5 * d * d / T -
               log_linear_gaussian_tail_mass(floor, m, T);
    };

    // gtilde / h depends on b only, through
    //   const + log B(c),  B(c) = e^{(c - m)^2 / 2T} Z(c) -> T as c -> inf,
    // and B is monotone in c, so the supremum sits at an end of the interval.
    auto bracket = [=](double b) {
        const double floor = std::fabs(b) + ax;
        const double d = floor - m;
        return side.slope * b + theta * floor + 0.5 * theta * theta * T - 0.5 * d * d / T -
               log_normal_pdf(b, mu, T);
    };
    auto log_b = [=](double b) {
        if (std::isinf(b)) return std::log(T);
        const double floor = std::fabs(b) + ax;
        const double d = floor - m;
        return log_linear_gaussian_tail_mass(floor, m, T) + 0.5 * d * d / T;
    };
    const double finite_end = std::isinf(lo) ? hi : lo;
    const double constant =
        bracket(finite_end) + log_mass - 1.5 * std::log(T) - detail::kLogSqrt2Pi;
    c.log_sup_ratio = constant + std::max(log_b(lo), log_b(hi));
    return c;
}

MixtureComponent atom_component(const std::string& name, double x, double T, const Side& side,
                                double lo, double hi) {
    const double mu = x + side.slope * T;
    const double log_mass = log_gauss_interval(mu, T, lo, hi);

    MixtureComponent c;
    c.name = name;
    c.atom = true;
    c.b_lo = lo;
    c.b_hi = hi;
    c.sample = [=](RngStream& rng) {
        return EndpointDraw{sample_truncated_normal(mu, T, lo, hi, rng), 0.0};
    };
    c.log_density = [=](double b, double) {
        if (!(b > lo && b < hi)) return -kInf;
        return log_normal_pdf(b, mu, T) - log_mass;
    };
    // Ratio e^{slope x + slope^2 T / 2} P (1 - e^{-2 b x / T}) grows with |b|.
    const double far = side.sign > 0.0 ? hi : lo;
    c.log_sup_ratio = side.slope * x + 0.5 * side.slope * side.slope * T + log_mass +
                      std::log(-std::expm1(-2.0 * far * x / T));
    return c;
}

EndpointDraw sample_from_mixture(const EndpointLaw& law, const EndpointMixture& mix,
                                 RngStream& rng) {
    const auto n = mix.components.size();
    const double log_scale = mix.log_k - std::log(static_cast<double>(n));
    for (std::uint64_t it = 0;; ++it) {
        detail::check_iterations(it, "endpoint mixture");
        auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
        i = std::min(i, n - 1);
        const MixtureComponent& comp = mix.components[i];
        const EndpointDraw d = comp.sample(rng);
        const double log_target = comp.atom ? law.log_gstar_tilde(d.b) : law.log_gtilde(d.b, d.l);
        const double ratio = std::exp(log_target - comp.log_density(d.b, d.l) - log_scale);
        if (!(ratio >= 0.0 && ratio <= 1.0 + 1e-12)) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "endpoint mixture: envelope violated by component " << comp.name << " at (b="
                << d.b << ", l=" << d.l << "), ratio " << ratio;
            throw std::logic_error(msg.str());
        }
        if (rng.uniform() <= ratio) return d;
    }
}

}  // namespace

EndpointLaw::EndpointLaw(DriftSpec drift, double x, double T,
                         std::optional<EndpointMixture> user_mixture)
    : drift_(std::move(drift)), x_(x), T_(T) {
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("endpoint: T must be positive");
    if (!std::isfinite(x)) throw std::invalid_argument("endpoint: x must be finite");
    if (user_mixture) {
        if (user_mixture->components.empty())
            throw std::invalid_argument("endpoint: user mixture has no components");
        verify_mixture(*this, *user_mixture);
        mixture_ = std::move(user_mixture);
    } else if (drift_.linear_antiderivative()) {
        mixture_ = build_mixture(*this);
    }
}

double EndpointLaw::log_gtilde(double b, double l) const {
    return drift_.antiderivative(b) - theta() * l + log_joint_density_f({x_, T_, b, l});
}

double EndpointLaw::gtilde(double b, double l) const { return std::exp(log_gtilde(b, l)); }

double EndpointLaw::log_gstar_tilde(double b) const {
    const double atom = log_atom_density_fstar(x_, T_, b);
    if (atom == -kInf) return -kInf;
    return drift_.antiderivative(b) + atom;
}

double EndpointLaw::gstar_tilde(double b) const { return std::exp(log_gstar_tilde(b)); }

const EndpointMixture& EndpointLaw::mixture() const {
    if (!mixture_) {
        throw std::logic_error("endpoint: no mixture envelope for drift family '" +
                               drift_.family() + "'; supply one explicitly");
    }
    return *mixture_;
}

double sample_XT_from_h(const EndpointLaw& law, RngStream& rng) {
    const DriftSpec& d = law.drift();
    const double x = law.x();
    const double T = law.T();
    if (const auto& lin = d.linear_antiderivative()) {
        // e^{a u} phi_{x,T}(u) = e^{a x + a^2 T / 2} phi_{x + a T, T}(u) on each half-line.
        const double a1 = lin->slope_positive;
        const double a2 = lin->slope_negative;
        const double sd = std::sqrt(T);
        const double log_pos = a1 * x + 0.5 * a1 * a1 * T + log_std_normal_cdf((x + a1 * T) / sd);
        const double log_neg = a2 * x + 0.5 * a2 * a2 * T + log_std_normal_cdf(-(x + a2 * T) / sd);
        const double p_pos = 1.0 / (1.0 + std::exp(log_neg - log_pos));
        if (rng.uniform() < p_pos) return sample_truncated_normal(x + a1 * T, T, 0.0, rng);
        return sample_truncated_normal(x + a2 * T, T, -kInf, 0.0, rng);
    }
    if (const auto& sup = d.antiderivative_sup()) {
        const double sd = std::sqrt(T);
        for (std::uint64_t it = 0;; ++it) {
            detail::check_iterations(it, "endpoint h");
            const double b = x + sd * rng.normal();
            const double ratio =
                detail::checked_ratio(std::exp(d.antiderivative(b) - *sup), "endpoint h");
            if (rng.uniform() <= ratio) return b;
        }
    }
    throw std::invalid_argument("endpoint: drift '" + d.family() +
                                "' has neither a piecewise-linear nor a bounded antiderivative");
}

EndpointDraw sample_endpoint_theta_positive(const EndpointLaw& law, RngStream& rng) {
    const double theta = law.theta();
    if (theta < 0.0) throw std::domain_error("two-step endpoint sampler needs theta >= 0");
    for (std::uint64_t it = 0;; ++it) {
        detail::check_iterations(it, "endpoint two-step");
        const double b = sample_XT_from_h(law, rng);
        const double l = sample_L_given_endpoints({0.0, law.T(), law.x(), b, 0.0}, rng);
        const double ratio = detail::checked_ratio(std::exp(-theta * l), "endpoint two-step");
        if (ratio == 1.0 || rng.uniform() <= ratio) return {b, l};
    }
}

EndpointDraw sample_endpoint_theta_negative(const EndpointLaw& law, RngStream& rng) {
    if (!(law.theta() < 0.0)) throw std::domain_error("mixture endpoint sampler needs theta < 0");
    return sample_from_mixture(law, law.mixture(), rng);
}

EndpointDraw sample_endpoint_mixture(const EndpointLaw& law, RngStream& rng) {
    return sample_from_mixture(law, law.mixture(), rng);
}

EndpointDraw sample_endpoint(const EndpointLaw& law, RngStream& rng) {
    if (law.theta() < 0.0) return sample_endpoint_theta_negative(law, rng);
    return sample_endpoint_theta_positive(law, rng);
}

EndpointMixture build_mixture(const EndpointLaw& law) {
    const auto& lin = law.drift().linear_antiderivative();
    if (!lin) {
        throw std::invalid_argument("endpoint: automatic envelope needs a piecewise-constant drift; "
                                    "supply components and K for '" + law.drift().family() + "'");
    }
    const double x = law.x();
    const double T = law.T();
    const double theta = law.theta();
    const Side pos{lin->slope_positive, 1.0};
    const Side neg{lin->slope_negative, -1.0};
    const double xi1 = std::fabs(x) + std::sqrt(T);
    const double xi2 = -xi1;
    const double xi3 = std::fabs(x) + std::sqrt(T);

    EndpointMixture mix;
    mix.components.push_back(continuous_component("h1", x, T, theta, pos, 0.0, xi1));
    mix.components.push_back(continuous_component("h2", x, T, theta, pos, xi1, kInf));
    mix.components.push_back(continuous_component("h3", x, T, theta, neg, xi2, 0.0));
    mix.components.push_back(continuous_component("h4", x, T, theta, neg, -kInf, xi2));
    if (x > 0.0) {
        mix.components.push_back(atom_component("h5", x, T, pos, 0.0, xi3));
        mix.components.push_back(atom_component("h6", x, T, pos, xi3, kInf));
    } else if (x < 0.0) {
        mix.components.push_back(atom_component("h7", x, T, neg, -xi3, 0.0));
        mix.components.push_back(atom_component("h8", x, T, neg, -kInf, -xi3));
    }
    double top = -kInf;
    for (const auto& c : mix.components) top = std::max(top, c.log_sup_ratio);
    mix.log_k = top + std::log(static_cast<double>(mix.components.size()));
    verify_mixture(law, mix);
    return mix;
}

void verify_mixture(const EndpointLaw& law, const EndpointMixture& mixture, int grid) {
    const double T = law.T();
    const double sd = std::sqrt(T);
    const double log_scale = mixture.log_k - std::log(static_cast<double>(mixture.components.size()));
    const double l_max = 8.0 * sd + 2.0 * std::fabs(law.theta()) * T;
    for (const auto& c : mixture.components) {
        const double lo = std::isinf(c.b_lo) ? c.b_hi - 8.0 * sd : c.b_lo;
        const double hi = std::isinf(c.b_hi) ? c.b_lo + 8.0 * sd : c.b_hi;
        const int l_points = c.atom ? 1 : grid;
        for (int i = 0; i < grid; ++i) {
            const double b = lo + (hi - lo) * (i + 0.5) / grid;
            for (int j = 0; j < l_points; ++j) {
                const double l = c.atom ? 0.0 : l_max * (j + 0.5) / grid;
                const double target = c.atom ? law.log_gstar_tilde(b) : law.log_gtilde(b, l);
                const double log_ratio = target - c.log_density(b, l);
                if (log_ratio > log_scale + 1e-9 || log_ratio > c.log_sup_ratio + 1e-9) {
                    std::ostringstream msg;
                    msg.precision(17);
                    msg << "endpoint mixture: component " << c.name << " exceeds K at (b=" << b
                        << ", l=" << l << ")";
                    throw std::logic_error(msg.str());
                }
            }
        }
    }
}

}  // namespace exdiff
