#include "exdiff/distributions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

#include "detail.hpp"

namespace exdiff {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kSqrtHalfPi = 1.25331413731550025121;  // sqrt(pi / 2)
constexpr double kSqrt2Pi = 2.50662827463100050242;

void require_positive_variance(double sigma2) {
    if (!(sigma2 > 0.0)) throw std::domain_error("normal: variance must be positive");
}

// Upper-tail quantile: z with Q(z) = p.
double std_normal_isf(double p) { return kSqrt2 * boost::math::erfc_inv(2.0 * p); }

}  // namespace

double erfcx(double x) {
    if (x < 0.0) {
        if (x < -26.6) return kInf;
        return 2.0 * std::exp(x * x) - erfcx(-x);
    }
    if (x < 26.0) return std::exp(x * x) * std::erfc(x);
    // Asymptotic series; at x >= 26 the terms fall below 1e-20 before diverging.
    const double s = 1.0 / (2.0 * x * x);
    double sum = 1.0;
    double term = 1.0;
    for (int n = 1; n <= 8; ++n) {
        term *= -(2.0 * n - 1.0) * s;
        sum += term;
    }
    return sum / (x * std::sqrt(std::numbers::pi));
}

double mills_ratio(double z) { return kSqrtHalfPi * erfcx(z / kSqrt2); }

double one_minus_z_mills(double z) {
    if (z < 8.0) return 1.0 - z * mills_ratio(z);
    const double inv = 1.0 / (z * z);
    double term = inv;
    double sum = inv;
    for (int n = 2; n <= 30; ++n) {
        const double next = -term * (2.0 * n - 1.0) * inv;
        if (std::fabs(next) >= std::fabs(term)) break;
        term = next;
        sum += term;
    }
    return sum;
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double std_normal_sf(double z) { return 0.5 * std::erfc(z / kSqrt2); }

double log_std_normal_cdf(double z) {
    if (z > 0.0) return std::log1p(-std_normal_sf(z));
    if (z > -5.0) return std::log(std_normal_cdf(z));
    return std::log(mills_ratio(-z)) - 0.5 * z * z - detail::kLogSqrt2Pi;
}

double normal_pdf(double u, double mu, double sigma2) {
    return std::exp(log_normal_pdf(u, mu, sigma2));
}

double log_normal_pdf(double u, double mu, double sigma2) {
    require_positive_variance(sigma2);
    const double d = u - mu;
    return -0.5 * d * d / sigma2 - 0.5 * std::log(sigma2) - detail::kLogSqrt2Pi;
}

double normal_cdf(double u, double mu, double sigma2) {
    require_positive_variance(sigma2);
    return std_normal_cdf((u - mu) / std::sqrt(sigma2));
}

double sample_std_truncated_normal(double lower, double upper, RngStream& rng) {
    if (!(lower < upper)) throw std::domain_error("truncated normal: empty interval");
    if (lower == -kInf && upper == kInf) return rng.normal();
    // Mirror so that the lower bound is finite and carries the tail.
    if (lower == -kInf || upper <= 0.0 || (lower < 0.0 && upper != kInf && -lower > upper)) {
        return -sample_std_truncated_normal(-upper, -lower, rng);
    }

    std::uint64_t iterations = 0;
    if (lower < 0.0) {
        // 0 lies inside the interval.
        if (upper - lower >= 1.5) {
            for (;; ++iterations) {
                detail::check_iterations(iterations, "truncated normal");
                const double z = rng.normal();
                if (z > lower && z < upper) return z;
            }
        }
        for (;; ++iterations) {
            detail::check_iterations(iterations, "truncated normal");
            const double z = lower + (upper - lower) * rng.uniform();
            if (rng.uniform() <= std::exp(-0.5 * z * z) && z > lower && z < upper) return z;
        }
    }

    if (lower <= 5.0) {
        const double q_lo = std_normal_sf(lower);
        const double q_hi = upper == kInf ? 0.0 : std_normal_sf(upper);
        for (;; ++iterations) {
            detail::check_iterations(iterations, "truncated normal");
            const double p = q_hi + rng.uniform() * (q_lo - q_hi);
            const double z = std_normal_isf(p);
            if (z > lower && z < upper) return z;
        }
    }

    if (upper - lower > 2.0 / lower) {
        // Exponential proposal with the optimal rate for the tail at `lower`.
        const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
        for (;; ++iterations) {
            detail::check_iterations(iterations, "truncated normal");
            const double z = lower + rng.exponential() / rate;
            const double d = z - rate;
            if (rng.uniform() <= std::exp(-0.5 * d * d) && z > lower && z < upper) return z;
        }
    }
    for (;; ++iterations) {
        detail::check_iterations(iterations, "truncated normal");
        const double z = lower + (upper - lower) * rng.uniform();
        if (rng.uniform() <= std::exp(-0.5 * (z - lower) * (z + lower)) && z > lower && z < upper)
            return z;
    }
}

double sample_truncated_normal(double mu, double sigma2, double lower, RngStream& rng) {
    return sample_truncated_normal(mu, sigma2, lower, kInf, rng);
}

double sample_truncated_normal(double mu, double sigma2, double lower, double upper,
                               RngStream& rng) {
    require_positive_variance(sigma2);
    const double sigma = std::sqrt(sigma2);
    for (std::uint64_t iterations = 0;; ++iterations) {
        detail::check_iterations(iterations, "truncated normal");
        const double z =
            sample_std_truncated_normal((lower - mu) / sigma, (upper - mu) / sigma, rng);
        const double value = mu + sigma * z;
        // Rounding in the affine map can land on a bound.
        if (value > lower && value < upper) return value;
    }
}

double truncated_rayleigh_quantile(double scale2, double min, double u) {
    // 1 - z = exp(-min^2 / (2 scale2)) (1 - u) for z uniform on the truncated range.
    return std::sqrt(min * min - 2.0 * scale2 * std::log1p(-u));
}

double sample_truncated_rayleigh(double scale2, double min, RngStream& rng) {
    if (!(scale2 > 0.0)) throw std::domain_error("rayleigh: scale must be positive");
    if (!(min >= 0.0)) throw std::domain_error("rayleigh: truncation point must be >= 0");
    for (;;) {
        const double y = truncated_rayleigh_quantile(scale2, min, rng.uniform());
        if (y > min) return y;
    }
}

std::vector<double> sample_poisson_times(double rate, double horizon, RngStream& rng) {
    if (!(rate > 0.0) || !(horizon > 0.0))
        throw std::domain_error("poisson: rate and horizon must be positive");
    std::vector<double> times;
    double t = 0.0;
    for (;;) {
        t += rng.exponential() / rate;
        if (t > horizon) break;
        times.push_back(t);
    }
    return times;
}

double log_linear_gaussian_tail_mass(double c, double m, double var) {
    const double sd = std::sqrt(var);
    const double z = (c - m) / sd;
    if (z <= 0.0) {
        // m >= c >= 0: both terms are nonnegative.
        return std::log(var * std::exp(-0.5 * z * z) + m * kSqrt2Pi * sd * std_normal_sf(z));
    }
    // exp(-z^2/2) [var (1 - z M(z)) + c sd M(z)], written without cancellation.
    const double bracket = var * one_minus_z_mills(z) + c * sd * mills_ratio(z);
    return -0.5 * z * z + std::log(bracket);
}

double sample_linear_gaussian_tail(double c, double m, double var, RngStream& rng) {
    if (!(var > 0.0) || !(c >= 0.0))
        throw std::domain_error("linear gaussian tail: need var > 0 and c >= 0");
    const double sd = std::sqrt(var);
    std::uint64_t iterations = 0;

    if (c - m >= sd) {
        // w = c + d with density prop. to (c + d) exp(-r d) exp(-d^2 / (2 var)).
        const double rate = (c - m) / var;
        const double w_exp = c / rate;
        const double w_gamma = 1.0 / (rate * rate);
        for (;; ++iterations) {
            detail::check_iterations(iterations, "linear gaussian tail");
            double d = rng.exponential() / rate;
            if (rng.uniform() * (w_exp + w_gamma) >= w_exp) d += rng.exponential() / rate;
            if (rng.uniform() <= std::exp(-0.5 * d * d / var) && d > 0.0) return c + d;
        }
    }

    if (m <= 0.0) {
        // Rayleigh proposal; the remaining factor exp(m (w - c) / var) is <= 1.
        for (;; ++iterations) {
            detail::check_iterations(iterations, "linear gaussian tail");
            const double w = sample_truncated_rayleigh(var, c, rng);
            if (rng.uniform() <= std::exp(m * (w - c) / var)) return w;
        }
    }

    // m > 0, c < m + sd. Split w = (w - m) + m above max(c, m); below m use a
    // Gaussian proposal on [c, m] accepted with probability w / m.
    const double split = std::max(c, m);
    const double zs = (split - m) / sd;
    const double mass_rayleigh = var * std::exp(-0.5 * zs * zs);
    const double mass_gauss = m * kSqrt2Pi * sd * std_normal_sf(zs);
    // Envelope mass m * int_c^m G; the w / m thinning below removes the excess.
    const double mass_low = c < m ? m * kSqrt2Pi * sd * (0.5 - std_normal_cdf((c - m) / sd)) : 0.0;
    const double total = mass_rayleigh + mass_gauss + mass_low;
    for (;; ++iterations) {
        detail::check_iterations(iterations, "linear gaussian tail");
        const double pick = rng.uniform() * total;
        double w;
        if (pick < mass_rayleigh) {
            w = m + sample_truncated_rayleigh(var, split - m, rng);
        } else if (pick < mass_rayleigh + mass_gauss) {
            w = sample_truncated_normal(m, var, split, rng);
        } else {
            w = sample_truncated_normal(m, var, c, m, rng);
            if (rng.uniform() > w / m) continue;
        }
        if (w > c) return w;
    }
}

double log_joint_density_f(const LocalTimeDensityQuery& q) {
    if (!(q.s > 0.0)) throw std::domain_error("f: elapsed time must be positive");
    if (!(q.l > 0.0)) throw std::domain_error("f: local time must be positive (use f* for l = 0)");
    const double w = q.l + std::fabs(q.b) + std::fabs(q.x);
    return std::log(w) - 0.5 * w * w / q.s - 1.5 * std::log(q.s) - detail::kLogSqrt2Pi;
}

double joint_density_f(const LocalTimeDensityQuery& q) { return std::exp(log_joint_density_f(q)); }

double log_atom_density_fstar(double x, double s, double b) {
    if (!(s > 0.0)) throw std::domain_error("f*: elapsed time must be positive");
    if (!(x * b > 0.0)) return -kInf;
    return log_normal_pdf(b, x, s) + std::log(-std::expm1(-2.0 * b * x / s));
}

double atom_density_fstar(double x, double s, double b) {
    return std::exp(log_atom_density_fstar(x, s, b));
}

double log_tilted_local_time_integral(double x, double s, double b, double theta) {
    if (!(s > 0.0)) throw std::domain_error("f: elapsed time must be positive");
    // With w = l + c: e^{-theta l} w e^{-w^2/2s} = e^{theta c + theta^2 s/2} w e^{-(w + theta s)^2/2s}.
    const double c = std::fabs(b) + std::fabs(x);
    return theta * c + 0.5 * theta * theta * s + log_linear_gaussian_tail_mass(c, -theta * s, s) -
           1.5 * std::log(s) - detail::kLogSqrt2Pi;
}

}  // namespace exdiff
