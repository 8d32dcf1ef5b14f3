#pragma once

// Random variates and densities for Gaussian, truncated Gaussian, truncated
// Rayleigh and Poisson-process laws, plus the joint law of Brownian motion and
// its local time at zero.

#include <limits>
#include <vector>

#include "exdiff/rng.hpp"

namespace exdiff {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- Gaussian evaluators ---------------------------------------------------

/// Scaled complementary error function exp(x^2) erfc(x).
double erfcx(double x);

/// Mills ratio Q(z)/phi(z) of the standard normal, Q the upper tail.
double mills_ratio(double z);

/// 1 - z * mills_ratio(z) for z >= 0, without cancellation for large z.
double one_minus_z_mills(double z);

double std_normal_cdf(double z);
/// Upper tail 1 - Phi(z).
double std_normal_sf(double z);
/// log Phi(z), accurate deep in the lower tail.
double log_std_normal_cdf(double z);

/// Gaussian density with mean mu and variance sigma2. Throws std::domain_error
/// if sigma2 <= 0.
double normal_pdf(double u, double mu, double sigma2);
double log_normal_pdf(double u, double mu, double sigma2);
/// Gaussian distribution function; erfc based, absolute error well below 1e-12.
double normal_cdf(double u, double mu, double sigma2);

// ---- Samplers ---------------------------------------------------------------

/// Standard normal conditioned on (lower, upper). Either bound may be infinite.
double sample_std_truncated_normal(double lower, double upper, RngStream& rng);

/// N(mu, sigma2) conditioned on (lower, inf). The result is always > lower.
/// Standardised bounds beyond 5 use exponential-tilted tail rejection.
double sample_truncated_normal(double mu, double sigma2, double lower, RngStream& rng);

/// N(mu, sigma2) conditioned on (lower, upper).
double sample_truncated_normal(double mu, double sigma2, double lower, double upper,
                               RngStream& rng);

/// Inverse distribution function of the Rayleigh law with density
/// proportional to y exp(-y^2 / (2 scale2)) on (min, inf), at probability u.
double truncated_rayleigh_quantile(double scale2, double min, double u);

/// Draw from the Rayleigh law with squared scale `scale2` truncated to (min, inf).
double sample_truncated_rayleigh(double scale2, double min, RngStream& rng);

/// Event times of a homogeneous Poisson process of intensity `rate` on
/// [0, horizon], strictly increasing.
std::vector<double> sample_poisson_times(double rate, double horizon, RngStream& rng);

/// log of the integral over [c, inf) of w exp(-(w - m)^2 / (2 var)) dw, c >= 0.
double log_linear_gaussian_tail_mass(double c, double m, double var);

/// Draw from the density proportional to w exp(-(w - m)^2 / (2 var)) on
/// (c, inf), c >= 0.
double sample_linear_gaussian_tail(double c, double m, double var, RngStream& rng);

// ---- Brownian motion and local time ----------------------------------------

/// Start point x, elapsed time s, end point b, local time l.
struct LocalTimeDensityQuery {
    double x;
    double s;
    double b;
    double l;
};

/// Joint density of (B_s, L_s) at (b, l), l > 0, for Brownian motion started
/// at x. Throws std::domain_error if l <= 0 or s <= 0.
double joint_density_f(const LocalTimeDensityQuery& q);
double log_joint_density_f(const LocalTimeDensityQuery& q);

/// Density of B_s at b on the event {L_s = 0}. Zero unless x and b have the
/// same strict sign. Throws std::domain_error if s <= 0.
double atom_density_fstar(double x, double s, double b);
double log_atom_density_fstar(double x, double s, double b);

/// log of the integral over l in (0, inf) of f(x -> b, l over time s) e^{-theta l}.
double log_tilted_local_time_integral(double x, double s, double b, double theta);

}  // namespace exdiff
