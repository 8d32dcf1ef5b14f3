#pragma once

// Baselines and statistical oracles used to check the samplers.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "exdiff/drift.hpp"
#include "exdiff/endpoint.hpp"
#include "exdiff/rng.hpp"

namespace exdiff {

// ---- Euler-Maruyama ------------------------------------------------------------

/// Stream ids used by the Euler baseline start here so they never collide with
/// the per-path streams of the exact sampler.
inline constexpr std::uint64_t kEulerStreamBase = std::uint64_t{1} << 62;

/// Terminal values of X_{k+1} = X_k + alpha(X_k) dt + sqrt(dt) Z_k. Path i
/// uses RngStream(seed, kEulerStreamBase + i). Throws std::invalid_argument if
/// dt does not divide T to within 1e-9 relative.
std::vector<double> euler_maruyama(const DriftSpec& d, double x, double T, double dt,
                                   std::size_t n, std::uint64_t seed, unsigned threads = 1);

// ---- Quadrature ----------------------------------------------------------------

/// CDF of an integrable density by adaptive Gauss-Kronrod quadrature. The
/// domain is cut at `breakpoints` (kinks belong here) and every finite piece is
/// split into `subdivisions` panels; infinite ends are handled by the
/// quadrature's own change of variables.
class QuadratureCdf {
  public:
    /// Throws std::runtime_error when a panel fails to reach `tolerance`
    /// (absolute, relative to a unit mass), reporting the achieved error.
    QuadratureCdf(std::function<double(double)> density, double lo, double hi,
                  std::vector<double> breakpoints = {}, double tolerance = 1e-9,
                  int subdivisions = 32);

    double total_mass() const { return cumulative_.back(); }
    double error_estimate() const { return error_; }
    /// Normalised CDF.
    double operator()(double u) const;
    /// Integral of the density from lo to u.
    double unnormalized(double u) const;

    /// Switches finite panels to cubic Hermite interpolation on `points` sub-panels
    /// each, for densities that are expensive to evaluate. Throws
    /// std::runtime_error if the interpolant is off by more than `max_error`
    /// (relative to the total mass) at any sub-panel midpoint.
    void tabulate(int points = 16, double max_error = 1e-6);

  private:
    struct Node {
        double u;
        double cdf;
        double density;
    };
    std::function<double(double)> density_;
    std::vector<double> edges_;
    std::vector<double> cumulative_;
    double tolerance_;
    double error_ = 0.0;
    std::vector<Node> nodes_;
    double hermite(std::size_t k, double u) const;
};

/// Adaptive Gauss-Kronrod integral of f over [a, b] (either end may be
/// infinite). Throws std::runtime_error if the error estimate exceeds `tol`.
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-10,
                 double* error = nullptr);

// ---- Tests -----------------------------------------------------------------------

struct TestStatistic {
    double statistic = 0.0;
    double p_value = 0.0;
    double dof = 0.0;
};

/// Asymptotic Kolmogorov survival function with the small-sample correction
/// lambda = (sqrt(n) + 0.12 + 0.11 / sqrt(n)) D.
double kolmogorov_p_value(double d, double effective_n);

/// One-sample KS. `cdf_left` gives the left limit F(u-) for laws with atoms;
/// omit it for continuous laws.
TestStatistic ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf,
                            const std::function<double(double)>& cdf_left = nullptr);

/// One-sample KS against CDF values already evaluated at sorted samples.
TestStatistic ks_one_sample_sorted(std::span<const double> sorted, std::span<const double> cdf_values);

TestStatistic ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Pearson chi-square goodness of fit. Adjacent cells (in the given order)
/// are pooled until each expected count reaches `min_expected`.
TestStatistic chi_square_test(std::span<const double> observed, std::span<const double> probabilities,
                              double min_expected = 5.0);

/// Index of the cell containing u for sorted `edges` (first edge may be -inf,
/// last +inf). Returns -1 when u is outside.
int find_cell(std::span<const double> edges, double u);

// ---- Local time oracle -------------------------------------------------------------

/// Exact draws of (|B_T|, L_T) for Brownian motion from 0 via Levy's identity
/// (|B|, L) = (M - W, M), M the running maximum of W. The maximum between
/// grid points is drawn from the Brownian-bridge maximum law, so the result
/// carries no grid bias.
std::vector<std::array<double, 2>> levy_identity_oracle(double T, std::size_t n, RngStream& rng,
                                                        int grid_steps = 16);

// ---- Density estimates ----------------------------------------------------------------

/// Values on a uniform grid in one or two dimensions (row-major, first axis
/// outermost).
struct DensityGrid {
    std::vector<std::vector<double>> axes;
    std::vector<double> values;
    double total_mass = 0.0;

    /// Trapezoid integral of `values` over the axes.
    double trapezoid_mass() const;
};

/// Gaussian KDE on 512 points spanning the sample range +- 3 bandwidths.
/// bandwidth <= 0 selects Silverman's rule 0.9 min(sd, IQR / 1.34) n^{-1/5}.
DensityGrid kde(std::span<const double> samples, double bandwidth = 0.0, int points = 512);

/// Gaussian KDE evaluated at the given points.
std::vector<double> kde_at(std::span<const double> samples, double bandwidth, std::span<const double> points);

double silverman_bandwidth(std::span<const double> samples);

// ---- Endpoint law by quadrature ----------------------------------------------------------

/// Integral of gtilde + gstar_tilde over the whole space. `refinement` 0 uses a
/// coarse rule, 1 a finer one; both must agree.
double tilted_mass(const EndpointLaw& law, int refinement = 1);

/// Probabilities of the cells [b_edges[i], b_edges[i+1]) x [l_edges[j], l_edges[j+1])
/// for l > 0, followed by the atom cells [b_edges[i], b_edges[i+1]) x {0}.
/// Edges must start at -inf / 0 and end at +inf so the cells cover everything.
std::vector<double> endpoint_cell_probabilities(const EndpointLaw& law,
                                                std::span<const double> b_edges,
                                                std::span<const double> l_edges);

/// Atom mass P(L_T = 0) under the tilted law.
double endpoint_atom_probability(const EndpointLaw& law);

}  // namespace exdiff
