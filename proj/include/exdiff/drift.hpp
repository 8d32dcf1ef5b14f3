#pragma once

// Drift functions with a single discontinuity at 0 and the quantities the
// exact sampler derives from them.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace exdiff {

/// One skeleton coordinate: time, diffusion value, local time at 0 so far.
struct SkeletonPoint {
    double t;
    double x;
    double l;

    friend bool operator==(const SkeletonPoint&, const SkeletonPoint&) = default;
};

/// Slopes of a drift whose antiderivative is linear on each half-line.
struct PiecewiseLinearAntiderivative {
    double slope_positive;  // A(u) = slope_positive * u for u >= 0
    double slope_negative;  // A(u) = slope_negative * u for u < 0
};

/// Everything a user must supply for a drift. Nothing here is derived
/// symbolically; the library validates these values but never computes them.
struct DriftDefinition {
    std::string family = "custom";
    std::function<double(double)> alpha;
    std::function<double(double)> alpha_prime;
    std::function<double(double)> antiderivative;  ///< A(u) = integral of alpha over [0, u]
    double alpha_plus = 0.0;                       ///< alpha(0+)
    double alpha_minus = 0.0;                      ///< alpha(0-)
    double kappa = 0.0;                            ///< lower bound of (alpha^2 + alpha')/2
    double big_m = 0.0;                            ///< upper bound of phi
    std::optional<PiecewiseLinearAntiderivative> linear_antiderivative;
    std::optional<double> antiderivative_sup;  ///< sup of A when A is bounded above
};

/// Immutable drift description.
class DriftSpec {
  public:
    /// Throws std::invalid_argument on missing callables, negative M or
    /// inconsistent one-sided limits.
    explicit DriftSpec(DriftDefinition def);

    const std::string& family() const { return def_.family; }
    double alpha(double u) const { return def_.alpha(u); }
    double alpha_prime(double u) const { return def_.alpha_prime(u); }
    double antiderivative(double u) const { return def_.antiderivative(u); }
    double alpha_plus() const { return def_.alpha_plus; }
    double alpha_minus() const { return def_.alpha_minus; }
    /// Half the jump alpha(0+) - alpha(0-).
    double theta() const { return 0.5 * (def_.alpha_plus - def_.alpha_minus); }
    double kappa() const { return def_.kappa; }
    double big_m() const { return def_.big_m; }
    const std::optional<PiecewiseLinearAntiderivative>& linear_antiderivative() const {
        return def_.linear_antiderivative;
    }
    const std::optional<double>& antiderivative_sup() const { return def_.antiderivative_sup; }

  private:
    DriftDefinition def_;
};

/// phi(u) = (alpha(u)^2 + alpha'(u)) / 2 - kappa for u != 0, and -kappa at
/// u = 0 (the indicator in the definition removes the point itself).
double phi(const DriftSpec& d, double u);

/// alpha = a1 on [0, inf) and a2 on (-inf, 0).
DriftSpec make_piecewise_constant(double a1, double a2);

/// alpha = sin(u - theta1) on [0, inf) and sin(u - theta2) on (-inf, 0).
DriftSpec make_piecewise_sine(double theta1, double theta2);

struct AssumptionViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AssumptionReport {
    std::size_t grid_points = 0;
    double phi_min = 0.0;
    double phi_max = 0.0;
    /// Normalising mass of the tilted endpoint law at (x, T), by quadrature.
    double tilted_mass = 0.0;
    /// Integrand at the truncation edges relative to its peak.
    double tail_ratio = 0.0;
    bool integrability_conclusive = true;
    std::vector<std::string> notes;
};

/// Best-effort check of the drift assumptions: 0 <= phi <= M on `grid`,
/// A(0) = 0 and A continuous at 0, the stored one-sided limits match alpha,
/// and finiteness of the tilted endpoint mass at (x, T). A pass means "not
/// falsified". Throws AssumptionViolation naming the failing check.
AssumptionReport validate_assumptions(const DriftSpec& d, const std::vector<double>& grid,
                                      double x = 0.0, double T = 1.0);

/// 10^4 points spread over [-20, 20], skipping 0.
std::vector<double> default_validation_grid();

}  // namespace exdiff
