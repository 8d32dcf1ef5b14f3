#pragma once

// The tilted law of (X_T, L_T) that the exact algorithm draws its endpoint
// from: density e^{A(b) - theta l} f_T^x(b, l) for l > 0 and an atom at l = 0
// with density e^{A(b)} f*_T^x(b).

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "exdiff/drift.hpp"
#include "exdiff/rng.hpp"

namespace exdiff {

struct EndpointDraw {
    double b;
    double l;
};

/// One proposal family of the endpoint mixture. Components have disjoint
/// supports: either {b in (b_lo, b_hi), l > 0} or, for atom components,
/// {b in (b_lo, b_hi), l = 0}.
struct MixtureComponent {
    std::string name;
    bool atom = false;
    double b_lo = 0.0;
    double b_hi = 0.0;
    std::function<EndpointDraw(RngStream&)> sample;
    /// Normalised log density at (b, l); for atom components l is ignored and
    /// the density is with respect to b alone.
    std::function<double(double b, double l)> log_density;
    /// log sup over the support of gtilde / h (or gstar_tilde / h).
    double log_sup_ratio = 0.0;
};

/// Components plus the envelope constant. A draw from component i is
/// accepted with probability gtilde / (K h_i / n), n = components.size().
struct EndpointMixture {
    std::vector<MixtureComponent> components;
    double log_k = 0.0;
};

class EndpointLaw {
  public:
    /// For piecewise-constant drifts the mixture envelope is built
    /// immediately; other drifts may pass their own.
    EndpointLaw(DriftSpec drift, double x, double T,
                std::optional<EndpointMixture> user_mixture = std::nullopt);

    const DriftSpec& drift() const { return drift_; }
    double x() const { return x_; }
    double T() const { return T_; }
    double theta() const { return drift_.theta(); }

    /// Unnormalised density on l > 0. Throws std::domain_error for l <= 0.
    double gtilde(double b, double l) const;
    double log_gtilde(double b, double l) const;
    /// Unnormalised atom density on {l = 0}; zero unless x b > 0.
    double gstar_tilde(double b) const;
    double log_gstar_tilde(double b) const;

    bool has_mixture() const { return mixture_.has_value(); }
    /// Throws std::logic_error if no envelope is available for this drift.
    const EndpointMixture& mixture() const;

  private:
    DriftSpec drift_;
    double x_;
    double T_;
    std::optional<EndpointMixture> mixture_;
};

/// Draw from h(u) proportional to e^{A(u)} phi_{x,T}(u). Closed form for
/// piecewise-linear A; rejection from N(x, T) when A is bounded above.
/// Throws std::invalid_argument for any other drift.
double sample_XT_from_h(const EndpointLaw& law, RngStream& rng);

/// Two-step sampler: b from h, L_T given (x, b), accept with e^{-theta L_T}.
/// Requires theta >= 0.
EndpointDraw sample_endpoint_theta_positive(const EndpointLaw& law, RngStream& rng);

/// Mixture rejection sampler. Requires theta < 0.
EndpointDraw sample_endpoint_theta_negative(const EndpointLaw& law, RngStream& rng);

/// Mixture rejection sampler for any sign of theta (cross-checks).
EndpointDraw sample_endpoint_mixture(const EndpointLaw& law, RngStream& rng);

/// Dispatch on the sign of theta; theta = 0 takes the two-step route.
EndpointDraw sample_endpoint(const EndpointLaw& law, RngStream& rng);

/// Envelope for piecewise-constant drifts: truncated Gaussians in b on
/// [0, xi1], (xi1, inf), [xi2, 0), (-inf, xi2) with the exact conditional law
/// of l given b, plus two atom components on the side of x when x != 0.
/// xi1 = -xi2 = xi3 = |x| + sqrt(T). K is taken from closed-form suprema and
/// then checked on a 200 x 200 grid per component.
/// Throws std::invalid_argument for other drifts.
EndpointMixture build_mixture(const EndpointLaw& law);

/// Checks gtilde <= (K / n) h_i on a grid over each component's support.
/// Throws std::logic_error naming the first violating point.
void verify_mixture(const EndpointLaw& law, const EndpointMixture& mixture, int grid = 200);

}  // namespace exdiff
