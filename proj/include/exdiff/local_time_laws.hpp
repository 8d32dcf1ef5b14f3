#pragma once

// Conditional laws of Brownian motion B and its local time L at 0:
//   * L at a later time given B at both times and L at the earlier time;
//   * (B, L) at an interior time given (B, L) at two surrounding times, both
//     when L is constant across the bracket and when it increases.

#include <array>
#include <span>
#include <vector>

#include "exdiff/drift.hpp"
#include "exdiff/rng.hpp"

namespace exdiff {

struct EndpointPair {
    double s1;
    double s2;
    double b1;
    double b2;
    double l1;
};

/// Conditioning data for an interior draw at s2 given (b1, l1) at s1 and
/// (b3, l3) at s3.
struct BridgeQuery {
    double s1;
    double s2;
    double s3;
    double b1;
    double b3;
    double l1;
    double l3;

    /// Throws std::domain_error unless s1 < s2 < s3, 0 <= l1 <= l3, and
    /// b1 * b3 > 0 whenever l1 == l3 (a constant local time means the path
    /// never reached 0).
    void validate() const;
};

struct BridgePoint {
    double b;
    double l;
};

/// Which branch of the three-way split produced a bridge draw.
enum class BridgeCase { ConstantLocalTime, LeftFlat, Interior, RightFlat };

struct CaseWeights {
    double p1 = 0.0;  ///< P(L_{s2} = l1)
    double p2 = 0.0;  ///< P(l1 < L_{s2} < l3)
    double p3 = 0.0;  ///< P(L_{s2} = l3)
    double c1 = 0.0;
    double c2 = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;
    std::array<double, 4> mu{};
    std::array<double, 4> nu{};
    double sigma2 = 0.0;
    /// Amount removed when clamping p2 into [0, 1].
    double clamp_adjustment = 0.0;
};

/// Region R2 of the (u, v) plane for the interior case, obtained by pulling
/// the constraints b2 >= 0, l1 <= l2 <= l3 through
///   u = l2 - l1 + |b2| + |b1|,   v = l3 - l2 + |b3| + |b2|.
/// R2 = { v >= u + lower_offset, v <= u + upper_offset, v >= -u + sum_offset }.
struct UVRegion {
    double lower_offset;  ///< boundary l2 = l3
    double upper_offset;  ///< boundary l2 = l1
    double sum_offset;    ///< boundary b2 = 0
    double l1;
    double l3;
    double abs_b1;
    double abs_b3;

    static UVRegion from_query(const BridgeQuery& q);
    bool contains(double u, double v) const;
    /// Inverse transform: l2 and |b2| for a point of R2.
    BridgePoint to_bridge(double u, double v) const;
    /// Forward transform of (|b2|, l2).
    std::array<double, 2> to_uv(double abs_b2, double l2) const;
};

// ---- L given endpoint values ------------------------------------------------

/// Probability that L does not increase over [s1, s2] given B at both ends.
double prob_local_time_constant(const EndpointPair& e);

/// Exact draw of L_{s2} given B_{s1} = b1, B_{s2} = b2, L_{s1} = l1.
double sample_L_given_endpoints(const EndpointPair& e, RngStream& rng);

// ---- Interior draw with constant local time ---------------------------------

struct GaussianParams {
    double mean;
    double variance;
};

/// Brownian-bridge mean and variance at s2 (the proposal of the sampler).
GaussianParams zero_increment_proposal(const BridgeQuery& q);

/// Acceptance probability for a proposed b2:
/// (1 - e^{-2 b1 b2 / (s2 - s1)}) (1 - e^{-2 b2 b3 / (s3 - s2)}).
double zero_increment_acceptance(const BridgeQuery& q, double b2);

/// Conditional density of B_{s2} given no zero crossing on [s1, s3].
double zero_increment_density(double b2, const BridgeQuery& q);

/// Exact draw of B_{s2} when l1 == l3. The result has the sign of b1.
double sample_B_conditional_zero_increment(const BridgeQuery& q, RngStream& rng);

// ---- Interior draw with increasing local time ---------------------------------

/// Closed forms for P(L_{s2} = l1) and P(L_{s2} = l3); p2 is the complement.
CaseWeights compute_case_weights(const BridgeQuery& q);

/// Density of B_{s2} on {L_{s2} = l1}; integrates to p1.
double xi1_density(double b2, const BridgeQuery& q);
/// Density of B_{s2} on {L_{s2} = l3}; integrates to p3.
double xi3_density(double b2, const BridgeQuery& q);
/// Joint density of (B_{s2}, L_{s2}) for l1 < l2 < l3; integrates to p2.
double xi2_density(double b2, double l2, const BridgeQuery& q);

/// Rejection ratio of the xi1 sampler at a proposed b2 (in [0, 1]).
double xi1_acceptance_ratio(const BridgeQuery& q, double b2);
double xi3_acceptance_ratio(const BridgeQuery& q, double b2);

double sample_xi1(const BridgeQuery& q, RngStream& rng);
double sample_xi3(const BridgeQuery& q, RngStream& rng);
/// Draw (b2, l2) from the interior case. Throws std::domain_error if p2 is 0.
BridgePoint sample_xi2(const BridgeQuery& q, RngStream& rng);

/// The xi2 sampler with a proposal budget. Tries independent Rayleigh pairs
/// `pair_attempts` times, then switches to a piecewise envelope over u.
/// Exposed so both routes can be checked separately.
BridgePoint sample_xi2_with_budget(const BridgeQuery& q, RngStream& rng, int pair_attempts);

/// n draws from xi2 through the envelope route only, building the envelope once.
std::vector<BridgePoint> sample_xi2_envelope(const BridgeQuery& q, std::size_t n, RngStream& rng);

/// Draw (B_{s2}, L_{s2}) given both neighbours.
BridgePoint sample_bridge_point(const BridgeQuery& q, RngStream& rng);
BridgePoint sample_bridge_point(const BridgeQuery& q, RngStream& rng, BridgeCase& which);

/// Insert `new_times` into a sorted skeleton, each conditioned on its two
/// neighbours (nearest known left, nearest known right). Times already present
/// are left unchanged. Throws std::domain_error for times outside the range.
std::vector<SkeletonPoint> interpolate_skeleton(std::span<const SkeletonPoint> points,
                                                std::span<const double> new_times,
                                                RngStream& rng);

}  // namespace exdiff
