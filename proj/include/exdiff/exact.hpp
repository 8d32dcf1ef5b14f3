#pragma once

// Exact skeletons of dX = alpha(X) dt + dB, X_0 = x, on [0, T] by
// retrospective rejection: propose (X_T, L_T) from the tilted endpoint law,
// fill the path at Poisson(M) times and thin with phi.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "exdiff/drift.hpp"
#include "exdiff/endpoint.hpp"
#include "exdiff/rng.hpp"

namespace exdiff {

struct Skeleton {
    /// Starts at (0, x, 0), ends at T; times strictly increasing.
    std::vector<SkeletonPoint> points;
    /// Proposal rounds used, including the accepted one.
    std::uint64_t rounds = 0;
    /// Poisson event count of every round, in order.
    std::vector<std::uint32_t> poisson_counts;
    /// Event times of the accepted round.
    std::vector<double> poisson_times;
};

struct SimulatorOptions {
    /// Rejection rounds allowed per path before giving up.
    std::uint64_t max_rounds = 1'000'000;
    /// Skip the (quadrature based) drift assumption checks at construction.
    bool skip_validation = false;
};

/// True iff phi(values[i]) < psis[i] for every i. Empty input accepts.
bool thinning_accept(const DriftSpec& d, std::span<const double> values,
                     std::span<const double> psis);

class ExactSimulator {
  public:
    /// Validates the drift at (x, T) and builds the endpoint law once.
    ExactSimulator(DriftSpec drift, double x, double T, SimulatorOptions options = {});

    /// One exact skeleton containing 0, T, the accepted Poisson times and
    /// `times` (each in (0, T]). Throws std::runtime_error when the round cap
    /// is hit.
    Skeleton simulate(std::span<const double> times, RngStream& rng) const;

    /// n skeletons; path i uses RngStream(seed, i), so the output does not
    /// depend on `threads`.
    std::vector<Skeleton> sample_paths(std::span<const double> times, std::size_t n,
                                       std::uint64_t seed, unsigned threads = 1) const;

    const EndpointLaw& endpoint_law() const { return law_; }
    const DriftSpec& drift() const { return law_.drift(); }
    double x() const { return law_.x(); }
    double T() const { return law_.T(); }

  private:
    EndpointLaw law_;
    SimulatorOptions options_;
};

/// Convenience wrapper constructing a simulator for a single draw.
Skeleton simulate_skeleton(const DriftSpec& d, double x, double T, std::span<const double> times,
                           RngStream& rng);

/// Run `work(i)` for i in [0, n) on `threads` workers. Exceptions propagate.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& work);

/// Worker count from an explicit request, else EXACT_DIFFUSION_THREADS, else
/// the hardware concurrency.
unsigned resolve_threads(unsigned requested);

}  // namespace exdiff
