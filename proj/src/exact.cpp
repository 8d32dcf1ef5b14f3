#include "exdiff/exact.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "exdiff/distributions.hpp"
#include "exdiff/local_time_laws.hpp"

namespace exdiff {

bool thinning_accept(const DriftSpec& d, std::span<const double> values,
                     std::span<const double> psis) {
    if (values.size() != psis.size())
        throw std::invalid_argument("thinning: values and marks differ in length");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(phi(d, values[i]) < psis[i])) return false;
    }
    return true;
}

ExactSimulator::ExactSimulator(DriftSpec drift, double x, double T, SimulatorOptions options)
    : law_(std::move(drift), x, T), options_(options) {
    if (!options_.skip_validation)
        validate_assumptions(law_.drift(), default_validation_grid(), x, T);
}

Skeleton ExactSimulator::simulate(std::span<const double> times, RngStream& rng) const {
    const double x = law_.x();
    const double T = law_.T();
    for (double t : times) {
        if (!(t > 0.0 && t <= T))
            throw std::domain_error("simulate: requested times must lie in (0, T]");
    }
    const DriftSpec& d = law_.drift();
    const double big_m = d.big_m();

    Skeleton out;
    std::vector<SkeletonPoint> path;
    for (std::uint64_t round = 1;; ++round) {
        if (round > options_.max_rounds) {
            std::ostringstream msg;
            msg << "simulate: no acceptance in " << options_.max_rounds
                << " rounds (acceptance probability below ~" << 1.0 / double(options_.max_rounds)
                << "); check kappa and M";
            throw std::runtime_error(msg.str());
        }
        const EndpointDraw end = sample_endpoint(law_, rng);
        std::vector<double> taus;
        if (big_m > 0.0) taus = sample_poisson_times(big_m, T, rng);
        out.poisson_counts.push_back(static_cast<std::uint32_t>(taus.size()));

        path.assign({SkeletonPoint{0.0, x, 0.0}, SkeletonPoint{T, end.b, end.l}});
        bool accepted = true;
        for (double tau : taus) {
            // Left to right: the nearest known left point and the endpoint.
            const SkeletonPoint left = path[path.size() - 2];
            const SkeletonPoint right = path.back();
            const BridgePoint p =
                sample_bridge_point({left.t, tau, right.t, left.x, right.x, left.l, right.l}, rng);
            path.insert(path.end() - 1, SkeletonPoint{tau, p.b, p.l});
            const double psi = big_m * rng.uniform();
            if (!(phi(d, p.b) < psi)) {
                accepted = false;
                break;
            }
        }
        if (!accepted) continue;
        out.rounds = round;
        out.poisson_times = std::move(taus);
        break;
    }
    out.points = interpolate_skeleton(path, times, rng);
    return out;
}

std::vector<Skeleton> ExactSimulator::sample_paths(std::span<const double> times, std::size_t n,
                                                   std::uint64_t seed, unsigned threads) const {
    std::vector<Skeleton> out(n);
    parallel_for(n, threads, [&](std::size_t i) {
        RngStream rng(seed, i);
        out[i] = simulate(times, rng);
    });
    return out;
}

Skeleton simulate_skeleton(const DriftSpec& d, double x, double T, std::span<const double> times,
                           RngStream& rng) {
    return ExactSimulator(d, x, T).simulate(times, rng);
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& work) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                work(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("EXACT_DIFFUSION_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace exdiff
