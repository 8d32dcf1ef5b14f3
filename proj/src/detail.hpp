#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace exdiff::detail {

// Upper bound on proposals in any inner rejection loop. Reaching it means the
// envelope is badly mismatched to the query, never a legitimate outcome.
inline constexpr std::uint64_t kMaxRejectionIterations = 200'000'000;

inline void check_iterations(std::uint64_t iterations, const char* where) {
    if (iterations >= kMaxRejectionIterations) {
        throw std::runtime_error(std::string(where) + ": rejection loop exceeded " +
                                 std::to_string(kMaxRejectionIterations) + " proposals");
    }
}

// Every rejection step routes its ratio through here.
inline double checked_ratio(double ratio, const char* where) {
    if (!(ratio >= 0.0 && ratio <= 1.0 + 1e-12)) {
        throw std::logic_error(std::string(where) + ": acceptance ratio " +
                               std::to_string(ratio) + " outside [0, 1]");
    }
    return ratio;
}

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// log(exp(a) - exp(b)) for a >= b.
inline double log_diff_exp(double a, double b) {
    if (b == -INFINITY) return a;
    return a + std::log(-std::expm1(b - a));
}

inline double log_sum_exp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == -INFINITY) return a;
    return a + std::log1p(std::exp(b - a));
}

}  // namespace exdiff::detail
