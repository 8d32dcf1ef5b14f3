#pragma once

// Registered oracle tests: every sampler is checked against an independent
// quadrature or Levy-identity oracle. Backs `exact-diffusion validate`.

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace exdiff {

struct OracleResult {
    std::string name;
    std::string suite;
    /// "p_value" (pass when value > threshold), "ks_statistic" or "max_error"
    /// (pass when value < threshold).
    std::string kind;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string detail;
};

struct OracleTest {
    std::string name;
    std::string suite;  ///< primitives, bridge, endpoint or algorithm
    std::vector<std::string> covers;
    std::function<OracleResult(std::uint64_t seed)> run;
};

/// Family-wise false-failure budget; p-value tests share it equally.
inline constexpr double kFamilyAlpha = 0.01;

/// KS statistic bound at n = 1e5 used by the conditional-law checks.
inline constexpr double kKsBound = 0.0061;

const std::vector<OracleTest>& oracle_registry();

/// Every sampler that must have at least one registered oracle.
const std::vector<std::string>& sampler_manifest();

/// Manifest entries no registered test covers (empty when complete).
std::vector<std::string> uncovered_samplers();

/// Runs tests whose name or suite contains `filter` (empty runs all).
std::vector<OracleResult> run_oracle_suite(std::string_view filter, std::uint64_t seed,
                                           const std::function<void(const OracleResult&)>& on_result = nullptr);

/// {"seed":..., "tests":[{name, suite, kind, statistic, threshold, pass, detail}], "pass":...}
std::string oracle_report_json(const std::vector<OracleResult>& results, std::uint64_t seed);

}  // namespace exdiff
