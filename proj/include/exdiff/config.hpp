#pragma once

// Experiment description read by the command-line tool.
//
// {
//   "drift": {"family": "piecewise_constant", "a1": 0.2, "a2": -0.9},
//   "x": 0, "T": 1, "n_paths": 100000, "times": [0.5], "seed": 1,
//   "comparison": {"dt": 1e-4, "n": 100000},
//   "output": {"csv": "out.csv", "svg": "out.svg", "json": "out.json"}
// }
//
// "piecewise_sine" takes "theta1" and "theta2" instead. Every field except
// "drift" has a default; unknown keys are rejected.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "exdiff/drift.hpp"

namespace exdiff {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EulerSettings {
    double dt = 1e-4;
    std::size_t n = 100000;
};

struct ExperimentConfig {
    std::string family;
    double p1 = 0.0;  ///< a1 or theta1
    double p2 = 0.0;  ///< a2 or theta2
    double x = 0.0;
    double T = 1.0;
    std::size_t n_paths = 1000;
    std::vector<double> times;
    std::uint64_t seed = 1;
    std::optional<unsigned> threads;
    std::optional<EulerSettings> comparison;
    std::string csv_path = "skeletons.csv";
    std::string svg_path;
    std::string json_path;

    DriftSpec drift() const;
};

/// Parses and validates; throws ConfigError naming the offending field.
ExperimentConfig parse_config(std::string_view json_text);

ExperimentConfig load_config(const std::string& path);

}  // namespace exdiff
