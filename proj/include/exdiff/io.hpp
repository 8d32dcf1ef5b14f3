#pragma once

// CSV and SVG output. Numbers are written in shortest round-trip form, so a
// fixed seed gives byte-identical files.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exdiff/exact.hpp"

namespace exdiff {

/// Header `path_id,t,x,l`, one row per skeleton point, paths in index order.
std::string skeletons_csv(std::span<const Skeleton> paths);

/// Header `grid,kde_exact,kde_euler`.
std::string kde_comparison_csv(std::span<const double> grid, std::span<const double> exact,
                               std::span<const double> euler);

/// Line plot of a CSV produced above. A `path_id,t,x,l` table draws x against
/// t for the first `max_paths` paths; any other table draws every column
/// against the first one (first series solid, the rest dashed).
std::string render_svg(std::string_view csv, std::string_view title, std::size_t max_paths = 50);

/// Writes to a temporary file in the same directory, then renames it over
/// `path`, so readers never see a partial file. Throws std::runtime_error.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string format_double(double v);

}  // namespace exdiff
