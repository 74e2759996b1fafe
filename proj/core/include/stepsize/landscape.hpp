#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "stepsize/harness.hpp"
#include "stepsize/problems.hpp"

namespace stepsize {

struct LandscapeGrid {
    std::vector<double> alpha1_axis;
    std::vector<double> alpha2_axis;
    std::uint64_t steps_per_point = 0;
    std::vector<std::uint64_t> seeds;
    // loss[i][j]: lifetime MSE at (alpha1_axis[j], alpha2_axis[i]), averaged
    // over seeds; +inf marks a divergent cell.
    std::vector<std::vector<double>> loss;
};

struct LandscapeMin {
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double loss = 0.0;
};

// Lifetime MSE of the constant step-size vector (alpha1, alpha2) on the 2-D
// flip problem, starting from zero weights; +inf when the run diverges.
double evaluate_point(const FlipProblemConfig& problem, double alpha1, double alpha2,
                      std::uint64_t steps, std::uint64_t seed);

// Evaluates every grid cell with seeds derived from (seed, row, column), so
// the matrix is identical for any evaluation order or worker count.
LandscapeGrid grid_landscape(const FlipProblemConfig& problem,
                             std::vector<double> alpha1_axis,
                             std::vector<double> alpha2_axis, std::uint64_t steps,
                             std::vector<std::uint64_t> seeds, std::size_t workers = 1);

// Minimal finite cell; ties broken toward smaller alpha1, then smaller
// alpha2. Throws DataError when every cell is +inf.
LandscapeMin argmin_landscape(const LandscapeGrid& grid);

// The recorded (alpha1, alpha2) points of a 2-D run plus its terminal point.
// Throws DataError when the run was not recorded or is not 2-D.
std::vector<std::pair<double, double>> trajectory_overlay(const RunRecord& run);

// n evenly spaced values from lo to hi inclusive (n == 1 gives {lo}).
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace stepsize
