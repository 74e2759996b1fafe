#include "stepsize/landscape.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "stepsize/parallel.hpp"

namespace stepsize {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_axis(const std::vector<double>& axis, const char* name) {
    if (axis.empty()) {
        throw ConfigError(std::string("landscape: ") + name + " axis must be nonempty");
    }
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!std::isfinite(axis[i]) || axis[i] < 0.0) {
            throw ConfigError(std::string("landscape: ") + name +
                              " axis must be nonnegative and finite");
        }
        if (i > 0 && axis[i] <= axis[i - 1]) {
            throw ConfigError(std::string("landscape: ") + name +
                              " axis must be strictly increasing");
        }
    }
}

}  // namespace

double evaluate_point(const FlipProblemConfig& problem, double alpha1, double alpha2,
                      std::uint64_t steps, std::uint64_t seed) {
    validate(problem);
    if (problem.d != 2) {
        throw ConfigError("landscape: the loss surface is defined over the 2-D flip problem");
    }
    if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0)) {
        throw ConfigError("landscape: step-sizes must be nonnegative");
    }
    if (steps == 0) throw ConfigError("landscape: steps must be >= 1");

    FlipProblem prob(problem, seed);
    FixedVectorState state = make_fixed_vector({alpha1, alpha2});
    std::vector<double> x;
    double sum = 0.0;
    for (std::uint64_t t = 0; t < steps; ++t) {
        const double y_star = prob.next(x);
        const GradSample sample = make_sample(state.w, x, y_star);
        const double l = loss(sample);
        if (!std::isfinite(l)) return kInf;
        sum += l;
        try {
            fixed_vector_step(state, sample);
        } catch (const DivergenceError&) {
            return kInf;
        }
    }
    return sum / static_cast<double>(steps);
}

LandscapeGrid grid_landscape(const FlipProblemConfig& problem,
                             std::vector<double> alpha1_axis,
                             std::vector<double> alpha2_axis, std::uint64_t steps,
                             std::vector<std::uint64_t> seeds, std::size_t workers) {
    check_axis(alpha1_axis, "alpha1");
    check_axis(alpha2_axis, "alpha2");
    if (seeds.empty()) throw ConfigError("landscape: at least one seed is required");
    if (steps == 0) throw ConfigError("landscape: steps must be >= 1");
    validate(problem);
    if (problem.d != 2) {
        throw ConfigError("landscape: the loss surface is defined over the 2-D flip problem");
    }

    LandscapeGrid grid;
    grid.alpha1_axis = std::move(alpha1_axis);
    grid.alpha2_axis = std::move(alpha2_axis);
    grid.steps_per_point = steps;
    grid.seeds = std::move(seeds);

    const std::size_t n1 = grid.alpha1_axis.size();
    const std::size_t n2 = grid.alpha2_axis.size();
    grid.loss.assign(n2, std::vector<double>(n1, 0.0));

    run_jobs(n1 * n2, workers, [&](std::size_t cell) {
        const std::size_t i = cell / n1;
        const std::size_t j = cell % n1;
        double sum = 0.0;
        bool divergent = false;
        for (const std::uint64_t seed : grid.seeds) {
            const std::uint64_t point_seed = derive_seed(derive_seed(seed, i), j);
            const double l = evaluate_point(problem, grid.alpha1_axis[j],
                                            grid.alpha2_axis[i], steps, point_seed);
            if (!std::isfinite(l)) {
                divergent = true;
                break;
            }
            sum += l;
        }
        grid.loss[i][j] =
            divergent ? kInf : sum / static_cast<double>(grid.seeds.size());
    });
    return grid;
}

LandscapeMin argmin_landscape(const LandscapeGrid& grid) {
    if (grid.loss.size() != grid.alpha2_axis.size()) {
        throw DataError("argmin_landscape: matrix row count does not match the alpha2 axis");
    }
    bool found = false;
    std::size_t bi = 0, bj = 0;
    double best = kInf;
    for (std::size_t i = 0; i < grid.loss.size(); ++i) {
        if (grid.loss[i].size() != grid.alpha1_axis.size()) {
            throw DataError("argmin_landscape: matrix width does not match the alpha1 axis");
        }
        for (std::size_t j = 0; j < grid.loss[i].size(); ++j) {
            const double l = grid.loss[i][j];
            if (!std::isfinite(l)) continue;
            const bool better =
                !found || l < best ||
                (l == best && (j < bj || (j == bj && i < bi)));
            if (better) {
                found = true;
                best = l;
                bi = i;
                bj = j;
            }
        }
    }
    if (!found) throw DataError("argmin_landscape: every cell diverged");
    return LandscapeMin{grid.alpha1_axis[bj], grid.alpha2_axis[bi], best};
}

std::vector<std::pair<double, double>> trajectory_overlay(const RunRecord& run) {
    if (run.sample_alphas.empty()) {
        throw DataError(
            "trajectory_overlay: run recorded no step-size samples; set record_every > 0");
    }
    std::vector<std::pair<double, double>> trajectory;
    trajectory.reserve(run.sample_alphas.size() + 1);
    for (const auto& alpha : run.sample_alphas) {
        if (alpha.size() != 2) {
            throw DataError("trajectory_overlay: needs a 2-D run, got dimension " +
                            std::to_string(alpha.size()));
        }
        trajectory.emplace_back(alpha[0], alpha[1]);
    }
    if (run.final_alpha.size() == 2) {
        trajectory.emplace_back(run.final_alpha[0], run.final_alpha[1]);
    }
    return trajectory;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) throw ConfigError("linspace: need at least one point");
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + step * static_cast<double>(i);
    v[n - 1] = hi;
    return v;
}

}  // namespace stepsize
