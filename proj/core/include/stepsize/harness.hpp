#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stepsize/optimizers.hpp"
#include "stepsize/problems.hpp"

namespace stepsize {

enum class Algorithm { classic_sgd, rmsprop, adam, idbd, oracle_sgd, fixed_vector };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);  // throws ConfigError

using ProblemConfig = std::variant<FlipProblemConfig, RateTrackingConfig>;

std::size_t problem_dim(const ProblemConfig& problem);
bool is_rate_tracking(const ProblemConfig& problem);
void validate(const ProblemConfig& problem);

// One optimizer instance. Fields an algorithm does not read are ignored by
// its factory; named_params reports only the ones it does.
struct OptimizerSpec {
    Algorithm algorithm = Algorithm::classic_sgd;
    double eta = 0.0;        // classic_sgd, oracle_sgd, rmsprop, adam
    double gamma_m = 1.0;    // adam; 1 disables the momentum trace
    double gamma_g = 0.0;    // rmsprop, adam
    double theta = 0.0;      // idbd
    double alpha0 = 0.05;    // idbd starting step-size
    std::vector<double> alpha;  // fixed_vector
    double epsilon = kDefaultEpsilon;
};

// Ordered (name, value) hyperparameters identifying the spec in sweep rows
// and CSV columns.
std::vector<std::pair<std::string, double>> named_params(const OptimizerSpec& spec);

// Assigns a hyperparameter by name ("eta", "gamma_m", "gamma_g", "theta",
// "alpha0", "epsilon"); throws ConfigError naming an unknown key.
void set_param(OptimizerSpec& spec, const std::string& name, double value);

// Builds the initial optimizer state for a problem (weights at zero). The
// oracle needs the flip problem's layout to zero its constant components.
OptimizerState make_optimizer(const OptimizerSpec& spec, const ProblemConfig& problem);

// ---------------------------------------------------------------------------

struct RunConfig {
    ProblemConfig problem;
    OptimizerSpec optimizer;
    std::uint64_t steps = 0;
    std::uint64_t seed = 0;
    std::uint64_t record_every = 0;  // sampling stride for traces; 0 = summary only
};

void validate(const RunConfig& cfg);

struct RunRecord {
    std::uint64_t steps = 0;        // configured horizon
    std::uint64_t steps_taken = 0;  // equals steps unless the run diverged
    std::uint64_t record_every = 0;

    // Lifetime mean of delta^2 over all steps, transients included; +inf when
    // the run diverged. Tail covers the final 10% of the horizon.
    double mean_loss = 0.0;
    double tail_mean_loss = 0.0;
    bool diverged = false;
    std::uint64_t divergence_step = 0;  // 1-based; 0 when not diverged

    std::vector<double> final_alpha;  // effective step-size after the last update
    std::vector<double> final_weights;

    // Strided trace, sampled before the update at steps 0, record_every, ...
    std::vector<std::uint64_t> sample_steps;
    std::vector<double> sample_losses;
    std::vector<std::vector<double>> sample_alphas;
    std::vector<double> sample_sigmas;       // rate-tracking runs only
    std::vector<double> sample_alpha_stars;  // rate-tracking runs only
};

RunRecord run_episode(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Sweeps: cross-product of log-grids per algorithm, every point run on every
// seed, rows in deterministic grid-then-seed order regardless of worker count.

struct AlgorithmGrid {
    OptimizerSpec base;  // algorithm and defaults for the non-swept fields
    std::vector<std::pair<std::string, std::vector<double>>> axes;  // swept params
};

struct SweepRow {
    Algorithm algorithm = Algorithm::classic_sgd;
    std::vector<std::pair<std::string, double>> params;
    std::uint64_t seed = 0;
    std::uint64_t steps = 0;
    double mean_loss = 0.0;
    double tail_mean_loss = 0.0;
    bool diverged = false;
};

struct SweepTable {
    std::vector<SweepRow> rows;
};

// Cross-product expansion of a grid's axes over its base spec, row-major
// with the last axis fastest — the row order sweep() uses.
std::vector<OptimizerSpec> expand_grid(const AlgorithmGrid& grid);

SweepTable sweep(const ProblemConfig& problem, const std::vector<AlgorithmGrid>& grids,
                 const std::vector<std::uint64_t>& seeds, std::uint64_t steps,
                 std::size_t workers = 1);

struct BestConfig {
    Algorithm algorithm = Algorithm::classic_sgd;
    std::vector<std::pair<std::string, double>> params;
    double mean_loss = 0.0;  // seed-averaged lifetime loss
};

// Point minimizing seed-averaged lifetime loss; ties broken toward smaller
// hyperparameter values (lexicographic). Throws DataError when every point
// diverged. The filtered overload restricts to one algorithm's rows.
BestConfig best_config(const SweepTable& table);
BestConfig best_config(const SweepTable& table, Algorithm algorithm);

// Rebuilds the spec a sweep row or best-config point describes.
OptimizerSpec spec_from_params(Algorithm algorithm, const OptimizerSpec& base,
                               std::span<const std::pair<std::string, double>> params);

// ---------------------------------------------------------------------------
// Tracking metrics against the rate-tracking oracle (Fig. 3 quantities).

struct SegmentStat {
    std::uint64_t segment = 0;  // sigma-segment index, step / sigma_period
    double sigma = 0.0;
    double alpha_star = 0.0;
    double mean_alpha = 0.0;  // post-burn-in mean learned step-size
};

struct TrackingSummary {
    std::vector<SegmentStat> segments;
    double rank_correlation = 0.0;  // Spearman of segment mean alpha vs alpha*
    double mean_abs_error = 0.0;    // mean |alpha - alpha*| post burn-in
};

// Requires a record carrying (sigma, alpha*, alpha) samples from a d=1 run;
// throws DataError otherwise. The first burn_in_fraction of each segment is
// excluded from segment means and the error metric.
TrackingSummary tracking_metrics(const RunRecord& record, std::uint64_t sigma_period,
                                 double burn_in_fraction = 0.2);

// Spearman rank correlation with average ranks for ties; throws DataError on
// length mismatch or fewer than two points.
double spearman_rank_correlation(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Meta-step-size shift (Fig. 4): sweep one hyperparameter per target-weight
// amplitude and report how far the winner moves.

struct ShiftRow {
    double amplitude = 0.0;
    double best_param = 0.0;
    double mean_loss = 0.0;
};

struct ShiftResult {
    Algorithm algorithm = Algorithm::classic_sgd;
    std::string param_name;
    std::vector<ShiftRow> rows;     // one per amplitude, input order
    double log10_spread = 0.0;      // max - min of log10(best_param)
};

ShiftResult shift_experiment(const FlipProblemConfig& base_problem,
                             const OptimizerSpec& base_spec, const std::string& param_name,
                             const std::vector<double>& param_grid,
                             const std::vector<double>& amplitudes,
                             const std::vector<std::uint64_t>& seeds, std::uint64_t steps,
                             std::size_t workers = 1);

}  // namespace stepsize
