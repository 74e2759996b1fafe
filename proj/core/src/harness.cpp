#include "stepsize/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <optional>
#include <type_traits>

#include "stepsize/parallel.hpp"

namespace stepsize {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::classic_sgd: return "classic_sgd";
        case Algorithm::rmsprop: return "rmsprop";
        case Algorithm::adam: return "adam";
        case Algorithm::idbd: return "idbd";
        case Algorithm::oracle_sgd: return "oracle_sgd";
        case Algorithm::fixed_vector: return "fixed_vector";
    }
    throw ConfigError("unknown algorithm enum value");
}

Algorithm algorithm_from_string(const std::string& name) {
    if (name == "classic_sgd") return Algorithm::classic_sgd;
    if (name == "rmsprop") return Algorithm::rmsprop;
    if (name == "adam") return Algorithm::adam;
    if (name == "idbd") return Algorithm::idbd;
    if (name == "oracle_sgd") return Algorithm::oracle_sgd;
    if (name == "fixed_vector") return Algorithm::fixed_vector;
    throw ConfigError("unknown algorithm '" + name + "'");
}

std::size_t problem_dim(const ProblemConfig& problem) {
    if (const auto* flip = std::get_if<FlipProblemConfig>(&problem)) return flip->d;
    return 1;
}

bool is_rate_tracking(const ProblemConfig& problem) {
    return std::holds_alternative<RateTrackingConfig>(problem);
}

void validate(const ProblemConfig& problem) {
    std::visit([](const auto& cfg) { validate(cfg); }, problem);
}

std::vector<std::pair<std::string, double>> named_params(const OptimizerSpec& spec) {
    switch (spec.algorithm) {
        case Algorithm::classic_sgd:
        case Algorithm::oracle_sgd:
            return {{"eta", spec.eta}};
        case Algorithm::rmsprop:
            return {{"eta", spec.eta}, {"gamma_g", spec.gamma_g}};
        case Algorithm::adam:
            return {{"eta", spec.eta}, {"gamma_m", spec.gamma_m}, {"gamma_g", spec.gamma_g}};
        case Algorithm::idbd:
            return {{"theta", spec.theta}, {"alpha0", spec.alpha0}};
        case Algorithm::fixed_vector: {
            std::vector<std::pair<std::string, double>> out;
            out.reserve(spec.alpha.size());
            for (std::size_t i = 0; i < spec.alpha.size(); ++i) {
                out.emplace_back("alpha_" + std::to_string(i), spec.alpha[i]);
            }
            return out;
        }
    }
    throw ConfigError("unknown algorithm enum value");
}

void set_param(OptimizerSpec& spec, const std::string& name, double value) {
    if (name == "eta") {
        spec.eta = value;
    } else if (name == "gamma_m") {
        spec.gamma_m = value;
    } else if (name == "gamma_g") {
        spec.gamma_g = value;
    } else if (name == "theta") {
        spec.theta = value;
    } else if (name == "alpha0") {
        spec.alpha0 = value;
    } else if (name == "epsilon") {
        spec.epsilon = value;
    } else {
        throw ConfigError("unknown hyperparameter '" + name + "'");
    }
}

OptimizerState make_optimizer(const OptimizerSpec& spec, const ProblemConfig& problem) {
    const std::size_t d = problem_dim(problem);
    switch (spec.algorithm) {
        case Algorithm::classic_sgd:
            return make_sgd(d, spec.eta);
        case Algorithm::rmsprop:
            return make_rmsprop(d, spec.eta, spec.gamma_g, spec.epsilon);
        case Algorithm::adam:
            return make_adam(d, spec.eta, spec.gamma_m, spec.gamma_g, spec.epsilon);
        case Algorithm::idbd:
            return make_idbd(d, spec.theta, spec.alpha0);
        case Algorithm::oracle_sgd: {
            const auto* flip = std::get_if<FlipProblemConfig>(&problem);
            if (flip == nullptr) {
                throw ConfigError("oracle_sgd requires the weight-flipping problem");
            }
            return oracle_sgd_state(*flip, spec.eta);
        }
        case Algorithm::fixed_vector:
            if (spec.alpha.size() != d) {
                throw ConfigError("fixed_vector: alpha length " +
                                  std::to_string(spec.alpha.size()) +
                                  " != problem dimension " + std::to_string(d));
            }
            return make_fixed_vector(spec.alpha);
    }
    throw ConfigError("unknown algorithm enum value");
}

void validate(const RunConfig& cfg) {
    validate(cfg.problem);
    if (cfg.steps == 0) throw ConfigError("run: steps must be >= 1");
    if (cfg.record_every > 0) {
        const std::uint64_t retained = (cfg.steps - 1) / cfg.record_every + 1;
        if (retained > 1000000) {
            throw ConfigError("run: record_every " + std::to_string(cfg.record_every) +
                              " retains " + std::to_string(retained) +
                              " samples; the limit is 1000000");
        }
    }
}

namespace {

inline void step_any(SgdState& s, const GradSample& g) { sgd_step(s, g); }
inline void step_any(RmsPropState& s, const GradSample& g) { rmsprop_step(s, g); }
inline void step_any(AdamState& s, const GradSample& g) { adam_step(s, g); }
inline void step_any(IdbdState& s, const GradSample& g) { idbd_step(s, g); }
inline void step_any(FixedVectorState& s, const GradSample& g) { fixed_vector_step(s, g); }

template <typename Problem, typename State>
RunRecord episode_loop(const RunConfig& cfg, Problem& problem, State state) {
    constexpr bool kRate = std::is_same_v<Problem, RateTrackingProblem>;
    RunRecord rec;
    rec.steps = cfg.steps;
    rec.record_every = cfg.record_every;

    const std::uint64_t tail_count = std::max<std::uint64_t>(1, cfg.steps / 10);
    const std::uint64_t tail_start = cfg.steps - tail_count;

    if (cfg.record_every > 0) {
        const std::size_t n =
            static_cast<std::size_t>((cfg.steps - 1) / cfg.record_every + 1);
        rec.sample_steps.reserve(n);
        rec.sample_losses.reserve(n);
        rec.sample_alphas.reserve(n);
        if constexpr (kRate) {
            rec.sample_sigmas.reserve(n);
            rec.sample_alpha_stars.reserve(n);
        }
    }

    std::vector<double> x;
    double sum = 0.0;
    double tail_sum = 0.0;

    for (std::uint64_t t = 0; t < cfg.steps; ++t) {
        const double y_star = problem.next(x);
        const GradSample sample = make_sample(state.w, x, y_star);
        const double l = loss(sample);

        if (cfg.record_every > 0 && t % cfg.record_every == 0) {
            rec.sample_steps.push_back(t);
            rec.sample_losses.push_back(l);
            rec.sample_alphas.push_back(effective_step_size(state));
            if constexpr (kRate) {
                rec.sample_sigmas.push_back(problem.sigma());
                rec.sample_alpha_stars.push_back(optimal_alpha(problem.sigma()));
            }
        }

        if (!std::isfinite(l)) {
            rec.diverged = true;
            rec.divergence_step = t + 1;
            break;
        }
        sum += l;
        if (t >= tail_start) tail_sum += l;

        try {
            step_any(state, sample);
        } catch (const DivergenceError& err) {
            rec.diverged = true;
            rec.divergence_step = err.step();
            break;
        }
        rec.steps_taken = t + 1;
    }

    rec.mean_loss = rec.diverged ? kInf : sum / static_cast<double>(cfg.steps);
    rec.tail_mean_loss = rec.diverged ? kInf : tail_sum / static_cast<double>(tail_count);
    rec.final_alpha = effective_step_size(state);
    rec.final_weights.assign(state.w.begin(), state.w.end());
    return rec;
}

}  // namespace

RunRecord run_episode(const RunConfig& cfg) {
    validate(cfg);
    OptimizerState init = make_optimizer(cfg.optimizer, cfg.problem);
    return std::visit(
        [&](const auto& problem_cfg) {
            using P = std::decay_t<decltype(problem_cfg)>;
            using Problem = std::conditional_t<std::is_same_v<P, FlipProblemConfig>,
                                               FlipProblem, RateTrackingProblem>;
            Problem problem(problem_cfg, cfg.seed);
            return std::visit(
                [&](auto& state) { return episode_loop(cfg, problem, std::move(state)); },
                init);
        },
        cfg.problem);
}

namespace {

struct GridPoint {
    OptimizerSpec spec;
    std::vector<std::pair<std::string, double>> params;
};

std::vector<GridPoint> enumerate_points(const AlgorithmGrid& grid) {
    std::size_t n = 1;
    for (const auto& [name, values] : grid.axes) {
        if (values.empty()) throw ConfigError("sweep: empty grid for '" + name + "'");
        n *= values.size();
    }
    std::vector<GridPoint> points;
    points.reserve(n);
    std::vector<std::size_t> idx(grid.axes.size());
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t rem = k;
        for (std::size_t a = grid.axes.size(); a-- > 0;) {
            idx[a] = rem % grid.axes[a].second.size();
            rem /= grid.axes[a].second.size();
        }
        OptimizerSpec spec = grid.base;
        for (std::size_t a = 0; a < grid.axes.size(); ++a) {
            set_param(spec, grid.axes[a].first, grid.axes[a].second[idx[a]]);
        }
        points.push_back(GridPoint{std::move(spec), {}});
        points.back().params = named_params(points.back().spec);
    }
    return points;
}

}  // namespace

std::vector<OptimizerSpec> expand_grid(const AlgorithmGrid& grid) {
    std::vector<OptimizerSpec> specs;
    for (auto& point : enumerate_points(grid)) specs.push_back(std::move(point.spec));
    return specs;
}

SweepTable sweep(const ProblemConfig& problem, const std::vector<AlgorithmGrid>& grids,
                 const std::vector<std::uint64_t>& seeds, std::uint64_t steps,
                 std::size_t workers) {
    if (grids.empty()) throw ConfigError("sweep: no algorithm grids");
    if (seeds.empty()) throw ConfigError("sweep: no seeds");
    if (steps == 0) throw ConfigError("sweep: steps must be >= 1");
    validate(problem);

    std::vector<GridPoint> points;
    for (const auto& grid : grids) {
        auto batch = enumerate_points(grid);
        points.insert(points.end(), std::make_move_iterator(batch.begin()),
                      std::make_move_iterator(batch.end()));
    }

    SweepTable table;
    table.rows.resize(points.size() * seeds.size());
    run_jobs(table.rows.size(), workers, [&](std::size_t i) {
        const GridPoint& point = points[i / seeds.size()];
        const std::uint64_t seed = seeds[i % seeds.size()];
        const RunRecord rec = run_episode(RunConfig{problem, point.spec, steps, seed, 0});
        SweepRow& row = table.rows[i];
        row.algorithm = point.spec.algorithm;
        row.params = point.params;
        row.seed = seed;
        row.steps = steps;
        row.mean_loss = rec.mean_loss;
        row.tail_mean_loss = rec.tail_mean_loss;
        row.diverged = rec.diverged;
    });
    return table;
}

namespace {

struct Aggregate {
    Algorithm algorithm = Algorithm::classic_sgd;
    std::vector<std::pair<std::string, double>> params;
    double sum = 0.0;
    std::size_t count = 0;
};

// Tie-break order: algorithm enum, then hyperparameter values lexicographic.
bool point_less(const Aggregate& a, const Aggregate& b) {
    if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
    const std::size_t n = std::min(a.params.size(), b.params.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (a.params[i].second != b.params[i].second) {
            return a.params[i].second < b.params[i].second;
        }
    }
    return a.params.size() < b.params.size();
}

BestConfig best_config_impl(const SweepTable& table, std::optional<Algorithm> filter) {
    std::vector<Aggregate> aggregates;
    for (const SweepRow& row : table.rows) {
        if (filter && row.algorithm != *filter) continue;
        Aggregate* agg = nullptr;
        for (Aggregate& a : aggregates) {
            if (a.algorithm == row.algorithm && a.params == row.params) {
                agg = &a;
                break;
            }
        }
        if (agg == nullptr) {
            aggregates.push_back(Aggregate{row.algorithm, row.params, 0.0, 0});
            agg = &aggregates.back();
        }
        agg->sum += row.mean_loss;
        ++agg->count;
    }
    if (aggregates.empty()) {
        throw DataError(filter ? "best_config: no rows for algorithm " + to_string(*filter)
                               : "best_config: empty sweep table");
    }

    const Aggregate* best = nullptr;
    double best_mean = kInf;
    for (const Aggregate& a : aggregates) {
        const double mean = a.sum / static_cast<double>(a.count);
        if (!std::isfinite(mean)) continue;
        if (best == nullptr || mean < best_mean ||
            (mean == best_mean && point_less(a, *best))) {
            best = &a;
            best_mean = mean;
        }
    }
    if (best == nullptr) throw DataError("best_config: every configuration diverged");
    return BestConfig{best->algorithm, best->params, best_mean};
}

}  // namespace

BestConfig best_config(const SweepTable& table) { return best_config_impl(table, {}); }

BestConfig best_config(const SweepTable& table, Algorithm algorithm) {
    return best_config_impl(table, algorithm);
}

OptimizerSpec spec_from_params(Algorithm algorithm, const OptimizerSpec& base,
                               std::span<const std::pair<std::string, double>> params) {
    OptimizerSpec spec = base;
    spec.algorithm = algorithm;
    for (const auto& [name, value] : params) {
        if (name.rfind("alpha_", 0) == 0) {
            const std::size_t i = std::strtoull(name.c_str() + 6, nullptr, 10);
            if (spec.alpha.size() <= i) spec.alpha.resize(i + 1, 0.0);
            spec.alpha[i] = value;
        } else {
            set_param(spec, name, value);
        }
    }
    return spec;
}

namespace {

// Average ranks, 1-based, ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = shared;
        i = j + 1;
    }
    return rank;
}

}  // namespace

double spearman_rank_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("spearman: length mismatch");
    if (a.size() < 2) throw DataError("spearman: need at least two points");
    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = ra[i] - ma;
        const double db = rb[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;  // a constant series carries no ranking
    return sab / std::sqrt(saa * sbb);
}

TrackingSummary tracking_metrics(const RunRecord& record, std::uint64_t sigma_period,
                                 double burn_in_fraction) {
    if (sigma_period == 0) throw ConfigError("tracking_metrics: sigma_period must be >= 1");
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
        throw ConfigError("tracking_metrics: burn-in fraction must be in [0, 1)");
    }
    const std::size_t n = record.sample_steps.size();
    if (n == 0 || record.sample_alphas.size() != n || record.sample_sigmas.size() != n ||
        record.sample_alpha_stars.size() != n) {
        throw DataError(
            "tracking_metrics: record lacks (sigma, alpha*, alpha) samples; rerun the "
            "rate-tracking problem with record_every > 0");
    }

    struct Accum {
        std::uint64_t segment = 0;
        double sigma = 0.0;
        double alpha_star = 0.0;
        double sum = 0.0;
        std::size_t count = 0;
    };
    std::vector<Accum> accums;
    const double burn_steps = burn_in_fraction * static_cast<double>(sigma_period);
    double abs_err_sum = 0.0;
    std::size_t abs_err_n = 0;

    for (std::size_t k = 0; k < n; ++k) {
        if (record.sample_alphas[k].empty()) {
            throw DataError("tracking_metrics: empty step-size sample");
        }
        const std::uint64_t step = record.sample_steps[k];
        if (static_cast<double>(step % sigma_period) < burn_steps) continue;
        const std::uint64_t segment = step / sigma_period;
        const double alpha = record.sample_alphas[k][0];
        if (accums.empty() || accums.back().segment != segment) {
            accums.push_back(
                Accum{segment, record.sample_sigmas[k], record.sample_alpha_stars[k], 0.0, 0});
        }
        accums.back().sum += alpha;
        ++accums.back().count;
        abs_err_sum += std::abs(alpha - record.sample_alpha_stars[k]);
        ++abs_err_n;
    }
    if (accums.empty()) throw DataError("tracking_metrics: no samples survive the burn-in");

    TrackingSummary out;
    out.segments.reserve(accums.size());
    std::vector<double> means, stars;
    means.reserve(accums.size());
    stars.reserve(accums.size());
    for (const Accum& a : accums) {
        const double mean = a.sum / static_cast<double>(a.count);
        out.segments.push_back(SegmentStat{a.segment, a.sigma, a.alpha_star, mean});
        means.push_back(mean);
        stars.push_back(a.alpha_star);
    }
    out.mean_abs_error = abs_err_sum / static_cast<double>(abs_err_n);
    out.rank_correlation =
        accums.size() >= 2 ? spearman_rank_correlation(means, stars) : 0.0;
    return out;
}

ShiftResult shift_experiment(const FlipProblemConfig& base_problem,
                             const OptimizerSpec& base_spec, const std::string& param_name,
                             const std::vector<double>& param_grid,
                             const std::vector<double>& amplitudes,
                             const std::vector<std::uint64_t>& seeds, std::uint64_t steps,
                             std::size_t workers) {
    if (amplitudes.empty()) throw ConfigError("shift: no amplitudes");
    {
        OptimizerSpec probe = base_spec;
        set_param(probe, param_name, 1.0);  // rejects unknown names
        bool reported = false;
        for (const auto& [name, value] : named_params(probe)) {
            if (name == param_name) reported = true;
        }
        if (!reported) {
            throw ConfigError("shift: '" + param_name + "' is not a hyperparameter of " +
                              to_string(base_spec.algorithm));
        }
    }

    ShiftResult out;
    out.algorithm = base_spec.algorithm;
    out.param_name = param_name;
    for (const double amplitude : amplitudes) {
        FlipProblemConfig problem = base_problem;
        problem.amplitude = amplitude;
        const AlgorithmGrid grid{base_spec, {{param_name, param_grid}}};
        const SweepTable table = sweep(ProblemConfig{problem}, {grid}, seeds, steps, workers);
        const BestConfig best = best_config(table);
        double best_param = 0.0;
        for (const auto& [name, value] : best.params) {
            if (name == param_name) best_param = value;
        }
        out.rows.push_back(ShiftRow{amplitude, best_param, best.mean_loss});
    }

    double lo = kInf, hi = -kInf;
    for (const ShiftRow& row : out.rows) {
        const double l = std::log10(row.best_param);
        lo = std::min(lo, l);
        hi = std::max(hi, l);
    }
    out.log10_spread = hi - lo;
    return out;
}

}  // namespace stepsize
