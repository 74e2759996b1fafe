#include "stepsize/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <mutex>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "stepsize/csv.hpp"
#include "stepsize/errors.hpp"
#include "stepsize/harness.hpp"
#include "stepsize/landscape.hpp"
#include "stepsize/parallel.hpp"
#include "stepsize/plot.hpp"

namespace stepsize {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

// --------------------------------------------------------------------------
// Scales and presets.

enum class Scale { paper, desk, ci };

const char* to_string(Scale scale) {
    switch (scale) {
        case Scale::paper: return "paper";
        case Scale::desk: return "desk";
        case Scale::ci: return "ci";
    }
    return "desk";
}

Scale scale_from_string(const std::string& name) {
    if (name == "paper") return Scale::paper;
    if (name == "desk") return Scale::desk;
    if (name == "ci") return Scale::ci;
    throw ConfigError("'scale' must be one of paper, desk, ci; got '" + name + "'");
}

struct Preset {
    std::uint64_t steps = 0;
    std::size_t n_seeds = 0;
};

Preset preset_for(const std::string& name, Scale scale) {
    const bool ci = scale == Scale::ci;
    if (name == "landscape_fig1") {
        if (scale == Scale::paper) return {1'000'000, 3};
        return ci ? Preset{10'000, 1} : Preset{100'000, 3};
    }
    if (name == "weight_flipping_fig2") return ci ? Preset{20'000, 2} : Preset{200'000, 5};
    if (name == "rate_tracking_fig3") return ci ? Preset{100'000, 1} : Preset{1'000'000, 3};
    if (name == "shift_fig4") return ci ? Preset{20'000, 2} : Preset{200'000, 3};
    return ci ? Preset{20'000, 1} : Preset{200'000, 3};  // custom
}

// --------------------------------------------------------------------------
// Grids and built-in problem setups.

std::vector<double> pow2_grid(int lo, int hi, int step = 1) {
    std::vector<double> values;
    for (int e = lo; e <= hi; e += step) values.push_back(std::ldexp(1.0, e));
    return values;
}

std::vector<double> pow10_grid(int lo, int hi) {
    std::vector<double> values;
    for (int e = lo; e <= hi; ++e) values.push_back(std::pow(10.0, e));
    return values;
}

FlipProblemConfig fig1_problem() {
    FlipProblemConfig cfg;
    cfg.d = 2;
    cfg.n_constant = 1;
    return cfg;  // amplitude 1, flip every 20 steps
}

std::vector<double> fig1_axis(Scale scale) {
    return linspace(0.0, 0.6, scale == Scale::ci ? 31 : 61);
}

constexpr double kFig1RmsGammaG = 0.01;
constexpr double kFig1IdbdTheta = 0.002;

struct Trajectory {
    OptimizerSpec spec;
    std::string tag;
};

std::vector<Trajectory> fig1_trajectories() {
    std::vector<Trajectory> list;
    for (double eta : {0.05, 0.15, 0.3}) {
        OptimizerSpec spec;
        spec.algorithm = Algorithm::rmsprop;
        spec.eta = eta;
        spec.gamma_g = kFig1RmsGammaG;
        list.push_back({spec, "rmsprop_eta" + format_double(eta)});
    }
    for (double alpha0 : {0.05, 0.15, 0.3}) {
        OptimizerSpec spec;
        spec.algorithm = Algorithm::idbd;
        spec.theta = kFig1IdbdTheta;
        spec.alpha0 = alpha0;
        list.push_back({spec, "idbd_alpha0" + format_double(alpha0)});
    }
    return list;
}

AlgorithmGrid grid_for(Algorithm algorithm,
                       std::vector<std::pair<std::string, std::vector<double>>> axes) {
    AlgorithmGrid grid;
    grid.base.algorithm = algorithm;
    grid.axes = std::move(axes);
    return grid;
}

std::vector<AlgorithmGrid> fig2_grids() {
    return {
        grid_for(Algorithm::classic_sgd, {{"eta", pow2_grid(-18, 0)}}),
        grid_for(Algorithm::oracle_sgd, {{"eta", pow2_grid(-18, 0)}}),
        grid_for(Algorithm::rmsprop,
                 {{"eta", pow2_grid(-12, 0)}, {"gamma_g", pow2_grid(-10, 0, 2)}}),
        grid_for(Algorithm::adam, {{"eta", pow2_grid(-12, 0)},
                                   {"gamma_m", {0.1, 1.0}},
                                   {"gamma_g", pow2_grid(-10, 0, 2)}}),
        grid_for(Algorithm::idbd, {{"theta", pow2_grid(-18, 0)}}),
    };
}

std::vector<AlgorithmGrid> fig3_grids() {
    return {
        grid_for(Algorithm::classic_sgd, {{"eta", pow2_grid(-18, 0)}}),
        grid_for(Algorithm::rmsprop,
                 {{"eta", pow2_grid(-18, 2)}, {"gamma_g", pow2_grid(-10, 0, 2)}}),
        grid_for(Algorithm::idbd, {{"theta", pow2_grid(-18, 0)}}),
    };
}

// --------------------------------------------------------------------------
// Experiment files.

struct Resolved {
    std::string name;  // built-in name or "custom"
    std::string label;  // output-directory leaf
    Scale scale = Scale::desk;
    std::vector<std::uint64_t> seeds;
    std::uint64_t steps = 0;
    std::uint64_t record_every = 0;
    bool record_every_set = false;  // explicit in the file or on the command line
    std::size_t workers = 1;
    fs::path out_dir;

    // Custom payload; built-ins carry their own problem and grids.
    std::optional<ProblemConfig> problem;
    std::vector<AlgorithmGrid> grids;
    std::vector<OptimizerSpec> trajectories;
    std::vector<double> alpha1_axis;
    std::vector<double> alpha2_axis;
};

bool is_builtin(const std::string& name) {
    const auto& names = builtin_experiments();
    return std::find(names.begin(), names.end(), name) != names.end();
}

void check_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                const std::string& context) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* key) {
                return it.key() == key;
            }) == allowed.end()) {
            throw ConfigError("unknown key '" + it.key() + "' in " + context);
        }
    }
}

double get_double(const ordered_json& value, const std::string& context) {
    if (!value.is_number()) throw ConfigError("'" + context + "' must be a number");
    return value.get<double>();
}

std::uint64_t get_uint(const ordered_json& value, const std::string& context) {
    if (!value.is_number_unsigned()) {
        throw ConfigError("'" + context + "' must be a nonnegative integer");
    }
    return value.get<std::uint64_t>();
}

std::string get_string(const ordered_json& value, const std::string& context) {
    if (!value.is_string()) throw ConfigError("'" + context + "' must be a string");
    return value.get<std::string>();
}

std::vector<double> get_double_array(const ordered_json& value, const std::string& context) {
    if (!value.is_array() || value.empty()) {
        throw ConfigError("'" + context + "' must be a nonempty array of numbers");
    }
    std::vector<double> out;
    out.reserve(value.size());
    for (const auto& v : value) out.push_back(get_double(v, context));
    return out;
}

ordered_json load_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open experiment file '" + path + "'");
    try {
        return ordered_json::parse(in);
    } catch (const ordered_json::parse_error& e) {
        throw ConfigError("experiment file '" + path + "': " + e.what());
    }
}

const char* to_string(FlipMode mode) {
    return mode == FlipMode::choose_one_uniformly ? "choose_one_uniformly"
                                                  : "each_flips_with_prob_half";
}

FlipMode flip_mode_from_string(const std::string& name) {
    if (name == "choose_one_uniformly") return FlipMode::choose_one_uniformly;
    if (name == "each_flips_with_prob_half") return FlipMode::each_flips_with_prob_half;
    throw ConfigError(
        "'problem.flip_mode' must be choose_one_uniformly or each_flips_with_prob_half; got '" +
        name + "'");
}

ProblemConfig parse_problem(const ordered_json& p) {
    if (!p.is_object()) throw ConfigError("'problem' must be an object");
    if (!p.contains("kind")) throw ConfigError("'problem' needs a 'kind' key");
    const std::string kind = get_string(p["kind"], "problem.kind");
    if (kind == "weight_flipping") {
        check_keys(p, {"kind", "d", "n_constant", "amplitude", "flip_period", "flip_mode"},
                   "problem");
        FlipProblemConfig cfg;
        if (p.contains("d")) cfg.d = get_uint(p["d"], "problem.d");
        if (p.contains("n_constant")) {
            cfg.n_constant = get_uint(p["n_constant"], "problem.n_constant");
        }
        if (p.contains("amplitude")) cfg.amplitude = get_double(p["amplitude"], "problem.amplitude");
        if (p.contains("flip_period")) {
            cfg.flip_period = get_uint(p["flip_period"], "problem.flip_period");
        }
        if (p.contains("flip_mode")) {
            cfg.flip_mode = flip_mode_from_string(get_string(p["flip_mode"], "problem.flip_mode"));
        }
        validate(cfg);
        return cfg;
    }
    if (kind == "rate_tracking") {
        check_keys(p, {"kind", "sigma_period", "sigma_min", "sigma_max", "observation_noise_std"},
                   "problem");
        RateTrackingConfig cfg;
        if (p.contains("sigma_period")) {
            cfg.sigma_period = get_uint(p["sigma_period"], "problem.sigma_period");
        }
        if (p.contains("sigma_min")) cfg.sigma_min = get_double(p["sigma_min"], "problem.sigma_min");
        if (p.contains("sigma_max")) cfg.sigma_max = get_double(p["sigma_max"], "problem.sigma_max");
        if (p.contains("observation_noise_std")) {
            cfg.observation_noise_std =
                get_double(p["observation_noise_std"], "problem.observation_noise_std");
        }
        validate(cfg);
        return cfg;
    }
    throw ConfigError("'problem.kind' must be weight_flipping or rate_tracking; got '" + kind +
                      "'");
}

ordered_json problem_to_json(const ProblemConfig& problem) {
    ordered_json p;
    if (const auto* flip = std::get_if<FlipProblemConfig>(&problem)) {
        p["kind"] = "weight_flipping";
        p["d"] = flip->d;
        p["n_constant"] = flip->n_constant;
        p["amplitude"] = flip->amplitude;
        p["flip_period"] = flip->flip_period;
        p["flip_mode"] = to_string(flip->flip_mode);
    } else {
        const auto& rate = std::get<RateTrackingConfig>(problem);
        p["kind"] = "rate_tracking";
        p["sigma_period"] = rate.sigma_period;
        p["sigma_min"] = rate.sigma_min;
        p["sigma_max"] = rate.sigma_max;
        p["observation_noise_std"] = rate.observation_noise_std;
    }
    return p;
}

struct OptimizerEntry {
    OptimizerSpec spec;
    std::vector<std::pair<std::string, std::vector<double>>> axes;
};

OptimizerEntry parse_optimizer(const ordered_json& o, const std::string& context,
                               bool allow_grid) {
    if (!o.is_object()) throw ConfigError("'" + context + "' must be an object");
    if (!o.contains("algorithm")) throw ConfigError("'" + context + "' needs an 'algorithm' key");
    check_keys(o, {"algorithm", "eta", "gamma_m", "gamma_g", "theta", "alpha0", "epsilon",
                   "alpha", "grid"},
               context);
    OptimizerEntry entry;
    entry.spec.algorithm =
        algorithm_from_string(get_string(o["algorithm"], context + ".algorithm"));
    for (const char* key : {"eta", "gamma_m", "gamma_g", "theta", "alpha0", "epsilon"}) {
        if (o.contains(key)) {
            set_param(entry.spec, key, get_double(o[key], context + "." + key));
        }
    }
    if (o.contains("alpha")) {
        entry.spec.alpha = get_double_array(o["alpha"], context + ".alpha");
    }
    if (o.contains("grid")) {
        if (!allow_grid) throw ConfigError("'" + context + "' cannot carry a 'grid'");
        const ordered_json& g = o["grid"];
        if (!g.is_object() || g.empty()) {
            throw ConfigError("'" + context + ".grid' must be an object of value arrays");
        }
        for (auto it = g.begin(); it != g.end(); ++it) {
            const std::string axis_context = context + ".grid." + it.key();
            std::vector<double> values = get_double_array(it.value(), axis_context);
            OptimizerSpec probe = entry.spec;  // reject unknown axis names up front
            set_param(probe, it.key(), values.front());
            entry.axes.emplace_back(it.key(), std::move(values));
        }
    }
    return entry;
}

ordered_json optimizer_to_json(const OptimizerSpec& spec,
                               const std::vector<std::pair<std::string, std::vector<double>>>& axes) {
    ordered_json o;
    o["algorithm"] = to_string(spec.algorithm);
    switch (spec.algorithm) {
        case Algorithm::classic_sgd:
        case Algorithm::oracle_sgd:
            o["eta"] = spec.eta;
            break;
        case Algorithm::rmsprop:
            o["eta"] = spec.eta;
            o["gamma_g"] = spec.gamma_g;
            o["epsilon"] = spec.epsilon;
            break;
        case Algorithm::adam:
            o["eta"] = spec.eta;
            o["gamma_m"] = spec.gamma_m;
            o["gamma_g"] = spec.gamma_g;
            o["epsilon"] = spec.epsilon;
            break;
        case Algorithm::idbd:
            o["theta"] = spec.theta;
            o["alpha0"] = spec.alpha0;
            break;
        case Algorithm::fixed_vector:
            o["alpha"] = spec.alpha;
            break;
    }
    if (!axes.empty()) {
        ordered_json g;
        for (const auto& [name, values] : axes) g[name] = values;
        o["grid"] = g;
    }
    return o;
}

Resolved resolve(const std::string& experiment, const Overrides& overrides) {
    ordered_json doc = ordered_json::object();
    std::string name;
    std::string label;
    if (is_builtin(experiment)) {
        name = experiment;
        label = experiment;
    } else {
        doc = load_json_file(experiment);
        if (!doc.is_object()) {
            throw ConfigError("experiment file '" + experiment + "' must hold a JSON object");
        }
        if (!doc.contains("experiment")) {
            throw ConfigError("experiment file '" + experiment + "' needs an 'experiment' key");
        }
        name = get_string(doc["experiment"], "experiment");
        if (!is_builtin(name) && name != "custom") {
            std::string known;
            for (const auto& n : builtin_experiments()) known += n + ", ";
            throw ConfigError("unknown experiment '" + name + "'; expected one of " + known +
                              "or custom");
        }
        label = fs::path(experiment).stem().string();
        if (label.empty()) label = name;
    }

    const bool custom = name == "custom";
    if (custom) {
        check_keys(doc,
                   {"experiment", "scale", "seed", "seeds", "steps", "record_every", "workers",
                    "out", "problem", "optimizers", "trajectories", "axes"},
                   "experiment file");
    } else {
        check_keys(doc, {"experiment", "scale", "seed", "seeds", "steps", "record_every",
                         "workers", "out"},
                   "experiment file");
    }

    Resolved r;
    r.name = name;
    r.label = label;

    if (overrides.scale) {
        r.scale = scale_from_string(*overrides.scale);
    } else if (doc.contains("scale")) {
        r.scale = scale_from_string(get_string(doc["scale"], "scale"));
    }
    const Preset preset = preset_for(name, r.scale);

    if (overrides.steps) {
        r.steps = *overrides.steps;
    } else if (doc.contains("steps")) {
        r.steps = get_uint(doc["steps"], "steps");
    } else {
        r.steps = preset.steps;
    }
    if (r.steps == 0) throw ConfigError("'steps' must be >= 1");

    std::vector<std::uint64_t> explicit_seeds;
    if (doc.contains("seeds")) {
        const ordered_json& s = doc["seeds"];
        if (!s.is_array() || s.empty()) {
            throw ConfigError("'seeds' must be a nonempty array of integers");
        }
        for (const auto& v : s) explicit_seeds.push_back(get_uint(v, "seeds"));
    }
    std::uint64_t base_seed = 1;
    if (doc.contains("seed")) base_seed = get_uint(doc["seed"], "seed");
    if (overrides.seed) base_seed = *overrides.seed;
    if (overrides.seed || explicit_seeds.empty()) {
        const std::size_t n = explicit_seeds.empty() ? preset.n_seeds : explicit_seeds.size();
        for (std::size_t i = 0; i < n; ++i) r.seeds.push_back(base_seed + i);
    } else {
        r.seeds = std::move(explicit_seeds);
    }

    if (overrides.record_every) {
        r.record_every = *overrides.record_every;
        r.record_every_set = true;
    } else if (doc.contains("record_every")) {
        r.record_every = get_uint(doc["record_every"], "record_every");
        r.record_every_set = true;
    }

    if (overrides.workers) {
        r.workers = *overrides.workers;
    } else if (doc.contains("workers")) {
        r.workers = get_uint(doc["workers"], "workers");
    }
    if (r.workers == 0) throw ConfigError("'workers' must be >= 1");

    if (overrides.out_dir) {
        r.out_dir = *overrides.out_dir;
    } else if (doc.contains("out")) {
        r.out_dir = fs::path(get_string(doc["out"], "out"));
    } else if (const char* env = std::getenv(kOutDirEnvVar); env != nullptr && *env != '\0') {
        r.out_dir = fs::path(env) / r.label;
    } else {
        r.out_dir = fs::path("results") / r.label;
    }

    if (custom) {
        if (doc.contains("problem")) r.problem = parse_problem(doc["problem"]);
        if (doc.contains("optimizers")) {
            const ordered_json& arr = doc["optimizers"];
            if (!arr.is_array() || arr.empty()) {
                throw ConfigError("'optimizers' must be a nonempty array");
            }
            for (std::size_t i = 0; i < arr.size(); ++i) {
                OptimizerEntry entry =
                    parse_optimizer(arr[i], "optimizers[" + std::to_string(i) + "]", true);
                r.grids.push_back(AlgorithmGrid{std::move(entry.spec), std::move(entry.axes)});
            }
        }
        if (doc.contains("trajectories")) {
            const ordered_json& arr = doc["trajectories"];
            if (!arr.is_array() || arr.empty()) {
                throw ConfigError("'trajectories' must be a nonempty array");
            }
            for (std::size_t i = 0; i < arr.size(); ++i) {
                OptimizerEntry entry =
                    parse_optimizer(arr[i], "trajectories[" + std::to_string(i) + "]", false);
                r.trajectories.push_back(std::move(entry.spec));
            }
        }
        if (doc.contains("axes")) {
            const ordered_json& ax = doc["axes"];
            if (!ax.is_object()) throw ConfigError("'axes' must be an object");
            check_keys(ax, {"alpha1", "alpha2"}, "axes");
            if (!ax.contains("alpha1") || !ax.contains("alpha2")) {
                throw ConfigError("'axes' needs 'alpha1' and 'alpha2' arrays");
            }
            r.alpha1_axis = get_double_array(ax["alpha1"], "axes.alpha1");
            r.alpha2_axis = get_double_array(ax["alpha2"], "axes.alpha2");
        }
    }
    return r;
}

ordered_json resolved_to_json(const Resolved& r) {
    ordered_json doc;
    doc["experiment"] = r.name;
    doc["scale"] = to_string(r.scale);
    doc["seeds"] = r.seeds;
    doc["steps"] = r.steps;
    if (r.record_every_set) doc["record_every"] = r.record_every;
    doc["workers"] = r.workers;
    doc["out"] = r.out_dir.generic_string();
    if (r.name == "custom") {
        if (r.problem) doc["problem"] = problem_to_json(*r.problem);
        if (!r.grids.empty()) {
            ordered_json arr = ordered_json::array();
            for (const AlgorithmGrid& grid : r.grids) {
                arr.push_back(optimizer_to_json(grid.base, grid.axes));
            }
            doc["optimizers"] = arr;
        }
        if (!r.trajectories.empty()) {
            ordered_json arr = ordered_json::array();
            for (const OptimizerSpec& spec : r.trajectories) {
                arr.push_back(optimizer_to_json(spec, {}));
            }
            doc["trajectories"] = arr;
        }
        if (!r.alpha1_axis.empty()) {
            ordered_json ax;
            ax["alpha1"] = r.alpha1_axis;
            ax["alpha2"] = r.alpha2_axis;
            doc["axes"] = ax;
        }
    }
    return doc;
}

void prepare_out_dir(const Resolved& r) {
    std::error_code ec;
    fs::create_directories(r.out_dir, ec);
    if (ec) {
        throw DataError("cannot create output directory '" + r.out_dir.generic_string() +
                        "': " + ec.message());
    }
    const fs::path path = r.out_dir / "resolved_config.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.generic_string() + "'");
    out << resolved_to_json(r).dump(2) << "\n";
}

// --------------------------------------------------------------------------
// Phases.

std::string params_to_string(const std::vector<std::pair<std::string, double>>& params) {
    std::string s;
    for (const auto& [name, value] : params) {
        if (!s.empty()) s += " ";
        s += name + "=" + format_double(value);
    }
    return s;
}

bool all_diverged(const SweepTable& table) {
    return !table.rows.empty() &&
           std::all_of(table.rows.begin(), table.rows.end(),
                       [](const SweepRow& row) { return row.diverged; });
}

// Sweep + summary.csv; per-run trace_<point>_<algorithm>_seed<seed>.csv files
// when record_every > 0.
SweepTable run_summary_phase(const Resolved& r, const ProblemConfig& problem,
                             const std::vector<AlgorithmGrid>& grids,
                             const std::string& summary_name, std::ostream& out) {
    SweepTable table;
    if (r.record_every == 0) {
        table = sweep(problem, grids, r.seeds, r.steps, r.workers);
    } else {
        validate(problem);
        struct Point {
            OptimizerSpec spec;
            std::vector<std::pair<std::string, double>> params;
        };
        std::vector<Point> points;
        for (const AlgorithmGrid& grid : grids) {
            for (OptimizerSpec& spec : expand_grid(grid)) {
                Point point{std::move(spec), {}};
                point.params = named_params(point.spec);
                points.push_back(std::move(point));
            }
        }
        table.rows.resize(points.size() * r.seeds.size());
        std::mutex io_mutex;
        run_jobs(table.rows.size(), r.workers, [&](std::size_t i) {
            const Point& point = points[i / r.seeds.size()];
            const std::uint64_t seed = r.seeds[i % r.seeds.size()];
            const RunRecord rec =
                run_episode(RunConfig{problem, point.spec, r.steps, seed, r.record_every});
            SweepRow& row = table.rows[i];
            row.algorithm = point.spec.algorithm;
            row.params = point.params;
            row.seed = seed;
            row.steps = r.steps;
            row.mean_loss = rec.mean_loss;
            row.tail_mean_loss = rec.tail_mean_loss;
            row.diverged = rec.diverged;
            const std::string trace_name = "trace_" + std::to_string(i / r.seeds.size()) + "_" +
                                           to_string(point.spec.algorithm) + "_seed" +
                                           std::to_string(seed) + ".csv";
            const std::lock_guard<std::mutex> lock(io_mutex);
            write_trace_csv(r.out_dir / trace_name, rec);
        });
    }
    write_summary_csv(r.out_dir / summary_name, table);
    out << "wrote " << (r.out_dir / summary_name).generic_string() << " (" << table.rows.size()
        << " rows)\n";
    return table;
}

void report_best(const SweepTable& table, std::ostream& out) {
    std::vector<Algorithm> algorithms;
    for (const SweepRow& row : table.rows) {
        if (std::find(algorithms.begin(), algorithms.end(), row.algorithm) == algorithms.end()) {
            algorithms.push_back(row.algorithm);
        }
    }
    for (Algorithm algorithm : algorithms) {
        try {
            const BestConfig best = best_config(table, algorithm);
            out << "best " << to_string(algorithm) << ": " << params_to_string(best.params)
                << " mean_loss=" << format_double(best.mean_loss) << "\n";
        } catch (const DataError&) {
            out << "best " << to_string(algorithm) << ": every configuration diverged\n";
        }
    }
}

int run_landscape_phase(const Resolved& r, std::ostream& out, std::ostream& err) {
    FlipProblemConfig problem = fig1_problem();
    if (r.problem) {
        const auto* flip = std::get_if<FlipProblemConfig>(&*r.problem);
        if (flip == nullptr || flip->d != 2) {
            throw ConfigError("the landscape phase needs a 2-D weight_flipping problem");
        }
        problem = *flip;
    }
    const std::vector<double> alpha1 = r.alpha1_axis.empty() ? fig1_axis(r.scale) : r.alpha1_axis;
    const std::vector<double> alpha2 = r.alpha2_axis.empty() ? fig1_axis(r.scale) : r.alpha2_axis;

    const LandscapeGrid grid =
        grid_landscape(problem, alpha1, alpha2, r.steps, r.seeds, r.workers);
    write_landscape_csv(r.out_dir / "landscape.csv", grid);
    out << "wrote " << (r.out_dir / "landscape.csv").generic_string() << " (" << alpha2.size()
        << "x" << alpha1.size() << " cells)\n";

    std::uint64_t stride = std::max<std::uint64_t>(1, r.steps / 1000);
    if (r.record_every_set) stride = r.record_every;
    std::vector<Trajectory> trajectories;
    if (r.name == "landscape_fig1") {
        trajectories = fig1_trajectories();
    } else {
        for (std::size_t i = 0; i < r.trajectories.size(); ++i) {
            trajectories.push_back(
                Trajectory{r.trajectories[i], to_string(r.trajectories[i].algorithm) + "_" +
                                                  std::to_string(i)});
        }
    }
    if (stride > 0) {
        for (const Trajectory& traj : trajectories) {
            const RunRecord rec = run_episode(
                RunConfig{problem, traj.spec, r.steps, r.seeds.front(), stride});
            write_trace_csv(r.out_dir / ("trace_" + traj.tag + ".csv"), rec);
            out << "trajectory " << traj.tag << ": terminal alpha=("
                << format_double(rec.final_alpha[0]) << ", " << format_double(rec.final_alpha[1])
                << ")" << (rec.diverged ? " [diverged]" : "") << "\n";
        }
    }

    try {
        const LandscapeMin min = argmin_landscape(grid);
        out << "argmin: alpha1=" << format_double(min.alpha1)
            << " alpha2=" << format_double(min.alpha2) << " loss=" << format_double(min.loss)
            << "\n";
    } catch (const DataError&) {
        err << "error: every landscape cell diverged\n";
        return 2;
    }
    return 0;
}

int run_fig2(const Resolved& r, std::ostream& out, std::ostream& err) {
    const SweepTable table =
        run_summary_phase(r, FlipProblemConfig{}, fig2_grids(), "summary.csv", out);
    report_best(table, out);
    if (all_diverged(table)) {
        err << "error: every run diverged\n";
        return 2;
    }
    return 0;
}

int run_fig3(const Resolved& r, std::ostream& out, std::ostream& err) {
    const RateTrackingConfig problem;
    const SweepTable table = run_summary_phase(r, problem, fig3_grids(), "summary.csv", out);
    if (all_diverged(table)) {
        report_best(table, out);
        err << "error: every run diverged\n";
        return 2;
    }
    std::uint64_t stride = std::max<std::uint64_t>(1, r.steps / 10000);
    if (r.record_every_set) stride = r.record_every;
    for (Algorithm algorithm : {Algorithm::idbd, Algorithm::rmsprop, Algorithm::classic_sgd}) {
        BestConfig best;
        try {
            best = best_config(table, algorithm);
        } catch (const DataError&) {
            out << "best " << to_string(algorithm) << ": every configuration diverged\n";
            continue;
        }
        out << "best " << to_string(algorithm) << ": " << params_to_string(best.params)
            << " mean_loss=" << format_double(best.mean_loss) << "\n";
        if (stride == 0) continue;
        OptimizerSpec base;
        base.algorithm = algorithm;
        const OptimizerSpec spec = spec_from_params(algorithm, base, best.params);
        const RunRecord rec =
            run_episode(RunConfig{ProblemConfig{problem}, spec, r.steps, r.seeds.front(), stride});
        write_trace_csv(r.out_dir / ("trace_" + to_string(algorithm) + "_best.csv"), rec);
        try {
            const TrackingSummary tracking = tracking_metrics(rec, problem.sigma_period, 0.2);
            out << "  tracking: rank_correlation=" << format_double(tracking.rank_correlation)
                << " mean_abs_error=" << format_double(tracking.mean_abs_error) << " ("
                << tracking.segments.size() << " segments)\n";
        } catch (const DataError& e) {
            out << "  tracking metrics unavailable: " << e.what() << "\n";
        }
    }
    return 0;
}

int run_fig4(const Resolved& r, std::ostream& out, std::ostream& err) {
    const std::vector<double> amplitudes = {0.1, 1.0, 10.0};
    struct AlgoShift {
        Algorithm algorithm;
        std::string param;
        std::vector<std::pair<double, double>> best;  // (amplitude, best param value)
    };
    std::vector<AlgoShift> shifts = {{Algorithm::idbd, "theta", {}},
                                     {Algorithm::classic_sgd, "eta", {}}};
    bool any_finite = false;
    for (double amplitude : amplitudes) {
        FlipProblemConfig problem;
        problem.amplitude = amplitude;
        const std::vector<AlgorithmGrid> grids = {
            grid_for(Algorithm::idbd, {{"theta", pow10_grid(-9, 2)}}),
            grid_for(Algorithm::classic_sgd, {{"eta", pow10_grid(-9, 2)}}),
        };
        const SweepTable table = run_summary_phase(
            r, problem, grids, "summary_amp" + format_double(amplitude) + ".csv", out);
        if (!all_diverged(table)) any_finite = true;
        for (AlgoShift& shift : shifts) {
            try {
                const BestConfig best = best_config(table, shift.algorithm);
                double value = 0.0;
                for (const auto& [name, v] : best.params) {
                    if (name == shift.param) value = v;
                }
                shift.best.emplace_back(amplitude, value);
                out << "amplitude " << format_double(amplitude) << " best "
                    << to_string(shift.algorithm) << ": " << params_to_string(best.params)
                    << " mean_loss=" << format_double(best.mean_loss) << "\n";
            } catch (const DataError&) {
                out << "amplitude " << format_double(amplitude) << " best "
                    << to_string(shift.algorithm) << ": every configuration diverged\n";
            }
        }
    }
    for (const AlgoShift& shift : shifts) {
        if (shift.best.size() < 2) continue;
        double lo = shift.best.front().second, hi = lo;
        for (const auto& [amplitude, value] : shift.best) {
            lo = std::min(lo, value);
            hi = std::max(hi, value);
        }
        out << to_string(shift.algorithm) << " best " << shift.param
            << " log10 spread: " << format_double(std::log10(hi) - std::log10(lo)) << "\n";
    }
    if (!any_finite) {
        err << "error: every run diverged\n";
        return 2;
    }
    return 0;
}

int run_custom(const Resolved& r, std::ostream& out, std::ostream& err) {
    const SweepTable table = run_summary_phase(r, *r.problem, r.grids, "summary.csv", out);
    report_best(table, out);
    std::uint64_t stride = std::max<std::uint64_t>(1, r.steps / 1000);
    if (r.record_every_set) stride = r.record_every;
    if (stride > 0) {
        for (std::size_t i = 0; i < r.trajectories.size(); ++i) {
            const OptimizerSpec& spec = r.trajectories[i];
            const RunRecord rec =
                run_episode(RunConfig{*r.problem, spec, r.steps, r.seeds.front(), stride});
            write_trace_csv(r.out_dir / ("trace_" + to_string(spec.algorithm) + "_" +
                                         std::to_string(i) + ".csv"),
                            rec);
        }
    }
    if (all_diverged(table)) {
        err << "error: every run diverged\n";
        return 2;
    }
    return 0;
}

void validate_for_run(const Resolved& r) {
    if (r.name != "custom") return;
    if (!r.problem) throw ConfigError("a custom experiment needs a 'problem' block");
    if (r.grids.empty()) throw ConfigError("a custom experiment needs an 'optimizers' array");
}

void validate_for_landscape(const Resolved& r) {
    if (r.name == "landscape_fig1") return;
    if (r.name != "custom") {
        throw ConfigError("experiment '" + r.name +
                          "' has no landscape phase; use landscape_fig1 or a custom file");
    }
    if (!r.problem) throw ConfigError("a custom landscape needs a 'problem' block");
    const auto* flip = std::get_if<FlipProblemConfig>(&*r.problem);
    if (flip == nullptr || flip->d != 2) {
        throw ConfigError("the landscape phase needs a 2-D weight_flipping problem");
    }
}

}  // namespace

const std::vector<std::string>& builtin_experiments() {
    static const std::vector<std::string> names = {"landscape_fig1", "weight_flipping_fig2",
                                                   "rate_tracking_fig3", "shift_fig4"};
    return names;
}

int cmd_run(const std::string& experiment, const Overrides& overrides, std::ostream& out,
            std::ostream& err) {
    try {
        if (experiment.empty()) {
            throw ConfigError("run needs an experiment name or file; see list-experiments");
        }
        const Resolved r = resolve(experiment, overrides);
        validate_for_run(r);
        prepare_out_dir(r);
        if (r.name == "landscape_fig1") return run_landscape_phase(r, out, err);
        if (r.name == "weight_flipping_fig2") return run_fig2(r, out, err);
        if (r.name == "rate_tracking_fig3") return run_fig3(r, out, err);
        if (r.name == "shift_fig4") return run_fig4(r, out, err);
        return run_custom(r, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_landscape(const std::string& experiment, const Overrides& overrides, std::ostream& out,
                  std::ostream& err) {
    try {
        const Resolved r = resolve(experiment.empty() ? "landscape_fig1" : experiment, overrides);
        validate_for_landscape(r);
        prepare_out_dir(r);
        return run_landscape_phase(r, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_list_experiments(std::ostream& out) {
    out << "landscape_fig1        2-D flip problem: loss over constant step-size pairs, plus "
           "RMSProp and IDBD trajectories\n"
        << "weight_flipping_fig2  20-D flip problem: hyperparameter sweep of every optimizer\n"
        << "rate_tracking_fig3    1-D noisy tracking: sweep plus best-config adaptation traces\n"
        << "shift_fig4            flip problem at amplitudes 0.1/1/10: how far the best "
           "meta-step-size moves\n"
        << "custom                experiment file with problem/optimizers blocks (see README)\n";
    return 0;
}

int cmd_plot(const PlotRequest& request, std::ostream& out, std::ostream& err) {
    try {
        if (request.input.empty()) throw ConfigError("plot needs an input CSV");
        if (request.output.empty()) throw ConfigError("plot needs an output SVG path");
        PlotOptions options;
        options.title = request.title;
        options.clip_percentile = request.clip_percentile;
        options.x_param = request.x_param;
        if (request.kind == "line") {
            if (!request.trajectories.empty()) {
                throw ConfigError("plot kind 'line' takes no trajectory overlays");
            }
            plot_line(request.input, request.output, options);
        } else if (request.kind == "trajectory_heatmap") {
            plot_trajectory_heatmap(request.input, request.trajectories, request.output, options);
        } else if (request.kind == "sweep_curve") {
            if (!request.trajectories.empty()) {
                throw ConfigError("plot kind 'sweep_curve' takes no trajectory overlays");
            }
            plot_sweep_curve(request.input, request.output, options);
        } else {
            throw ConfigError("unknown plot kind '" + request.kind +
                              "'; expected line, trajectory_heatmap, or sweep_curve");
        }
        out << "wrote " << request.output.generic_string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace stepsize
