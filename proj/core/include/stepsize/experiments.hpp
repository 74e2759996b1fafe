#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stepsize {

// Default parent for output directories when neither the experiment file nor
// --out names one.
inline constexpr const char* kOutDirEnvVar = "STEPSIZE_OUT_DIR";

// Command-line overrides, applied on top of the experiment file.
struct Overrides {
    std::optional<std::string> scale;        // paper | desk | ci
    std::optional<std::uint64_t> seed;       // base seed; regenerates the seed list
    std::optional<std::uint64_t> steps;
    std::optional<std::uint64_t> record_every;
    std::optional<std::size_t> workers;
    std::optional<std::string> out_dir;
};

// Built-in experiment names, in listing order.
const std::vector<std::string>& builtin_experiments();

// `experiment` is a built-in name or a path to an experiment file (JSON).
// Exit codes: 0 success, 1 configuration or parse error (stderr names the
// offending key), 2 every run diverged.
int cmd_run(const std::string& experiment, const Overrides& overrides, std::ostream& out,
            std::ostream& err);

// Landscape matrix (plus optional trajectory traces). Defaults to
// landscape_fig1 when `experiment` is empty.
int cmd_landscape(const std::string& experiment, const Overrides& overrides,
                  std::ostream& out, std::ostream& err);

int cmd_list_experiments(std::ostream& out);

struct PlotRequest {
    std::string kind;  // line | trajectory_heatmap | sweep_curve
    std::filesystem::path input;
    std::vector<std::filesystem::path> trajectories;  // heatmap overlays
    std::filesystem::path output;
    std::string x_param;  // sweep_curve x axis
    std::string title;
    double clip_percentile = 99.0;
};

int cmd_plot(const PlotRequest& request, std::ostream& out, std::ostream& err);

}  // namespace stepsize
