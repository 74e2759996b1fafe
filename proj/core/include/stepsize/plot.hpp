#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stepsize/csv.hpp"

namespace stepsize {

struct PlotOptions {
    std::string title;
    double clip_percentile = 99.0;  // heatmap color clip over the finite cells
    std::string x_param;            // sweep_curve x axis; defaults to the first column
};

// Trace columns vs step: every alpha_i series, alpha_star and sigma when
// present, the loss otherwise. Throws DataError (naming the expected
// columns) before any output is written.
void plot_line(const std::filesystem::path& trace_csv, const std::filesystem::path& out_svg,
               const PlotOptions& options = {});

// Landscape heatmap (log-scaled color, clipped at clip_percentile, grey for
// divergent cells), argmin diamond, and one polyline per trajectory CSV.
void plot_trajectory_heatmap(const std::filesystem::path& landscape_csv,
                             const std::vector<std::filesystem::path>& trajectory_csvs,
                             const std::filesystem::path& out_svg,
                             const PlotOptions& options = {});

// Seed-averaged mean loss vs one hyperparameter on log-log axes, one series
// per algorithm, minimized over the other hyperparameters.
void plot_sweep_curve(const std::filesystem::path& summary_csv,
                      const std::filesystem::path& out_svg, const PlotOptions& options = {});

}  // namespace stepsize
