#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stepsize/experiments.hpp"

namespace {

void add_overrides(CLI::App* cmd, stepsize::Overrides& overrides) {
    cmd->add_option("--scale", overrides.scale, "Preset scale")
        ->check(CLI::IsMember({"paper", "desk", "ci"}));
    cmd->add_option("--seed", overrides.seed,
                    "Base seed; the run uses seeds seed, seed+1, ...");
    cmd->add_option("--steps", overrides.steps, "Steps per run");
    cmd->add_option("--record-every", overrides.record_every,
                    "Trace sampling stride (0 disables traces)");
    cmd->add_option("--workers", overrides.workers, "Worker threads");
    cmd->add_option("--out", overrides.out_dir, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online step-size adaptation experiments"};
    app.require_subcommand(1);

    std::string run_experiment;
    stepsize::Overrides run_overrides;
    CLI::App* run = app.add_subcommand("run", "Run an experiment end to end");
    run->add_option("experiment", run_experiment, "Built-in name or experiment file (JSON)")
        ->required();
    add_overrides(run, run_overrides);

    std::string landscape_experiment;
    stepsize::Overrides landscape_overrides;
    CLI::App* landscape =
        app.add_subcommand("landscape", "Loss over constant step-size pairs, plus trajectories");
    landscape->add_option("experiment", landscape_experiment,
                          "Built-in name or experiment file; defaults to landscape_fig1");
    add_overrides(landscape, landscape_overrides);

    std::string plot_kind, plot_in, plot_out, plot_x, plot_title;
    std::vector<std::string> plot_traj;
    double plot_clip = 99.0;
    CLI::App* plot = app.add_subcommand("plot", "Render a result CSV as a standalone SVG");
    plot->add_option("--kind", plot_kind, "line, trajectory_heatmap, or sweep_curve")
        ->required()
        ->check(CLI::IsMember({"line", "trajectory_heatmap", "sweep_curve"}));
    plot->add_option("--in", plot_in, "Input CSV")->required();
    plot->add_option("--traj", plot_traj, "Trajectory CSVs to overlay on a heatmap");
    plot->add_option("--out", plot_out, "Output SVG")->required();
    plot->add_option("--x", plot_x, "sweep_curve x-axis hyperparameter (e.g. eta)");
    plot->add_option("--title", plot_title, "Plot title");
    plot->add_option("--clip", plot_clip, "Heatmap color clip percentile");

    CLI::App* list = app.add_subcommand("list-experiments", "List built-in experiments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (run->parsed()) {
        return stepsize::cmd_run(run_experiment, run_overrides, std::cout, std::cerr);
    }
    if (landscape->parsed()) {
        return stepsize::cmd_landscape(landscape_experiment, landscape_overrides, std::cout,
                                       std::cerr);
    }
    if (plot->parsed()) {
        stepsize::PlotRequest request;
        request.kind = plot_kind;
        request.input = plot_in;
        for (const std::string& t : plot_traj) request.trajectories.emplace_back(t);
        request.output = plot_out;
        request.x_param = plot_x;
        request.title = plot_title;
        request.clip_percentile = plot_clip;
        return stepsize::cmd_plot(request, std::cout, std::cerr);
    }
    if (list->parsed()) return stepsize::cmd_list_experiments(std::cout);
    return 0;
}
