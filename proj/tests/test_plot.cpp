#include <doctest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stepsize/csv.hpp"
#include "stepsize/errors.hpp"
#include "stepsize/harness.hpp"
#include "stepsize/landscape.hpp"
#include "stepsize/plot.hpp"

using namespace stepsize;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("stepsize-plot-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

// A well-formed, self-contained SVG document.
void check_svg(const fs::path& p) {
    REQUIRE(fs::exists(p));
    const std::string svg = slurp(p);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
    CHECK(svg.find("</svg>") == svg.size() - 7);  // trailing newline after the close
    // No references beyond the namespace declaration: one URL total.
    CHECK(svg.find("http", svg.find("http") + 1) == std::string::npos);
    CHECK(svg.find("href") == std::string::npos);
}

fs::path write_flip_trace(const fs::path& dir) {
    RunConfig cfg;
    FlipProblemConfig flip;
    flip.d = 2;
    flip.n_constant = 1;
    cfg.problem = ProblemConfig{flip};
    cfg.optimizer.algorithm = Algorithm::idbd;
    cfg.optimizer.theta = 0.005;
    cfg.optimizer.alpha0 = 0.05;
    cfg.steps = 2000;
    cfg.seed = 3;
    cfg.record_every = 50;
    const fs::path path = dir / "trace_flip.csv";
    write_trace_csv(path, run_episode(cfg));
    return path;
}

fs::path write_rate_trace(const fs::path& dir) {
    RunConfig cfg;
    RateTrackingConfig rate;
    rate.sigma_period = 500;
    cfg.problem = ProblemConfig{rate};
    cfg.optimizer.algorithm = Algorithm::idbd;
    cfg.optimizer.theta = 0.01;
    cfg.optimizer.alpha0 = 0.1;
    cfg.steps = 2000;
    cfg.seed = 5;
    cfg.record_every = 50;
    const fs::path path = dir / "trace_rate.csv";
    write_trace_csv(path, run_episode(cfg));
    return path;
}

}  // namespace

TEST_CASE("plot_line renders flip and rate traces") {
    TempDir tmp;
    const fs::path flip_svg = tmp.path / "flip.svg";
    plot_line(write_flip_trace(tmp.path), flip_svg, PlotOptions{.title = "alpha <overlay>"});
    check_svg(flip_svg);
    CHECK(slurp(flip_svg).find("alpha &lt;overlay&gt;") != std::string::npos);

    const fs::path rate_svg = tmp.path / "rate.svg";
    plot_line(write_rate_trace(tmp.path), rate_svg);
    check_svg(rate_svg);
    // The rate trace legend carries the oracle series.
    CHECK(slurp(rate_svg).find("alpha_star") != std::string::npos);
}

TEST_CASE("plot_line refuses a missing or malformed trace without output") {
    TempDir tmp;
    const fs::path out = tmp.path / "out.svg";
    CHECK_THROWS_AS(plot_line(tmp.path / "missing.csv", out), DataError);
    CHECK_FALSE(fs::exists(out));

    const fs::path bad = tmp.path / "bad.csv";
    std::ofstream(bad) << "not,a,trace\n1,2,3\n";
    CHECK_THROWS_AS(plot_line(bad, out), DataError);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("plot_trajectory_heatmap renders the landscape with overlays") {
    TempDir tmp;
    FlipProblemConfig flip;
    flip.d = 2;
    flip.n_constant = 1;
    const LandscapeGrid grid =
        grid_landscape(flip, linspace(0.0, 0.6, 7), linspace(0.0, 0.6, 7), 2000, {1});
    const fs::path land_csv = tmp.path / "landscape.csv";
    write_landscape_csv(land_csv, grid);
    const fs::path traj_csv = write_flip_trace(tmp.path);

    const fs::path with_traj = tmp.path / "heatmap_traj.svg";
    plot_trajectory_heatmap(land_csv, {traj_csv}, with_traj);
    check_svg(with_traj);
    CHECK(slurp(with_traj).find("<polyline") != std::string::npos);

    const fs::path bare = tmp.path / "heatmap.svg";
    plot_trajectory_heatmap(land_csv, {}, bare);
    check_svg(bare);
}

TEST_CASE("plot_sweep_curve picks or validates the x parameter") {
    TempDir tmp;
    AlgorithmGrid sgd;
    sgd.base.algorithm = Algorithm::classic_sgd;
    sgd.axes = {{"eta", {0.01, 0.04, 0.16}}};
    AlgorithmGrid idbd;
    idbd.base.algorithm = Algorithm::idbd;
    idbd.base.alpha0 = 0.05;
    idbd.axes = {{"theta", {0.001, 0.01}}};
    FlipProblemConfig flip;
    flip.d = 4;
    flip.n_constant = 2;
    const SweepTable table = sweep(ProblemConfig{flip}, {sgd, idbd}, {1, 2}, 500);
    const fs::path summary = tmp.path / "summary.csv";
    write_summary_csv(summary, table);

    const fs::path by_eta = tmp.path / "by_eta.svg";
    plot_sweep_curve(summary, by_eta, PlotOptions{.x_param = "eta"});
    check_svg(by_eta);

    const fs::path by_default = tmp.path / "by_default.svg";
    plot_sweep_curve(summary, by_default);  // defaults to the first column, eta
    check_svg(by_default);

    const fs::path out = tmp.path / "bad.svg";
    CHECK_THROWS_WITH_AS(plot_sweep_curve(summary, out, PlotOptions{.x_param = "gamma_g"}),
                         doctest::Contains("gamma_g"), DataError);
    CHECK_FALSE(fs::exists(out));
}
