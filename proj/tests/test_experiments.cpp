#include <doctest.h>
#include <stdlib.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stepsize/csv.hpp"
#include "stepsize/experiments.hpp"

using namespace stepsize;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("stepsize-exp-test-" + std::to_string(::getpid()) + "-" +
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

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// A fast 4-D custom experiment with one swept and one fixed optimizer.
std::string tiny_custom_json(const std::string& out_dir) {
    return R"({
  "experiment": "custom",
  "steps": 2000,
  "seeds": [1, 2],
  "out": ")" + out_dir + R"(",
  "problem": {"kind": "weight_flipping", "d": 4, "n_constant": 2},
  "optimizers": [
    {"algorithm": "classic_sgd", "grid": {"eta": [0.05, 0.1]}},
    {"algorithm": "idbd", "theta": 0.005, "alpha0": 0.05}
  ],
  "trajectories": [{"algorithm": "idbd", "theta": 0.005, "alpha0": 0.05}]
})";
}

struct CmdResult {
    int code = 0;
    std::string out;
    std::string err;
};

CmdResult run_cmd(const std::string& experiment, const Overrides& overrides = {}) {
    std::ostringstream out, err;
    const int code = cmd_run(experiment, overrides, out, err);
    return {code, out.str(), err.str()};
}

CmdResult landscape_cmd(const std::string& experiment, const Overrides& overrides = {}) {
    std::ostringstream out, err;
    const int code = cmd_landscape(experiment, overrides, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("builtin experiment listing") {
    CHECK(builtin_experiments() ==
          std::vector<std::string>{"landscape_fig1", "weight_flipping_fig2",
                                   "rate_tracking_fig3", "shift_fig4"});
    std::ostringstream out;
    CHECK(cmd_list_experiments(out) == 0);
    std::istringstream lines(out.str());
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        ++n;
        CHECK_FALSE(line.empty());
    }
    CHECK(n == 5);  // four built-ins plus the custom file format
    for (const std::string& name : builtin_experiments()) {
        CHECK(out.str().find(name) != std::string::npos);
    }
}

TEST_CASE("cmd_run rejects missing experiments without touching the filesystem") {
    TempDir tmp;
    const fs::path out_dir = tmp.path / "should-not-exist";
    Overrides overrides;
    overrides.out_dir = out_dir.string();

    CmdResult r = run_cmd("", overrides);
    CHECK(r.code == 1);
    CHECK(r.err.find("error:") == 0);

    r = run_cmd((tmp.path / "nope.json").string(), overrides);
    CHECK(r.code == 1);
    CHECK(r.err.find("cannot open experiment file") != std::string::npos);
    CHECK_FALSE(fs::exists(out_dir));
}

TEST_CASE("cmd_run executes a custom experiment end to end") {
    TempDir tmp;
    const fs::path out_dir = tmp.path / "out";
    const fs::path file = tmp.path / "tiny.json";
    spit(file, tiny_custom_json(out_dir.generic_string()));

    const CmdResult r = run_cmd(file.string());
    CHECK(r.code == 0);
    CHECK(r.err.empty());
    CHECK(r.out.find("wrote " + (out_dir / "summary.csv").generic_string()) !=
          std::string::npos);
    CHECK(r.out.find("best classic_sgd:") != std::string::npos);
    CHECK(r.out.find("best idbd:") != std::string::npos);

    REQUIRE(fs::exists(out_dir / "summary.csv"));
    REQUIRE(fs::exists(out_dir / "resolved_config.json"));
    REQUIRE(fs::exists(out_dir / "trace_idbd_0.csv"));

    // (2 swept + 1 fixed) points x 2 seeds.
    const SweepTable table = read_summary_csv(out_dir / "summary.csv");
    CHECK(table.rows.size() == 6);

    // Trajectory stride defaults to steps / 1000.
    const RunRecord trace = read_trace_csv(out_dir / "trace_idbd_0.csv");
    CHECK(trace.sample_steps.size() == 1000);
    CHECK(trace.sample_steps[1] == 2);
}

TEST_CASE("the resolved config echo reproduces the run bit for bit") {
    TempDir tmp;
    const fs::path first = tmp.path / "first";
    const fs::path second = tmp.path / "second";
    const fs::path file = tmp.path / "tiny.json";
    spit(file, tiny_custom_json(first.generic_string()));

    REQUIRE(run_cmd(file.string()).code == 0);

    Overrides redirect;
    redirect.out_dir = second.string();
    REQUIRE(run_cmd((first / "resolved_config.json").string(), redirect).code == 0);

    CHECK(slurp(first / "summary.csv") == slurp(second / "summary.csv"));
    CHECK(slurp(first / "trace_idbd_0.csv") == slurp(second / "trace_idbd_0.csv"));
}

TEST_CASE("cmd_run names unknown keys") {
    TempDir tmp;
    const fs::path file = tmp.path / "bad.json";

    spit(file, R"({"experiment": "custom", "stepz": 5})");
    CmdResult r = run_cmd(file.string());
    CHECK(r.code == 1);
    CHECK(r.err.find("unknown key 'stepz' in experiment file") != std::string::npos);

    spit(file, R"({"experiment": "custom",
                   "problem": {"kind": "weight_flipping", "dim": 4},
                   "optimizers": [{"algorithm": "classic_sgd", "eta": 0.1}]})");
    r = run_cmd(file.string());
    CHECK(r.code == 1);
    CHECK(r.err.find("unknown key 'dim' in problem") != std::string::npos);

    spit(file, R"({"experiment": "custom",
                   "problem": {"kind": "weight_flipping"},
                   "optimizers": [{"algorithm": "classic_sgd", "momentum": 0.9}]})");
    r = run_cmd(file.string());
    CHECK(r.code == 1);
    CHECK(r.err.find("unknown key 'momentum' in optimizers[0]") != std::string::npos);

    spit(file, R"({"experiment": "mystery"})");
    r = run_cmd(file.string());
    CHECK(r.code == 1);
    CHECK(r.err.find("unknown experiment 'mystery'") != std::string::npos);
}

TEST_CASE("cmd_run validates custom blocks before creating output") {
    TempDir tmp;
    const fs::path out_dir = tmp.path / "untouched";
    const fs::path file = tmp.path / "incomplete.json";
    Overrides overrides;
    overrides.out_dir = out_dir.string();

    spit(file, R"({"experiment": "custom",
                   "optimizers": [{"algorithm": "classic_sgd", "eta": 0.1}]})");
    CmdResult r = run_cmd(file.string(), overrides);
    CHECK(r.code == 1);
    CHECK(r.err.find("'problem' block") != std::string::npos);
    CHECK_FALSE(fs::exists(out_dir));

    spit(file, R"({"experiment": "custom",
                   "problem": {"kind": "weight_flipping"}})");
    r = run_cmd(file.string(), overrides);
    CHECK(r.code == 1);
    CHECK(r.err.find("'optimizers' array") != std::string::npos);
    CHECK_FALSE(fs::exists(out_dir));

    Overrides bad_scale = overrides;
    bad_scale.scale = "huge";
    r = run_cmd("weight_flipping_fig2", bad_scale);
    CHECK(r.code == 1);
    CHECK(r.err.find("huge") != std::string::npos);
    CHECK_FALSE(fs::exists(out_dir));
}

TEST_CASE("cmd_run reports exit 2 when every run diverges") {
    TempDir tmp;
    const fs::path out_dir = tmp.path / "out";
    const fs::path file = tmp.path / "divergent.json";
    spit(file, R"({
  "experiment": "custom",
  "steps": 500,
  "seeds": [1],
  "out": ")" + out_dir.generic_string() + R"(",
  "problem": {"kind": "weight_flipping", "d": 4, "n_constant": 2},
  "optimizers": [{"algorithm": "classic_sgd", "grid": {"eta": [50.0, 80.0]}}]
})");
    const CmdResult r = run_cmd(file.string());
    CHECK(r.code == 2);
    CHECK(r.err.find("every run diverged") != std::string::npos);
    // The summary still lands so the divergence is inspectable.
    const SweepTable table = read_summary_csv(out_dir / "summary.csv");
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].diverged);
    CHECK(table.rows[1].diverged);
}

TEST_CASE("record_every switches the summary phase to per-run traces") {
    TempDir tmp;
    const fs::path out_dir = tmp.path / "out";
    const fs::path file = tmp.path / "tiny.json";
    spit(file, tiny_custom_json(out_dir.generic_string()));

    Overrides overrides;
    overrides.record_every = 500;
    REQUIRE(run_cmd(file.string(), overrides).code == 0);

    // Point 0 = sgd eta 0.05, point 1 = sgd eta 0.1, point 2 = idbd.
    for (const char* name : {"trace_0_classic_sgd_seed1.csv", "trace_0_classic_sgd_seed2.csv",
                             "trace_1_classic_sgd_seed1.csv", "trace_2_idbd_seed1.csv"}) {
        CAPTURE(name);
        REQUIRE(fs::exists(out_dir / name));
        const RunRecord rec = read_trace_csv(out_dir / name);
        CHECK(rec.sample_steps == std::vector<std::uint64_t>{0, 500, 1000, 1500});
    }
    // The explicit record_every also drives the trajectory stride.
    const RunRecord traj = read_trace_csv(out_dir / "trace_idbd_0.csv");
    CHECK(traj.sample_steps.size() == 4);
}

TEST_CASE("STEPSIZE_OUT_DIR provides the default output parent") {
    TempDir tmp;
    const fs::path parent = tmp.path / "env-out";
    const fs::path file = tmp.path / "envcase.json";
    // No "out" key: the environment decides.
    spit(file, R"({
  "experiment": "custom",
  "steps": 200,
  "seeds": [1],
  "problem": {"kind": "weight_flipping", "d": 4, "n_constant": 2},
  "optimizers": [{"algorithm": "classic_sgd", "eta": 0.1}]
})");
    ::setenv(kOutDirEnvVar, parent.c_str(), 1);
    const CmdResult r = run_cmd(file.string());
    ::unsetenv(kOutDirEnvVar);
    CHECK(r.code == 0);
    CHECK(fs::exists(parent / "envcase" / "summary.csv"));
}

TEST_CASE("weight_flipping_fig2 covers the full grid at ci scale") {
    TempDir tmp;
    Overrides overrides;
    overrides.out_dir = (tmp.path / "fig2").string();
    overrides.scale = "ci";
    overrides.steps = 50;
    const CmdResult r = run_cmd("weight_flipping_fig2", overrides);
    CHECK(r.code == 0);
    for (const char* algo :
         {"classic_sgd", "oracle_sgd", "rmsprop", "adam", "idbd"}) {
        CHECK(r.out.find(std::string("best ") + algo) != std::string::npos);
    }
    const SweepTable table = read_summary_csv(tmp.path / "fig2" / "summary.csv");
    // 19 sgd + 19 oracle + 13*6 rmsprop + 13*2*6 adam + 19 idbd points, 2 seeds.
    CHECK(table.rows.size() == 582);
}

TEST_CASE("rate_tracking_fig3 writes best-config traces") {
    TempDir tmp;
    Overrides overrides;
    overrides.out_dir = (tmp.path / "fig3").string();
    overrides.scale = "ci";
    overrides.steps = 3000;
    const CmdResult r = run_cmd("rate_tracking_fig3", overrides);
    CHECK(r.code == 0);
    CHECK(r.out.find("best idbd:") != std::string::npos);
    CHECK(fs::exists(tmp.path / "fig3" / "summary.csv"));
    CHECK(fs::exists(tmp.path / "fig3" / "trace_idbd_best.csv"));
    CHECK(fs::exists(tmp.path / "fig3" / "trace_classic_sgd_best.csv"));
}

TEST_CASE("shift_fig4 reports the winner per amplitude and the spread") {
    TempDir tmp;
    Overrides overrides;
    overrides.out_dir = (tmp.path / "fig4").string();
    overrides.scale = "ci";
    overrides.steps = 500;
    const CmdResult r = run_cmd("shift_fig4", overrides);
    CHECK(r.code == 0);
    CHECK(fs::exists(tmp.path / "fig4" / "summary_amp0.1.csv"));
    CHECK(fs::exists(tmp.path / "fig4" / "summary_amp1.csv"));
    CHECK(fs::exists(tmp.path / "fig4" / "summary_amp10.csv"));
    CHECK(r.out.find("idbd best theta log10 spread:") != std::string::npos);
    CHECK(r.out.find("classic_sgd best eta log10 spread:") != std::string::npos);
}

TEST_CASE("cmd_landscape runs the default grid and custom grids") {
    TempDir tmp;
    Overrides overrides;
    overrides.out_dir = (tmp.path / "fig1").string();
    overrides.scale = "ci";
    overrides.steps = 2000;
    const CmdResult fig1 = landscape_cmd("", overrides);
    CHECK(fig1.code == 0);
    CHECK(fig1.out.find("argmin:") != std::string::npos);
    CHECK(fig1.out.find("trajectory rmsprop_eta") != std::string::npos);
    CHECK(fig1.out.find("trajectory idbd_alpha0") != std::string::npos);
    const LandscapeGrid grid = read_landscape_csv(tmp.path / "fig1" / "landscape.csv");
    CHECK(grid.alpha1_axis.size() == 31);  // ci axis resolution
    CHECK(grid.alpha2_axis.size() == 31);

    const fs::path file = tmp.path / "custom_land.json";
    spit(file, R"({
  "experiment": "custom",
  "steps": 500,
  "seeds": [1],
  "out": ")" + (tmp.path / "land").generic_string() + R"(",
  "problem": {"kind": "weight_flipping", "d": 2, "n_constant": 1},
  "axes": {"alpha1": [0.0, 0.2, 0.4], "alpha2": [0.0, 0.3]}
})");
    const CmdResult custom = landscape_cmd(file.string());
    CHECK(custom.code == 0);
    const LandscapeGrid small = read_landscape_csv(tmp.path / "land" / "landscape.csv");
    CHECK(small.alpha1_axis == std::vector<double>{0.0, 0.2, 0.4});
    CHECK(small.alpha2_axis == std::vector<double>{0.0, 0.3});

    CHECK(landscape_cmd("weight_flipping_fig2", overrides).code == 1);
    const fs::path rate_file = tmp.path / "rate_land.json";
    spit(rate_file, R"({"experiment": "custom", "problem": {"kind": "rate_tracking"}})");
    const CmdResult rate = landscape_cmd(rate_file.string());
    CHECK(rate.code == 1);
    CHECK(rate.err.find("2-D weight_flipping") != std::string::npos);
}

TEST_CASE("cmd_plot dispatches on kind and validates overlays") {
    TempDir tmp;
    const fs::path out_dir = tmp.path / "out";
    const fs::path file = tmp.path / "tiny.json";
    spit(file, tiny_custom_json(out_dir.generic_string()));
    REQUIRE(run_cmd(file.string()).code == 0);

    std::ostringstream out, err;
    PlotRequest line;
    line.kind = "line";
    line.input = out_dir / "trace_idbd_0.csv";
    line.output = tmp.path / "trace.svg";
    CHECK(cmd_plot(line, out, err) == 0);
    CHECK(fs::exists(line.output));
    CHECK(out.str().find("wrote " + line.output.generic_string()) != std::string::npos);

    PlotRequest curve;
    curve.kind = "sweep_curve";
    curve.input = out_dir / "summary.csv";
    curve.output = tmp.path / "curve.svg";
    curve.x_param = "eta";
    CHECK(cmd_plot(curve, out, err) == 0);
    CHECK(fs::exists(curve.output));

    PlotRequest bad = line;
    bad.kind = "scatter";
    bad.output = tmp.path / "bad.svg";
    std::ostringstream err2;
    CHECK(cmd_plot(bad, out, err2) == 1);
    CHECK(err2.str().find("unknown plot kind 'scatter'") != std::string::npos);
    CHECK_FALSE(fs::exists(bad.output));

    PlotRequest overlay = line;
    overlay.trajectories = {out_dir / "trace_idbd_0.csv"};
    overlay.output = tmp.path / "overlay.svg";
    std::ostringstream err3;
    CHECK(cmd_plot(overlay, out, err3) == 1);
    CHECK(err3.str().find("takes no trajectory overlays") != std::string::npos);
    CHECK_FALSE(fs::exists(overlay.output));
}
