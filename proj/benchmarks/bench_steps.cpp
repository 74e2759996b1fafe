#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "stepsize/harness.hpp"
#include "stepsize/optimizers.hpp"
#include "stepsize/problems.hpp"

namespace {

using namespace stepsize;

constexpr std::size_t kDim = 20;

// One problem sample + one optimizer update, the hot loop of every episode.
template <typename State, typename Step>
void run_kernel(benchmark::State& bench, State state, Step step) {
    const FlipProblemConfig cfg;
    FlipProblem problem(cfg, 7);
    std::vector<double> x(kDim);
    for (auto _ : bench) {
        const double y_star = problem.next(x);
        const GradSample sample = make_sample(state.w, x, y_star);
        step(state, sample);
        benchmark::DoNotOptimize(state.w.data());
    }
    bench.SetItemsProcessed(static_cast<std::int64_t>(bench.iterations()));
}

void BM_SgdStep(benchmark::State& bench) {
    run_kernel(bench, make_sgd(kDim, 1.0 / 64),
               [](SgdState& s, const GradSample& g) { sgd_step(s, g); });
}

void BM_RmsPropStep(benchmark::State& bench) {
    run_kernel(bench, make_rmsprop(kDim, 1.0 / 64, 0.01),
               [](RmsPropState& s, const GradSample& g) { rmsprop_step(s, g); });
}

void BM_AdamStep(benchmark::State& bench) {
    run_kernel(bench, make_adam(kDim, 1.0 / 64, 0.9, 0.01),
               [](AdamState& s, const GradSample& g) { adam_step(s, g); });
}

void BM_IdbdStep(benchmark::State& bench) {
    run_kernel(bench, make_idbd(kDim, 0.01, 0.05),
               [](IdbdState& s, const GradSample& g) { idbd_step(s, g); });
}

void BM_FixedVectorStep(benchmark::State& bench) {
    run_kernel(bench, make_fixed_vector(std::vector<double>(kDim, 1.0 / 64)),
               [](FixedVectorState& s, const GradSample& g) { fixed_vector_step(s, g); });
}

// Full-episode throughput through the type-erased harness path.
void BM_Episode(benchmark::State& bench) {
    RunConfig cfg;
    cfg.problem = FlipProblemConfig{};
    cfg.optimizer.algorithm = Algorithm::idbd;
    cfg.optimizer.theta = 0.01;
    cfg.steps = 10'000;
    cfg.seed = 7;
    for (auto _ : bench) {
        const RunRecord rec = run_episode(cfg);
        benchmark::DoNotOptimize(rec.mean_loss);
    }
    bench.SetItemsProcessed(static_cast<std::int64_t>(bench.iterations()) *
                            static_cast<std::int64_t>(cfg.steps));
}

BENCHMARK(BM_SgdStep);
BENCHMARK(BM_RmsPropStep);
BENCHMARK(BM_AdamStep);
BENCHMARK(BM_IdbdStep);
BENCHMARK(BM_FixedVectorStep);
BENCHMARK(BM_Episode);

}  // namespace

BENCHMARK_MAIN();
