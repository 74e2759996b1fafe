#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stepsize/errors.hpp"
#include "stepsize/optimizers.hpp"
#include "stepsize/rng.hpp"

namespace stepsize {

// ---------------------------------------------------------------------------
// Weight-flipping: d-dimensional linear regression with N(0,1) features,
// n_constant always-zero target components, and the rest at +/-amplitude with
// one of two flip rules applied every flip_period samples.

enum class FlipMode {
    choose_one_uniformly,      // one dynamic component flips sign per event
    each_flips_with_prob_half  // every dynamic component flips independently
};

struct FlipProblemConfig {
    std::size_t d = 20;
    std::size_t n_constant = 15;
    double amplitude = 1.0;
    std::uint64_t flip_period = 20;
    FlipMode flip_mode = FlipMode::choose_one_uniformly;
};

void validate(const FlipProblemConfig& cfg);

struct FlipSubstreams {
    std::uint64_t features = 0;
    std::uint64_t flips = 0;  // initial signs and flip choices
};

FlipSubstreams flip_substreams(std::uint64_t seed);

class FlipProblem {
public:
    FlipProblem(const FlipProblemConfig& cfg, std::uint64_t seed)
        : FlipProblem(cfg, flip_substreams(seed)) {}
    FlipProblem(const FlipProblemConfig& cfg, const FlipSubstreams& streams);

    std::size_t dim() const { return cfg_.d; }

    // Emits the next sample: flips the target (when due) before drawing, fills
    // x with fresh N(0,1) features, and returns y* = <w*, x>.
    double next(std::vector<double>& x);

    std::span<const double> target_weights() const { return w_star_; }
    std::uint64_t step() const { return t_; }

private:
    void apply_flip_event();

    FlipProblemConfig cfg_;
    std::vector<double> w_star_;
    Rng features_;
    Rng flips_;
    std::uint64_t t_ = 0;
};

// Oracle SGD: step-size frozen at the optimal 0 on the constant components,
// eta_dynamic on the flipping ones, weights starting at zero.
FixedVectorState oracle_sgd_state(const FlipProblemConfig& cfg, double eta_dynamic);

// ---------------------------------------------------------------------------
// 1-D noisy rate-tracking: the unit-feature target is a random walk whose
// drift scale sigma is redrawn from Uniform(sigma_min, sigma_max) every
// sigma_period steps, observed through unit-variance noise.

struct RateTrackingConfig {
    std::uint64_t sigma_period = 50000;
    double sigma_min = 0.0;
    double sigma_max = 3.0;
    double observation_noise_std = 1.0;
};

void validate(const RateTrackingConfig& cfg);

struct RateSubstreams {
    std::uint64_t observation_noise = 0;
    std::uint64_t drift_noise = 0;
    std::uint64_t sigma_draws = 0;
};

RateSubstreams rate_substreams(std::uint64_t seed);

class RateTrackingProblem {
public:
    RateTrackingProblem(const RateTrackingConfig& cfg, std::uint64_t seed)
        : RateTrackingProblem(cfg, rate_substreams(seed)) {}
    RateTrackingProblem(const RateTrackingConfig& cfg, const RateSubstreams& streams);

    std::size_t dim() const { return 1; }

    // Emits y_t = z_t + N(0,1) with x = (1), then advances the walk by
    // N(0, sigma_t^2). Sigma is redrawn at t = 0 and every sigma_period steps.
    double next(std::vector<double>& x);

    double sigma() const { return sigma_; }  // drift scale behind the last sample
    double level() const { return z_; }      // walk level for the next sample
    std::uint64_t step() const { return t_; }

private:
    RateTrackingConfig cfg_;
    Rng observation_;
    Rng drift_;
    Rng sigma_rng_;
    double z_ = 0.0;
    double sigma_ = 0.0;
    std::uint64_t t_ = 0;
};

// Closed-form best constant gain for the rate-tracking problem,
// (-sigma^2 + sqrt(sigma^4 + 4 sigma^2)) / 2, evaluated in a
// cancellation-free form. Throws std::domain_error for negative sigma.
double optimal_alpha(double sigma);

}  // namespace stepsize
