#include "stepsize/problems.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stepsize {

void validate(const FlipProblemConfig& cfg) {
    if (cfg.d == 0) throw ConfigError("weight_flipping: d must be positive");
    if (cfg.n_constant > cfg.d) {
        throw ConfigError("weight_flipping: n_constant " + std::to_string(cfg.n_constant) +
                          " exceeds d " + std::to_string(cfg.d));
    }
    if (!(cfg.amplitude > 0.0) || !std::isfinite(cfg.amplitude)) {
        throw ConfigError("weight_flipping: amplitude must be positive");
    }
    if (cfg.flip_period == 0) throw ConfigError("weight_flipping: flip_period must be >= 1");
}

FlipSubstreams flip_substreams(std::uint64_t seed) {
    return FlipSubstreams{derive_seed(seed, "features"), derive_seed(seed, "flips")};
}

FlipProblem::FlipProblem(const FlipProblemConfig& cfg, const FlipSubstreams& streams)
    : cfg_(cfg), features_(streams.features), flips_(streams.flips) {
    validate(cfg_);
    w_star_.assign(cfg_.d, 0.0);
    for (std::size_t i = cfg_.n_constant; i < cfg_.d; ++i) {
        w_star_[i] = flips_.coin() ? cfg_.amplitude : -cfg_.amplitude;
    }
}

void FlipProblem::apply_flip_event() {
    const std::size_t n_dynamic = cfg_.d - cfg_.n_constant;
    if (n_dynamic == 0) return;
    if (cfg_.flip_mode == FlipMode::choose_one_uniformly) {
        const std::size_t i = cfg_.n_constant + flips_.uniform_index(n_dynamic);
        w_star_[i] = -w_star_[i];
    } else {
        for (std::size_t i = cfg_.n_constant; i < cfg_.d; ++i) {
            if (flips_.coin()) w_star_[i] = -w_star_[i];
        }
    }
}

double FlipProblem::next(std::vector<double>& x) {
    // Flip events land before the boundary sample, so the changed target is
    // visible at step t = k * flip_period.
    if (t_ > 0 && t_ % cfg_.flip_period == 0) apply_flip_event();
    x.resize(cfg_.d);
    double y_star = 0.0;
    for (std::size_t i = 0; i < cfg_.d; ++i) {
        x[i] = features_.normal();
        y_star += w_star_[i] * x[i];
    }
    ++t_;
    return y_star;
}

FixedVectorState oracle_sgd_state(const FlipProblemConfig& cfg, double eta_dynamic) {
    validate(cfg);
    if (!std::isfinite(eta_dynamic) || eta_dynamic < 0.0) {
        throw ConfigError("oracle_sgd: eta must be nonnegative");
    }
    std::vector<double> alpha(cfg.d, 0.0);
    for (std::size_t i = cfg.n_constant; i < cfg.d; ++i) alpha[i] = eta_dynamic;
    return make_fixed_vector(std::move(alpha));
}

void validate(const RateTrackingConfig& cfg) {
    if (cfg.sigma_period == 0) throw ConfigError("rate_tracking: sigma_period must be >= 1");
    if (!(cfg.sigma_min >= 0.0) || !(cfg.sigma_max >= cfg.sigma_min)) {
        throw ConfigError("rate_tracking: sigma range must satisfy 0 <= min <= max");
    }
    if (!(cfg.observation_noise_std >= 0.0)) {
        throw ConfigError("rate_tracking: observation noise must be nonnegative");
    }
}

RateSubstreams rate_substreams(std::uint64_t seed) {
    return RateSubstreams{derive_seed(seed, "observation_noise"),
                          derive_seed(seed, "drift_noise"), derive_seed(seed, "sigma_draws")};
}

RateTrackingProblem::RateTrackingProblem(const RateTrackingConfig& cfg,
                                         const RateSubstreams& streams)
    : cfg_(cfg),
      observation_(streams.observation_noise),
      drift_(streams.drift_noise),
      sigma_rng_(streams.sigma_draws) {
    validate(cfg_);
}

double RateTrackingProblem::next(std::vector<double>& x) {
    if (t_ % cfg_.sigma_period == 0) {
        sigma_ = sigma_rng_.uniform(cfg_.sigma_min, cfg_.sigma_max);
    }
    x.assign(1, 1.0);
    const double y = z_ + observation_.normal(0.0, cfg_.observation_noise_std);
    z_ += drift_.normal(0.0, sigma_);
    ++t_;
    return y;
}

double optimal_alpha(double sigma) {
    if (!(sigma >= 0.0)) throw std::domain_error("optimal_alpha: sigma must be nonnegative");
    // Equals (-s^2 + sqrt(s^4 + 4 s^2)) / 2 without the subtractive cancellation.
    return 2.0 * sigma / (std::sqrt(sigma * sigma + 4.0) + sigma);
}

}  // namespace stepsize
