#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "stepsize/errors.hpp"

namespace stepsize {

inline constexpr double kDefaultEpsilon = 1e-8;

// One observation of the regression stream. delta = x'w - y_star is
// recomputed from the current weights at the start of every step; the
// gradient sample of the squared-error objective is delta * x (the factor 2
// is absorbed into the step-sizes).
struct GradSample {
    std::span<const double> x;
    double y_star = 0.0;
    double delta = 0.0;
};

inline double predict(std::span<const double> w, std::span<const double> x) {
    if (w.size() != x.size()) {
        throw ConfigError("predict: weight length " + std::to_string(w.size()) +
                          " != feature length " + std::to_string(x.size()));
    }
    double y = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) y += w[i] * x[i];
    return y;
}

inline GradSample make_sample(std::span<const double> w, std::span<const double> x,
                              double y_star) {
    return GradSample{x, y_star, predict(w, x) - y_star};
}

inline double loss(const GradSample& s) { return s.delta * s.delta; }

// ---------------------------------------------------------------------------
// Optimizer states. Plain values: copy to snapshot, mutate single-threaded.
// Weights always start at zero; t counts performed updates plus one.

struct SgdState {
    std::vector<double> w;
    double eta = 0.0;
    std::uint64_t t = 1;
};

struct RmsPropState {
    std::vector<double> w;
    std::vector<double> g;  // second-moment trace, starts at all ones
    double eta = 0.0;
    double gamma_g = 0.0;
    double epsilon = kDefaultEpsilon;
    std::uint64_t t = 1;
};

struct AdamState {
    std::vector<double> w;
    std::vector<double> m;  // first-moment trace, starts at zero
    std::vector<double> g;  // second-moment trace, starts at zero
    double eta = 0.0;
    double gamma_m = 0.0;
    double gamma_g = 0.0;
    double epsilon = kDefaultEpsilon;
    // 1 - (1-gamma)^t, maintained incrementally so the first-step correction
    // divides by exactly gamma.
    double bias_m = 0.0;
    double bias_g = 0.0;
    std::uint64_t t = 1;
};

struct IdbdState {
    std::vector<double> w;
    std::vector<double> beta;  // log-space step-sizes, start at log(alpha0)
    std::vector<double> h;     // decayed gradient trace, starts at zero
    double theta = 0.0;
    double alpha0 = 0.0;
    std::uint64_t t = 1;
};

struct FixedVectorState {
    std::vector<double> w;
    std::vector<double> alpha;  // constant per-component step-sizes
    std::uint64_t t = 1;
};

SgdState make_sgd(std::size_t dim, double eta);
RmsPropState make_rmsprop(std::size_t dim, double eta, double gamma_g,
                          double epsilon = kDefaultEpsilon);
AdamState make_adam(std::size_t dim, double eta, double gamma_m, double gamma_g,
                    double epsilon = kDefaultEpsilon);
IdbdState make_idbd(std::size_t dim, double theta, double alpha0);
FixedVectorState make_fixed_vector(std::vector<double> alpha);

// ---------------------------------------------------------------------------
// Online steps. Each mutates the state in place, advances t, and throws
// DivergenceError if any updated component is non-finite.

namespace detail {

inline void check_finite(std::span<const double> v, std::uint64_t step, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw DivergenceError(step, std::string("non-finite ") + what);
    }
}

inline void check_dim(std::size_t want, std::size_t got) {
    if (want != got) {
        throw ConfigError("sample dimension " + std::to_string(got) +
                          " != state dimension " + std::to_string(want));
    }
}

}  // namespace detail

inline void sgd_step(SgdState& s, const GradSample& sample) {
    detail::check_dim(s.w.size(), sample.x.size());
    for (std::size_t i = 0; i < s.w.size(); ++i) {
        s.w[i] -= (s.eta * sample.delta) * sample.x[i];
    }
    detail::check_finite(s.w, s.t, "weights");
    ++s.t;
}

inline void rmsprop_step(RmsPropState& s, const GradSample& sample) {
    detail::check_dim(s.w.size(), sample.x.size());
    for (std::size_t i = 0; i < s.w.size(); ++i) {
        const double grad = sample.delta * sample.x[i];
        s.g[i] = (1.0 - s.gamma_g) * s.g[i] + s.gamma_g * (grad * grad);
        s.w[i] -= (s.eta / std::sqrt(s.g[i] + s.epsilon)) * grad;
    }
    detail::check_finite(s.w, s.t, "weights");
    detail::check_finite(s.g, s.t, "second-moment trace");
    ++s.t;
}

inline void adam_step(AdamState& s, const GradSample& sample) {
    detail::check_dim(s.w.size(), sample.x.size());
    // bias_x = 1 - (1-gamma)^t via the recurrence b' = gamma + (1-gamma) b,
    // which gives exactly gamma on the first step.
    s.bias_m = s.gamma_m + (1.0 - s.gamma_m) * s.bias_m;
    s.bias_g = s.gamma_g + (1.0 - s.gamma_g) * s.bias_g;
    for (std::size_t i = 0; i < s.w.size(); ++i) {
        const double grad = sample.delta * sample.x[i];
        s.m[i] = (1.0 - s.gamma_m) * s.m[i] + s.gamma_m * grad;
        s.g[i] = (1.0 - s.gamma_g) * s.g[i] + s.gamma_g * (grad * grad);
        const double m_hat = s.m[i] / s.bias_m;
        const double g_hat = s.g[i] / s.bias_g;
        s.w[i] -= (s.eta / std::sqrt(g_hat + s.epsilon)) * m_hat;
    }
    detail::check_finite(s.w, s.t, "weights");
    ++s.t;
}

// The published update order, line for line. The pseudocode's error is
// y* - y, the negation of GradSample.delta, so the step works with
// e = -delta throughout.
inline void idbd_step(IdbdState& s, const GradSample& sample) {
    detail::check_dim(s.w.size(), sample.x.size());
    const double e = -sample.delta;
    for (std::size_t i = 0; i < s.w.size(); ++i) {
        const double xi = sample.x[i];
        s.beta[i] += (s.theta * e) * xi * s.h[i];
        const double alpha = std::exp(s.beta[i]);
        if (!std::isfinite(alpha)) throw DivergenceError(s.t, "non-finite step-size");
        s.w[i] += (alpha * e) * xi;
        double decay = 1.0 - alpha * (xi * xi);
        if (decay < 0.0) decay = 0.0;
        s.h[i] = decay * s.h[i] + (alpha * e) * xi;
    }
    detail::check_finite(s.beta, s.t, "log step-sizes");
    detail::check_finite(s.w, s.t, "weights");
    detail::check_finite(s.h, s.t, "gradient trace");
    ++s.t;
}

inline void fixed_vector_step(FixedVectorState& s, const GradSample& sample) {
    detail::check_dim(s.w.size(), sample.x.size());
    for (std::size_t i = 0; i < s.w.size(); ++i) {
        s.w[i] -= (s.alpha[i] * sample.delta) * sample.x[i];
    }
    detail::check_finite(s.w, s.t, "weights");
    ++s.t;
}

// ---------------------------------------------------------------------------
// The per-component multiplier the last (or, for a fresh state, the next)
// weight update applies against delta * x. For Adam this is evaluated with
// the current bias-corrected second-moment trace.

std::vector<double> effective_step_size(const SgdState& s);
std::vector<double> effective_step_size(const RmsPropState& s);
std::vector<double> effective_step_size(const AdamState& s);
std::vector<double> effective_step_size(const IdbdState& s);
std::vector<double> effective_step_size(const FixedVectorState& s);

// ---------------------------------------------------------------------------
// One online-step interface over all five rules, for harness code that treats
// the algorithm as data.

using OptimizerState =
    std::variant<SgdState, RmsPropState, AdamState, IdbdState, FixedVectorState>;

void optimizer_step(OptimizerState& state, const GradSample& sample);
std::vector<double> effective_step_size(const OptimizerState& state);
std::span<const double> weights(const OptimizerState& state);
std::size_t dim(const OptimizerState& state);

}  // namespace stepsize
