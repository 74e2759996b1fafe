#include "stepsize/optimizers.hpp"

#include <algorithm>
#include <cmath>

namespace stepsize {

namespace {

void require(bool ok, const char* message) {
    if (!ok) throw ConfigError(message);
}

}  // namespace

SgdState make_sgd(std::size_t dim, double eta) {
    require(dim > 0, "classic_sgd: dimension must be positive");
    require(std::isfinite(eta) && eta >= 0.0, "classic_sgd: eta must be a nonnegative real");
    SgdState s;
    s.w.assign(dim, 0.0);
    s.eta = eta;
    return s;
}

RmsPropState make_rmsprop(std::size_t dim, double eta, double gamma_g, double epsilon) {
    require(dim > 0, "rmsprop: dimension must be positive");
    require(std::isfinite(eta) && eta > 0.0, "rmsprop: eta must be positive");
    require(gamma_g > 0.0 && gamma_g <= 1.0, "rmsprop: gamma_g must be in (0, 1]");
    require(std::isfinite(epsilon) && epsilon > 0.0, "rmsprop: epsilon must be positive");
    RmsPropState s;
    s.w.assign(dim, 0.0);
    s.g.assign(dim, 1.0);
    s.eta = eta;
    s.gamma_g = gamma_g;
    s.epsilon = epsilon;
    return s;
}

AdamState make_adam(std::size_t dim, double eta, double gamma_m, double gamma_g,
                    double epsilon) {
    require(dim > 0, "adam: dimension must be positive");
    require(std::isfinite(eta) && eta > 0.0, "adam: eta must be positive");
    // gamma = 0 would make the first bias denominator zero.
    require(gamma_m > 0.0 && gamma_m <= 1.0, "adam: gamma_m must be in (0, 1]");
    require(gamma_g > 0.0 && gamma_g <= 1.0, "adam: gamma_g must be in (0, 1]");
    require(std::isfinite(epsilon) && epsilon > 0.0, "adam: epsilon must be positive");
    AdamState s;
    s.w.assign(dim, 0.0);
    s.m.assign(dim, 0.0);
    s.g.assign(dim, 0.0);
    s.eta = eta;
    s.gamma_m = gamma_m;
    s.gamma_g = gamma_g;
    s.epsilon = epsilon;
    return s;
}

IdbdState make_idbd(std::size_t dim, double theta, double alpha0) {
    require(dim > 0, "idbd: dimension must be positive");
    require(std::isfinite(theta) && theta >= 0.0, "idbd: theta must be nonnegative");
    require(std::isfinite(alpha0) && alpha0 > 0.0, "idbd: alpha0 must be positive");
    IdbdState s;
    s.w.assign(dim, 0.0);
    s.beta.assign(dim, std::log(alpha0));
    s.h.assign(dim, 0.0);
    s.theta = theta;
    s.alpha0 = alpha0;
    return s;
}

FixedVectorState make_fixed_vector(std::vector<double> alpha) {
    require(!alpha.empty(), "fixed_vector: alpha must be nonempty");
    for (double a : alpha) {
        require(std::isfinite(a) && a >= 0.0, "fixed_vector: alpha must be nonnegative");
    }
    FixedVectorState s;
    s.w.assign(alpha.size(), 0.0);
    s.alpha = std::move(alpha);
    return s;
}

std::vector<double> effective_step_size(const SgdState& s) {
    return std::vector<double>(s.w.size(), s.eta);
}

std::vector<double> effective_step_size(const RmsPropState& s) {
    std::vector<double> alpha(s.g.size());
    for (std::size_t i = 0; i < s.g.size(); ++i) {
        alpha[i] = s.eta / std::sqrt(s.g[i] + s.epsilon);
    }
    return alpha;
}

std::vector<double> effective_step_size(const AdamState& s) {
    std::vector<double> alpha(s.g.size());
    for (std::size_t i = 0; i < s.g.size(); ++i) {
        const double g_hat = s.t > 1 ? s.g[i] / s.bias_g : 0.0;
        alpha[i] = s.eta / std::sqrt(g_hat + s.epsilon);
    }
    return alpha;
}

std::vector<double> effective_step_size(const IdbdState& s) {
    std::vector<double> alpha(s.beta.size());
    for (std::size_t i = 0; i < s.beta.size(); ++i) alpha[i] = std::exp(s.beta[i]);
    return alpha;
}

std::vector<double> effective_step_size(const FixedVectorState& s) { return s.alpha; }

void optimizer_step(OptimizerState& state, const GradSample& sample) {
    std::visit(
        [&sample](auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SgdState>) {
                sgd_step(s, sample);
            } else if constexpr (std::is_same_v<T, RmsPropState>) {
                rmsprop_step(s, sample);
            } else if constexpr (std::is_same_v<T, AdamState>) {
                adam_step(s, sample);
            } else if constexpr (std::is_same_v<T, IdbdState>) {
                idbd_step(s, sample);
            } else {
                fixed_vector_step(s, sample);
            }
        },
        state);
}

std::vector<double> effective_step_size(const OptimizerState& state) {
    return std::visit([](const auto& s) { return effective_step_size(s); }, state);
}

std::span<const double> weights(const OptimizerState& state) {
    return std::visit([](const auto& s) { return std::span<const double>(s.w); }, state);
}

std::size_t dim(const OptimizerState& state) {
    return std::visit([](const auto& s) { return s.w.size(); }, state);
}

}  // namespace stepsize
