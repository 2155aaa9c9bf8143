#include "kolmo/adamw.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kolmo {

AdamW::AdamW(const AdamWConfig& config, std::size_t parameter_count)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {
    if (config.decay_steps == 0) throw std::invalid_argument("AdamW: decay_steps must be positive");
}

double AdamW::learning_rate(std::size_t t) const {
    const double frac = static_cast<double>(std::min(t, config_.decay_steps)) / static_cast<double>(config_.decay_steps);
    return config_.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

void AdamW::step(std::vector<double>& params, const std::vector<double>& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("AdamW: shape mismatch");
    const double lr = learning_rate(t_);
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad[i];
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr * (mhat / (std::sqrt(vhat) + config_.epsilon) + config_.weight_decay * params[i]);
    }
}

}  // namespace kolmo
