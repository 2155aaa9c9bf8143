#pragma once

#include <cstddef>
#include <vector>

namespace kolmo {

struct AdamWConfig {
    double learning_rate = 1e-2;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Cosine-decay horizon; lr reaches zero at this step.
    std::size_t decay_steps = 1000;
};

/// AdamW with decoupled weight decay and cosine learning-rate decay
///   lr(t) = lr0 * (1 + cos(pi * min(t, T) / T)) / 2.
class AdamW {
public:
    AdamW(const AdamWConfig& config, std::size_t parameter_count);

    double learning_rate(std::size_t t) const;
    /// p <- p - lr(t) * (m_hat / (sqrt(v_hat) + eps) + wd * p), t = steps taken so far.
    void step(std::vector<double>& params, const std::vector<double>& grad);

    std::size_t step_count() const { return t_; }
    const std::vector<double>& first_moment() const { return m_; }
    const std::vector<double>& second_moment() const { return v_; }

private:
    AdamWConfig config_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace kolmo
