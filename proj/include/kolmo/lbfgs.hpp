#pragma once

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <vector>

namespace kolmo {

/// Objective returning f(x) and writing grad f(x) into `grad` (pre-sized).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
    std::size_t history_size = 10;
    std::size_t max_steps = 1000;
    /// Stop once ||grad||_inf drops to this value.
    double grad_tolerance = 1e-10;
    double c1 = 1e-4;
    double c2 = 0.9;
    std::size_t max_line_search = 40;
};

/// Limited-memory inverse-Hessian approximation.
class LbfgsState {
public:
    explicit LbfgsState(std::size_t history_size = 10) : history_size_(history_size) {}

    /// Stores (s, y) unless s.y <= 0. Returns whether the pair was kept.
    bool push(const Eigen::VectorXd& s, const Eigen::VectorXd& y);
    /// Two-loop recursion: returns H * g.
    Eigen::VectorXd apply(const Eigen::VectorXd& g) const;
    void clear() { pairs_.clear(); }

    std::size_t size() const { return pairs_.size(); }
    std::size_t history_size() const { return history_size_; }
    double curvature(std::size_t i) const { return pairs_[i].s.dot(pairs_[i].y); }

private:
    struct Pair {
        Eigen::VectorXd s, y;
        double rho;
    };
    std::size_t history_size_;
    std::deque<Pair> pairs_;
};

struct LbfgsRecord {
    std::size_t iter = 0;
    double cost = 0.0;
    double grad_norm = 0.0;
    std::size_t evaluations = 0;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double cost = 0.0;
    std::vector<LbfgsRecord> history;
    bool converged = false;
    bool line_search_failed = false;
    std::size_t evaluations = 0;
};

/// Called after every accepted iterate (including iteration 0).
using IterateCallback = std::function<void(const LbfgsRecord&, const Eigen::VectorXd& x)>;

/// L-BFGS with a strong-Wolfe bracketing/zoom line search. Accepted costs are
/// non-increasing. On line-search failure returns the best iterate with
/// `line_search_failed` set.
LbfgsResult lbfgs_minimize(const Eigen::VectorXd& initial, const Objective& objective,
                           const LbfgsOptions& options = {}, const IterateCallback& on_iterate = {});

}  // namespace kolmo
