#include "kolmo/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kolmo {

bool LbfgsState::push(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    const double sy = s.dot(y);
    if (!(sy > 0.0) || !std::isfinite(sy)) return false;
    if (pairs_.size() == history_size_) pairs_.pop_front();
    pairs_.push_back({s, y, 1.0 / sy});
    return true;
}

Eigen::VectorXd LbfgsState::apply(const Eigen::VectorXd& g) const {
    Eigen::VectorXd q = g;
    std::vector<double> alpha(pairs_.size());
    for (std::size_t i = pairs_.size(); i-- > 0;) {
        alpha[i] = pairs_[i].rho * pairs_[i].s.dot(q);
        q -= alpha[i] * pairs_[i].y;
    }
    if (!pairs_.empty()) {
        const auto& last = pairs_.back();
        q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        const double beta = pairs_[i].rho * pairs_[i].y.dot(q);
        q += (alpha[i] - beta) * pairs_[i].s;
    }
    return q;
}

namespace {

struct Probe {
    double alpha = 0.0;
    double f = 0.0;
    double d = 0.0;  // directional derivative
    Eigen::VectorXd x, g;
};

// Minimizer of the cubic through (a, fa, da), (b, fb, db), kept inside the
// middle 80% of the bracket; bisection when the cubic has no real minimizer.
double cubic_step(const Probe& lo, const Probe& hi) {
    const double a = lo.alpha, b = hi.alpha;
    const double d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (a - b);
    const double disc = d1 * d1 - lo.d * hi.d;
    double t = 0.5 * (a + b);
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double denom = hi.d - lo.d + 2.0 * d2;
        if (denom != 0.0) t = b - (b - a) * (hi.d + d2 - d1) / denom;
    }
    const double lo_b = std::min(a, b) + 0.1 * std::abs(b - a);
    const double hi_b = std::max(a, b) - 0.1 * std::abs(b - a);
    if (!std::isfinite(t) || t < lo_b || t > hi_b) t = 0.5 * (a + b);
    return t;
}

class LineSearch {
public:
    LineSearch(const Objective& f, const LbfgsOptions& o, std::size_t& evals) : f_(f), o_(o), evals_(evals) {}

    // Returns true and fills `out` with a strong-Wolfe point; false on failure
    // (out then holds the best point seen, if any improved on the start).
    bool run(const Eigen::VectorXd& x0, double f0, const Eigen::VectorXd& g0, const Eigen::VectorXd& dir,
             double alpha0, Probe& out) {
        const double d0 = g0.dot(dir);
        Probe prev{0.0, f0, d0, x0, g0};
        best_ = prev;
        double alpha = alpha0;
        for (std::size_t i = 0; i < o_.max_line_search; ++i) {
            Probe cur = eval(x0, dir, alpha);
            if (!std::isfinite(cur.f)) {
                alpha *= 0.25;
                continue;
            }
            if (cur.f > f0 + o_.c1 * alpha * d0 || (i > 0 && cur.f >= prev.f)) {
                return zoom(x0, f0, d0, dir, prev, cur, out);
            }
            if (std::abs(cur.d) <= -o_.c2 * d0) {
                out = std::move(cur);
                return true;
            }
            if (cur.d >= 0.0) return zoom(x0, f0, d0, dir, cur, prev, out);
            prev = std::move(cur);
            alpha *= 2.0;
        }
        out = best_;
        return false;
    }

private:
    Probe eval(const Eigen::VectorXd& x0, const Eigen::VectorXd& dir, double alpha) {
        Probe p;
        p.alpha = alpha;
        p.x = x0 + alpha * dir;
        p.g.resize(x0.size());
        p.f = f_(p.x, p.g);
        ++evals_;
        p.d = p.g.dot(dir);
        if (std::isfinite(p.f) && p.f < best_.f) best_ = p;
        return p;
    }

    bool zoom(const Eigen::VectorXd& x0, double f0, double d0, const Eigen::VectorXd& dir, Probe lo, Probe hi,
              Probe& out) {
        for (std::size_t i = 0; i < o_.max_line_search; ++i) {
            const double alpha = cubic_step(lo, hi);
            if (std::abs(hi.alpha - lo.alpha) <= std::numeric_limits<double>::epsilon() * std::abs(alpha)) break;
            Probe cur = eval(x0, dir, alpha);
            if (!std::isfinite(cur.f) || cur.f > f0 + o_.c1 * alpha * d0 || cur.f >= lo.f) {
                hi = std::move(cur);
            } else {
                if (std::abs(cur.d) <= -o_.c2 * d0) {
                    out = std::move(cur);
                    return true;
                }
                if (cur.d * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(cur);
            }
        }
        out = best_;
        return false;
    }

    const Objective& f_;
    const LbfgsOptions& o_;
    std::size_t& evals_;
    Probe best_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Eigen::VectorXd& initial, const Objective& objective, const LbfgsOptions& options,
                           const IterateCallback& on_iterate) {
    LbfgsResult res;
    res.x = initial;
    Eigen::VectorXd g(initial.size());
    res.cost = objective(res.x, g);
    res.evaluations = 1;

    LbfgsState state(options.history_size);
    auto record = [&](std::size_t iter) {
        LbfgsRecord r{iter, res.cost, g.lpNorm<Eigen::Infinity>(), res.evaluations};
        res.history.push_back(r);
        if (on_iterate) on_iterate(r, res.x);
    };
    record(0);
    if (!std::isfinite(res.cost)) {
        res.line_search_failed = true;
        return res;
    }

    LineSearch ls(objective, options, res.evaluations);
    for (std::size_t iter = 1; iter <= options.max_steps; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() <= options.grad_tolerance) {
            res.converged = true;
            break;
        }
        Eigen::VectorXd dir = -state.apply(g);
        double alpha0 = 1.0;
        if (state.size() == 0) alpha0 = std::min(1.0, 1.0 / g.norm());
        if (!(g.dot(dir) < 0.0)) {
            state.clear();
            dir = -g;
            alpha0 = std::min(1.0, 1.0 / g.norm());
        }
        Probe next;
        bool ok = ls.run(res.x, res.cost, g, dir, alpha0, next);
        if (!ok && state.size() > 0) {
            // Retry once along steepest descent with fresh curvature memory.
            state.clear();
            dir = -g;
            ok = ls.run(res.x, res.cost, g, dir, std::min(1.0, 1.0 / g.norm()), next);
        }
        if (!ok) {
            if (next.x.size() == res.x.size() && next.f < res.cost) {
                res.x = std::move(next.x);
                res.cost = next.f;
                g = std::move(next.g);
                record(iter);
            }
            res.line_search_failed = true;
            break;
        }
        state.push(next.x - res.x, next.g - g);
        res.x = std::move(next.x);
        res.cost = next.f;
        g = std::move(next.g);
        record(iter);
    }
    if (g.lpNorm<Eigen::Infinity>() <= options.grad_tolerance) res.converged = true;
    return res;
}

}  // namespace kolmo
