#include "kolmo/assimilation.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "kolmo/errors.hpp"
#include "kolmo/fft.hpp"
#include "kolmo/spectral_ops.hpp"

namespace kolmo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Stopwatch {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double monitored(const MonitorOptions& m, std::size_t iter, bool force, const std::function<SpectralField()>& estimate) {
    if (!m.monitor) return kNaN;
    if (!force && (m.every == 0 || iter % m.every != 0)) return kNaN;
    return m.monitor(estimate());
}

std::vector<double> grid_coordinates(const Grid& g) {
    std::vector<double> c(static_cast<std::size_t>(g.n()));
    for (int i = 0; i < g.n(); ++i) c[static_cast<std::size_t>(i)] = g.coordinate(i);
    return c;
}

std::vector<double> lattice_coordinates(const ObservationSet& obs) {
    const Grid g = obs.grid();
    std::vector<double> c;
    for (int i : observation_indices(obs.n, obs.k)) c.push_back(g.coordinate(i));
    return c;
}

}  // namespace

SpectralField interp_estimate(const ObservationSet& obs) {
    if (obs.samples.empty()) throw ConfigError("observation set is empty");
    return vorticity_from_velocity(bicubic_upsample(obs.samples.front()));
}

AssimilationProblem make_problem(ObservationSet obs, const SolverParams& params) {
    params.validate(obs.grid());
    SpectralField base = interp_estimate(obs);
    return {std::move(obs), params, std::move(base)};
}

TrajectoryCost observation_misfit(const AssimilationProblem& problem) {
    const auto& obs = problem.observations;
    TrajectoryCost cost;
    cost.steps = step_schedule(obs.times, problem.params.dt, &cost.term_states);
    const auto idx = observation_indices(obs.n, obs.k);
    cost.term = [&obs, idx](std::size_t t, const SpectralField& state, SpectralField* cot) {
        const VelocityField vel = velocity_from_vorticity(state);
        const SparseSamples& y = obs.samples[t];
        const int n = obs.n;
        double sum = 0.0;
        std::vector<double> ub, vb;
        if (cot != nullptr) {
            ub.assign(vel.ux.size(), 0.0);
            vb.assign(vel.uy.size(), 0.0);
        }
        std::size_t q = 0;
        for (int ix : idx) {
            for (int iy : idx) {
                const std::size_t p = static_cast<std::size_t>(ix) * n + iy;
                const double ru = vel.ux[p] - y.u[q];
                const double rv = vel.uy[p] - y.v[q];
                sum += ru * ru + rv * rv;
                if (cot != nullptr) {
                    ub[p] = 2.0 * ru;
                    vb[p] = 2.0 * rv;
                }
                ++q;
            }
        }
        if (cot != nullptr) *cot = velocity_from_vorticity_adjoint(state.grid, ub, vb);
        return sum;
    };
    return cost;
}

double cost_vanilla(const SpectralField& delta, const AssimilationProblem& problem) {
    try {
        return trajectory_cost(problem.base + delta, observation_misfit(problem), problem.params);
    } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
    }
}

CostGradient cost_vanilla_gradient(const SpectralField& delta, const AssimilationProblem& problem,
                                   CheckpointStore& checkpoints) {
    try {
        return gradient(problem.base + delta, observation_misfit(problem), problem.params, checkpoints);
    } catch (const NumericalError&) {
        return {std::numeric_limits<double>::infinity(), SpectralField(problem.grid())};
    }
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.precision(17);
    os << "iter,cost,grad_norm,rel_l1_error_vs_truth,wall_ms\n";
    for (const auto& r : trace) {
        os << r.iter << ',' << r.cost << ',' << r.grad_norm << ',';
        if (!std::isnan(r.rel_l1)) os << r.rel_l1;
        os << ',' << r.wall_ms << '\n';
    }
}

// ---------------------------------------------------------------- Vanilla

RunResult run_vanilla(const AssimilationProblem& problem, const VanillaConfig& config, const MonitorOptions& monitor) {
    const Grid g = problem.grid();
    const TrajectoryCost misfit = observation_misfit(problem);
    CheckpointStore store(config.checkpoints);
    const bool velocity = config.control == VanillaControl::Velocity;
    const std::size_t m = g.size();
    auto to_delta = [&](const Eigen::VectorXd& x) {
        if (!velocity) return to_spectral(RealField(g, std::vector<double>(x.data(), x.data() + m)));
        VelocityField v(g);
        v.ux.assign(x.data(), x.data() + m);
        v.uy.assign(x.data() + m, x.data() + 2 * m);
        return vorticity_from_velocity(v);
    };
    Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        try {
            const CostGradient cg = gradient(problem.base + to_delta(x), misfit, problem.params, store);
            grad.resize(x.size());
            if (velocity) {
                const VelocityField gv = vorticity_from_velocity_adjoint(cg.gradient);
                std::copy(gv.ux.begin(), gv.ux.end(), grad.data());
                std::copy(gv.uy.begin(), gv.uy.end(), grad.data() + m);
            } else {
                const RealField gp = to_physical(cg.gradient);
                std::copy(gp.values.begin(), gp.values.end(), grad.data());
            }
            return cg.cost;
        } catch (const NumericalError&) {
            grad.setZero();
            return std::numeric_limits<double>::infinity();
        }
    };
    LbfgsOptions opts = config.lbfgs;
    opts.max_steps = config.steps;
    Stopwatch clock;
    RunResult result{problem.base, {}, false, "ok"};
    auto on_iterate = [&](const LbfgsRecord& rec, const Eigen::VectorXd& x) {
        const double err = monitored(monitor, rec.iter, false, [&] { return problem.base + to_delta(x); });
        result.trace.push_back({rec.iter, rec.cost, rec.grad_norm, err, clock.ms()});
    };
    const LbfgsResult opt = lbfgs_minimize(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(velocity ? 2 * m : m)), objective, opts,
                                           on_iterate);
    result.estimate = problem.base + to_delta(opt.x);
    if (monitor.monitor && !result.trace.empty() && std::isnan(result.trace.back().rel_l1)) {
        result.trace.back().rel_l1 = monitor.monitor(result.estimate);
    }
    if (opt.line_search_failed) result.status = "line_search_failed";
    else if (opt.converged) result.status = "converged";
    return result;
}

// ---------------------------------------------------------------- Neural

SpinnModel make_increment_model(const NeuralConfig& config) {
    if (config.shape.axes != 2 || config.shape.channels != 2) {
        throw ConfigError("increment network must have 2 axes and 2 channels");
    }
    SpinnModel model = make_model(config.shape, config.seed);
    zero_output_layer(model, config.shape.axes - 1);
    return model;
}

SpectralField neural_increment(const SpinnModel& model, const Grid& grid) {
    const auto xs = grid_coordinates(grid);
    SpinnGrid eval(model, {xs, xs});
    VelocityField vel(grid);
    vel.ux = eval.field(0, {0, 0, 0});
    vel.uy = eval.field(1, {0, 0, 0});
    return vorticity_from_velocity(vel);
}

double cost_neural(const SpinnModel& model, const AssimilationProblem& problem, std::vector<double>* grad,
                   CheckpointStore* checkpoints) {
    const Grid g = problem.grid();
    const auto xs = grid_coordinates(g);
    SpinnGrid eval(model, {xs, xs});
    VelocityField vel(g);
    vel.ux = eval.field(0, {0, 0, 0});
    vel.uy = eval.field(1, {0, 0, 0});
    const SpectralField delta = vorticity_from_velocity(vel);
    if (grad == nullptr) return cost_vanilla(delta, problem);

    CheckpointStore local;
    const CostGradient cg = cost_vanilla_gradient(delta, problem, checkpoints != nullptr ? *checkpoints : local);
    if (!std::isfinite(cg.cost)) {
        grad->assign(model.params.size(), 0.0);
        return cg.cost;
    }
    const VelocityField vbar = vorticity_from_velocity_adjoint(cg.gradient);
    eval.add_cotangent(0, {0, 0, 0}, vbar.ux);
    eval.add_cotangent(1, {0, 0, 0}, vbar.uy);
    *grad = eval.param_gradient();
    return cg.cost;
}

RunResult run_neural(const AssimilationProblem& problem, const NeuralConfig& config, const MonitorOptions& monitor) {
    const Grid g = problem.grid();
    SpinnModel model = make_increment_model(config);
    AdamWConfig adam = config.adam;
    adam.decay_steps = config.steps;
    AdamW optimizer(adam, model.params.size());
    CheckpointStore store;
    Stopwatch clock;
    RunResult result{problem.base, {}, false, "ok"};
    auto estimate = [&] { return problem.base + neural_increment(model, g); };
    std::vector<double> grad;
    for (std::size_t it = 0; it < config.steps; ++it) {
        const double cost = cost_neural(model, problem, &grad, &store);
        if (!std::isfinite(cost)) {
            result.aborted = true;
            result.status = "non_finite_cost";
            break;
        }
        const double err = monitored(monitor, it, false, estimate);
        result.trace.push_back({it, cost, l2_norm(grad), err, clock.ms()});
        optimizer.step(model.params, grad);
    }
    if (!result.aborted) {
        const double cost = cost_neural(model, problem, &grad, &store);
        const double err = monitored(monitor, config.steps, true, estimate);
        result.trace.push_back({config.steps, cost, l2_norm(grad), err, clock.ms()});
    }
    result.estimate = estimate();
    return result;
}

// ---------------------------------------------------------------- PINN

double PinnLossConfig::data_weight(double sigma) { return sigma > 0.0 ? 1.0 / (sigma * sigma) : 5e3; }

PinnLossConfig PinnLossConfig::for_sigma(double sigma) {
    PinnLossConfig c;
    c.lambda_data = data_weight(sigma);
    return c;
}

void PinnLossConfig::validate() const {
    if (!(lambda_data >= 0.0) || !(lambda_div >= 0.0) || !(lambda_physics >= 0.0)) {
        throw ConfigError("PINN loss weights must be non-negative");
    }
    if (n_t < 1 || n_x < 1 || n_y < 1) throw ConfigError("collocation counts must be positive");
}

std::vector<std::vector<double>> sample_collocation(const PinnLossConfig& config, double window,
                                                    std::mt19937_64& rng) {
    const double two_pi = 2.0 * std::numbers::pi;
    std::uniform_real_distribution<double> ut(0.0, window), ux(0.0, two_pi);
    std::vector<std::vector<double>> c(3);
    for (int i = 0; i < config.n_t; ++i) {
        double t = 0.0;
        while (t <= 0.0) t = ut(rng);
        c[0].push_back(t);
    }
    for (int i = 0; i < config.n_x; ++i) c[1].push_back(ux(rng));
    for (int i = 0; i < config.n_y; ++i) c[2].push_back(ux(rng));
    return c;
}

namespace {

void check_pinn_model(const SpinnModel& model) {
    if (model.shape.axes != 3 || model.shape.channels != 2) {
        throw ConfigError("PINN network must have 3 axes (t, x, y) and 2 velocity channels");
    }
}

// lambda_data * sum_k ||H(u(t_k)) - y_k||^2 at the observation coordinates.
double data_term(const SpinnModel& model, const AssimilationProblem& problem, double lambda_data,
                 std::vector<double>* grad) {
    const auto& obs = problem.observations;
    const auto xs = lattice_coordinates(obs);
    SpinnGrid eval(model, {obs.times, xs, xs});
    const auto u = eval.field(0, {0, 0, 0});
    const auto v = eval.field(1, {0, 0, 0});
    const std::size_t per_time = xs.size() * xs.size();
    std::vector<double> ru(u.size()), rv(v.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < obs.times.size(); ++t) {
        for (std::size_t q = 0; q < per_time; ++q) {
            const std::size_t p = t * per_time + q;
            ru[p] = u[p] - obs.samples[t].u[q];
            rv[p] = v[p] - obs.samples[t].v[q];
            sum += ru[p] * ru[p] + rv[p] * rv[p];
        }
    }
    if (grad != nullptr) {
        eval.add_cotangent(0, {0, 0, 0}, ru, 2.0 * lambda_data);
        eval.add_cotangent(1, {0, 0, 0}, rv, 2.0 * lambda_data);
        *grad = eval.param_gradient();
    }
    return lambda_data * sum;
}

constexpr int U = 0;
constexpr int V = 1;

}  // namespace

PinnEvaluation cost_pinn_at(const SpinnModel& model, const PinnLossConfig& config, const AssimilationProblem& problem,
                            const std::vector<std::vector<double>>& collocation, bool with_gradient) {
    check_pinn_model(model);
    config.validate();
    const auto& p = problem.params;
    PinnEvaluation ev;
    ev.gradient.assign(model.params.size(), 0.0);

    if (config.lambda_physics > 0.0 || config.lambda_div > 0.0) {
        SpinnGrid eval(model, collocation, {1, 3, 3});
        const std::size_t N = eval.points();
        const double inv_n = 1.0 / static_cast<double>(N);
        auto zeros = [N] { return std::vector<double>(N, 0.0); };
        // omega = v_x - u_y and the pieces of its transport equation.
        auto combine = [&](std::initializer_list<std::tuple<int, Orders, double>> terms) {
            auto f = zeros();
            for (const auto& [c, o, s] : terms) eval.accumulate_field(c, o, s, f);
            return f;
        };
        const auto u = eval.field(U, {0, 0, 0});
        const auto v = eval.field(V, {0, 0, 0});
        const auto w = combine({{V, {0, 1, 0}, 1.0}, {U, {0, 0, 1}, -1.0}});
        const auto wt = combine({{V, {1, 1, 0}, 1.0}, {U, {1, 0, 1}, -1.0}});
        const auto wx = combine({{V, {0, 2, 0}, 1.0}, {U, {0, 1, 1}, -1.0}});
        const auto wy = combine({{V, {0, 1, 1}, 1.0}, {U, {0, 0, 2}, -1.0}});
        const auto lap = combine({{V, {0, 3, 0}, 1.0}, {V, {0, 1, 2}, 1.0}, {U, {0, 2, 1}, -1.0}, {U, {0, 0, 3}, -1.0}});
        const auto div = combine({{U, {0, 1, 0}, 1.0}, {V, {0, 0, 1}, 1.0}});

        const auto& ys = collocation[2];
        const std::size_t ny = ys.size();
        const double kf = p.forcing_wavenumber;
        std::vector<double> forcing(ny);
        for (std::size_t j = 0; j < ny; ++j) forcing[j] = -p.forcing_amplitude * kf * std::cos(kf * ys[j]);

        auto r = zeros();
        double phys = 0.0, dsum = 0.0;
        for (std::size_t q = 0; q < N; ++q) {
            const double res = wt[q] + u[q] * wx[q] + v[q] * wy[q] - p.nu * lap[q] + p.drag * w[q] - forcing[q % ny];
            r[q] = res;
            phys += res * res;
            dsum += div[q] * div[q];
        }
        ev.terms.physics = config.lambda_physics * phys * inv_n;
        ev.terms.divergence = config.lambda_div * dsum * inv_n;

        if (with_gradient) {
            const double cr = 2.0 * config.lambda_physics * inv_n;
            auto cu = zeros(), cv = zeros(), cux = zeros(), cvy = zeros();
            for (std::size_t q = 0; q < N; ++q) {
                cu[q] = r[q] * wx[q];
                cv[q] = r[q] * wy[q];
                cux[q] = r[q] * u[q];
                cvy[q] = r[q] * v[q];
            }
            eval.add_cotangent(U, {0, 0, 0}, cu, cr);
            eval.add_cotangent(V, {0, 0, 0}, cv, cr);
            eval.add_cotangent(V, {1, 1, 0}, r, cr);
            eval.add_cotangent(U, {1, 0, 1}, r, -cr);
            eval.add_cotangent(V, {0, 2, 0}, cux, cr);
            eval.add_cotangent(U, {0, 1, 1}, cux, -cr);
            eval.add_cotangent(V, {0, 1, 1}, cvy, cr);
            eval.add_cotangent(U, {0, 0, 2}, cvy, -cr);
            eval.add_cotangent(V, {0, 3, 0}, r, -p.nu * cr);
            eval.add_cotangent(V, {0, 1, 2}, r, -p.nu * cr);
            eval.add_cotangent(U, {0, 2, 1}, r, p.nu * cr);
            eval.add_cotangent(U, {0, 0, 3}, r, p.nu * cr);
            eval.add_cotangent(V, {0, 1, 0}, r, p.drag * cr);
            eval.add_cotangent(U, {0, 0, 1}, r, -p.drag * cr);
            const double cd = 2.0 * config.lambda_div * inv_n;
            eval.add_cotangent(U, {0, 1, 0}, div, cd);
            eval.add_cotangent(V, {0, 0, 1}, div, cd);
            ev.gradient = eval.param_gradient();
        }
    }

    std::vector<double> gdata;
    ev.terms.data = data_term(model, problem, config.lambda_data, with_gradient ? &gdata : nullptr);
    if (with_gradient) {
        for (std::size_t i = 0; i < gdata.size(); ++i) ev.gradient[i] += gdata[i];
    }
    ev.terms.total = ev.terms.physics + ev.terms.divergence + ev.terms.data;
    return ev;
}

PinnEvaluation cost_pinn(const SpinnModel& model, const PinnLossConfig& config, const AssimilationProblem& problem,
                         std::mt19937_64& rng, bool with_gradient) {
    const auto coords = sample_collocation(config, problem.window(), rng);
    return cost_pinn_at(model, config, problem, coords, with_gradient);
}

PinnEvaluation cost_regression(const SpinnModel& model, const AssimilationProblem& problem, double lambda_data,
                               bool with_gradient) {
    check_pinn_model(model);
    PinnEvaluation ev;
    ev.terms.data = data_term(model, problem, lambda_data, with_gradient ? &ev.gradient : nullptr);
    ev.terms.total = ev.terms.data;
    return ev;
}

SpectralField pinn_estimate(const SpinnModel& model, const Grid& grid) {
    check_pinn_model(model);
    const auto xs = grid_coordinates(grid);
    SpinnGrid eval(model, {{0.0}, xs, xs}, {0, 1, 1});
    RealField w(grid);
    eval.accumulate_field(V, {0, 1, 0}, 1.0, w.values);
    eval.accumulate_field(U, {0, 0, 1}, -1.0, w.values);
    return to_spectral(w);
}

namespace {

RunResult train_spacetime(const AssimilationProblem& problem, const PinnConfig& config, const MonitorOptions& monitor,
                          bool physics) {
    const Grid g = problem.grid();
    SpinnShape shape = config.shape;
    if (shape.feature_scale.empty()) {
        shape = spacetime_shape(problem.window(), shape.rank, shape.width, shape.depth, shape.modes, shape.channels);
    }
    SpinnModel model = make_model(shape, config.seed);
    check_pinn_model(model);
    AdamWConfig adam = config.adam;
    adam.decay_steps = config.steps;
    AdamW optimizer(adam, model.params.size());
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    Stopwatch clock;
    RunResult result{problem.base, {}, false, "ok"};
    auto estimate = [&] { return pinn_estimate(model, g); };
    auto evaluate = [&] {
        return physics ? cost_pinn(model, config.loss, problem, rng)
                       : cost_regression(model, problem, config.loss.lambda_data);
    };
    double initial = 0.0;
    for (std::size_t it = 0; it < config.steps; ++it) {
        const PinnEvaluation ev = evaluate();
        const double cost = ev.terms.total;
        if (it == 0) initial = cost;
        if (!std::isfinite(cost) || cost > config.divergence_factor * initial) {
            result.aborted = true;
            result.status = std::isfinite(cost) ? "diverged" : "non_finite_cost";
            result.trace.push_back({it, cost, l2_norm(ev.gradient), kNaN, clock.ms()});
            break;
        }
        const double err = monitored(monitor, it, false, estimate);
        result.trace.push_back({it, cost, l2_norm(ev.gradient), err, clock.ms()});
        optimizer.step(model.params, ev.gradient);
    }
    if (!result.aborted) {
        const PinnEvaluation ev = evaluate();
        const double err = monitored(monitor, config.steps, true, estimate);
        result.trace.push_back({config.steps, ev.terms.total, l2_norm(ev.gradient), err, clock.ms()});
    }
    result.estimate = estimate();
    return result;
}

}  // namespace

RunResult run_pinn(const AssimilationProblem& problem, const PinnConfig& config, const MonitorOptions& monitor) {
    return train_spacetime(problem, config, monitor, true);
}

RunResult run_regression(const AssimilationProblem& problem, const PinnConfig& config, const MonitorOptions& monitor) {
    return train_spacetime(problem, config, monitor, false);
}

RunResult run_hybrid(const AssimilationProblem& problem, const HybridConfig& config, const MonitorOptions& monitor,
                     RunResult* pinn_stage) {
    RunResult first = run_pinn(problem, config.pinn, monitor);
    if (pinn_stage) *pinn_stage = first;
    if (first.aborted) return first;
    AssimilationProblem refined = problem;
    refined.base = first.estimate;
    RunResult second = run_neural(refined, config.neural, monitor);
    const std::size_t offset = config.pinn.steps;
    const double elapsed = first.trace.empty() ? 0.0 : first.trace.back().wall_ms;
    // Stage 2 starts from the stage 1 estimate; its iteration 0 replaces the
    // final stage 1 row so that iterations stay unique.
    if (!first.trace.empty()) first.trace.pop_back();
    for (auto row : second.trace) {
        row.iter += offset;
        row.wall_ms += elapsed;
        first.trace.push_back(row);
    }
    first.estimate = std::move(second.estimate);
    first.aborted = second.aborted;
    first.status = second.status;
    return first;
}

}  // namespace kolmo
