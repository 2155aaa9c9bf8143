// kolmo: command-line driver for the Kolmogorov-flow assimilation studies.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "kolmo/analysis.hpp"
#include "kolmo/assimilation.hpp"
#include "kolmo/config.hpp"
#include "kolmo/errors.hpp"
#include "kolmo/fft.hpp"
#include "kolmo/runtime.hpp"
#include "kolmo/snapshot_io.hpp"
#include "kolmo/spectral_ops.hpp"

namespace fs = std::filesystem;
using namespace kolmo;

namespace {

constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::mutex g_log_mutex;

void log(const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    std::cerr << msg << '\n';
}

// ---------------------------------------------------------------------------
// Shared helpers

struct Inputs {
    ExperimentConfig config;
    SolverParams params;
    Grid grid;
    /// Empty when no truth is available (observations supplied from a file).
    std::optional<SpectralField> truth;
};

SpectralField load_or_generate_truth(const ExperimentConfig& c, const SolverParams& p) {
    const Grid g(c.n);
    if (!c.truth_file.empty()) {
        SpectralField t = read_vorticity(c.truth_file);
        if (t.grid.n() != c.n) throw ConfigError("truth_file: grid is " + std::to_string(t.grid.n()) + ", config n is " + std::to_string(c.n));
        return t;
    }
    return random_initial_condition(c.truth_seed, g, p, c.spinup);
}

Inputs prepare(const ExperimentConfig& c, bool need_truth) {
    c.validate();
    Inputs in{c, c.resolved_solver(), Grid(c.n), std::nullopt};
    if (need_truth || !c.truth_file.empty() || c.observations_file.empty()) {
        in.truth = load_or_generate_truth(c, in.params);
    }
    return in;
}

ObservationSet observations_for(const Inputs& in, int k, double sigma) {
    const ExperimentConfig& c = in.config;
    if (!c.observations_file.empty()) {
        ObservationSet obs = read_observations(c.observations_file);
        if (obs.n != c.n) throw ConfigError("observations_file: grid does not match n");
        return obs;
    }
    const NoiseMode mode = c.per_time_noise ? NoiseMode::PerTime : NoiseMode::TimeIndependent;
    return generate_observations(*in.truth, k, sigma, c.noise_seed, in.params, observation_times(c.window, c.obs_interval),
                                 mode);
}

void write_run_manifest(const fs::path& dir, const std::string& command, const ExperimentConfig& c) {
    auto kv = c.to_key_values();
    kv["command"] = command;
    write_manifest(dir / "manifest.txt", kv);
}

// ---------------------------------------------------------------------------
// Method dispatch

SpinnShape increment_shape(const ExperimentConfig& c) { return spatial_shape(c.rank, c.width, c.depth, c.modes); }

NeuralConfig neural_config(const ExperimentConfig& c, std::size_t steps) {
    NeuralConfig nc;
    nc.steps = steps;
    nc.shape = increment_shape(c);
    nc.adam.learning_rate = c.neural_lr;
    nc.adam.weight_decay = c.weight_decay;
    nc.adam.decay_steps = steps;
    nc.seed = c.model_seed;
    return nc;
}

PinnConfig pinn_config(const ExperimentConfig& c, double sigma) {
    PinnConfig pc;
    pc.steps = c.pinn_steps;
    pc.shape = spacetime_shape(c.window, c.rank, c.width, c.depth, c.modes);
    pc.adam.learning_rate = c.pinn_lr;
    pc.adam.weight_decay = c.weight_decay;
    pc.adam.decay_steps = c.pinn_steps;
    pc.loss = PinnLossConfig::for_sigma(sigma);
    if (c.lambda_data >= 0.0) pc.loss.lambda_data = c.lambda_data;
    pc.loss.lambda_div = c.lambda_div;
    pc.loss.n_t = pc.loss.n_x = pc.loss.n_y = c.collocation;
    pc.seed = c.model_seed;
    return pc;
}

RunResult run_method(const ExperimentConfig& c, const AssimilationProblem& problem, double sigma,
                     const MonitorOptions& monitor) {
    switch (c.method) {
        case Method::Interp: {
            RunResult r{problem.base, {}, false, "ok"};
            const double cost = cost_vanilla(SpectralField(problem.grid()), problem);
            const double err = monitor.monitor ? monitor.monitor(problem.base) : std::nan("");
            r.trace.push_back({0, cost, 0.0, err, 0.0});
            return r;
        }
        case Method::Vanilla: {
            VanillaConfig vc;
            vc.steps = c.vanilla_steps;
            return run_vanilla(problem, vc, monitor);
        }
        case Method::Neural:
            return run_neural(problem, neural_config(c, c.neural_steps), monitor);
        case Method::Pinn:
            return run_pinn(problem, pinn_config(c, sigma), monitor);
        case Method::Regression:
            return run_regression(problem, pinn_config(c, sigma), monitor);
        case Method::Hybrid: {
            HybridConfig hc;
            hc.pinn = pinn_config(c, sigma);
            hc.neural = neural_config(c, c.hybrid_neural_steps);
            return run_hybrid(problem, hc, monitor);
        }
    }
    throw ConfigError("method: unsupported");
}

struct SweepRun {
    int k;
    double sigma;
    fs::path dir;
};

std::vector<SweepRun> expand_sweep(const ExperimentConfig& c) {
    std::vector<SweepRun> runs;
    const bool single = c.k.size() * c.sigma.size() == 1;
    for (int k : c.k) {
        for (double s : c.sigma) {
            const fs::path dir = single ? fs::path(c.out) : fs::path(c.out) / ("k" + std::to_string(k) + "_sigma" + format_double(s));
            runs.push_back({k, s, dir});
        }
    }
    return runs;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_simulate(const ExperimentConfig& c) {
    const Inputs in = prepare(c, true);
    const fs::path out(c.out);
    fs::create_directories(out / "snapshots");
    write_vorticity(out / "truth.kda", *in.truth, 0.0);
    const auto times = observation_times(c.window, c.obs_interval);
    const Trajectory tr = integrate(*in.truth, 0.0, times.back(), in.params, times);
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "t%03zu.kda", i);
        write_vorticity(out / "snapshots" / name, tr.states[i], tr.times[i]);
    }
    write_run_manifest(out, "simulate", c);
    log("wrote truth and " + std::to_string(tr.states.size()) + " snapshots to " + out.string());
    return 0;
}

int cmd_observe(const ExperimentConfig& c) {
    const Inputs in = prepare(c, true);
    for (const SweepRun& run : expand_sweep(c)) {
        fs::create_directories(run.dir);
        write_observations(run.dir / "observations.kobs", observations_for(in, run.k, run.sigma));
        ExperimentConfig rc = c;
        rc.k = {run.k};
        rc.sigma = {run.sigma};
        rc.out = run.dir.string();
        write_run_manifest(run.dir, "observe", rc);
    }
    return 0;
}

int cmd_assimilate(const ExperimentConfig& c) {
    const Inputs in = prepare(c, false);
    const std::vector<SweepRun> runs = expand_sweep(c);
    std::atomic<std::size_t> next{0};
    std::atomic<int> status{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            const SweepRun& run = runs[i];
            try {
                fs::create_directories(run.dir);
                ExperimentConfig rc = c;
                rc.k = {run.k};
                rc.sigma = {run.sigma};
                rc.out = run.dir.string();
                write_run_manifest(run.dir, "assimilate", rc);
                const AssimilationProblem problem = make_problem(observations_for(in, run.k, run.sigma), in.params);
                MonitorOptions monitor;
                if (in.truth) {
                    const SpectralField truth = *in.truth;
                    monitor = {[truth](const SpectralField& e) { return relative_l1(e, truth); }, c.monitor_every};
                }
                const RunResult r = run_method(c, problem, run.sigma, monitor);
                write_trace_csv(run.dir / "trace.csv", r.trace);
                write_vorticity(run.dir / "estimate.kda", r.estimate, 0.0);
                write_spectrum_csv(run.dir / "spectrum.csv", energy_spectrum(velocity_from_vorticity(r.estimate)));
                std::string msg = run.dir.string() + ": " + method_name(c.method) + " " + r.status;
                if (in.truth) msg += ", rel L1 " + format_double(relative_l1(r.estimate, *in.truth));
                log(msg);
                if (r.aborted) status = kExitNumerical;
            } catch (const NumericalError& e) {
                log(run.dir.string() + ": numerical failure: " + e.what());
                status = kExitNumerical;
            }
        }
    };
    const int workers = std::max(1, std::min<int>(c.threads, static_cast<int>(runs.size())));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return status;
}

int cmd_rollout(const ExperimentConfig& c) {
    if (c.estimate_file.empty()) throw ConfigError("estimate_file: required by rollout");
    const Inputs in = prepare(c, true);
    const SpectralField estimate = read_vorticity(c.estimate_file);
    if (estimate.grid.n() != c.n) throw ConfigError("estimate_file: grid does not match n");
    const double T = c.rollout_horizon;
    const RolloutResult r = rollout_test(estimate, *in.truth, in.params, T, {0.0, T / 2, T});
    const fs::path out(c.out);
    fs::create_directories(out);
    write_rollout_csv(out / "rollout.csv", r);
    for (const auto& s : r.snapshots) {
        char tag[32];
        std::snprintf(tag, sizeof tag, "%g", s.time);
        write_vorticity(out / (std::string("rollout_estimate_t") + tag + ".kda"), s.estimate, s.time);
        write_vorticity(out / (std::string("rollout_truth_t") + tag + ".kda"), s.truth, s.time);
    }
    write_run_manifest(out, "rollout", c);
    if (r.estimate_blew_up) log("estimate blew up during the rollout");
    return 0;
}

int cmd_spectrum(const ExperimentConfig& c) {
    c.validate();
    const SpectralField field = !c.estimate_file.empty() ? read_vorticity(c.estimate_file)
                                                         : load_or_generate_truth(c, c.resolved_solver());
    const fs::path out(c.out);
    fs::create_directories(out);
    const SpectrumReport s = energy_spectrum(velocity_from_vorticity(field));
    write_spectrum_csv(out / "spectrum.csv", s);
    write_run_manifest(out, "spectrum", c);
    log("total energy " + format_double(s.total));
    return 0;
}

int cmd_converge(const ExperimentConfig& c) {
    const Inputs in = prepare(c, true);
    const fs::path out(c.out);
    fs::create_directories(out);
    SolverParams base = c.solver;
    std::vector<int> sizes;
    for (int m = 16; m <= c.n; m *= 2) sizes.push_back(m);
    const auto spatial = spatial_convergence(resample(*in.truth, Grid(2 * c.n)), base, 0.1, sizes, 1e-4);
    write_convergence_csv(out / "spatial_convergence.csv", spatial);
    const auto temporal =
        temporal_convergence(*in.truth, base, 0.08, {1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3}, 2.5e-5);
    write_convergence_csv(out / "temporal_convergence.csv", temporal);
    write_run_manifest(out, "converge", c);
    log("temporal log-log slope " + format_double(loglog_slope(temporal)));
    return 0;
}

// Quick solver and adjoint checks. `inject_fault` flips the adjoint sign to
// confirm that the report catches it.
int cmd_verify(bool inject_fault) {
    struct Check {
        std::string name;
        double value;
        double limit;
        bool pass;
    };
    std::vector<Check> checks;

    {
        const Grid g(64);
        SolverParams p;
        p.forcing_amplitude = 0.0;
        p.drag = 0.0;
        p.dt = 1e-2;
        RealField w(g), exact(g);
        const double decay = std::exp(-2.0 * p.nu);
        for (int ix = 0; ix < g.n(); ++ix) {
            for (int iy = 0; iy < g.n(); ++iy) {
                const double v = 2.0 * std::sin(g.coordinate(ix)) * std::sin(g.coordinate(iy));
                w.values[static_cast<std::size_t>(ix) * g.n() + iy] = v;
                exact.values[static_cast<std::size_t>(ix) * g.n() + iy] = decay * v;
            }
        }
        const RealField got = to_physical(integrate(to_spectral(w), 0.0, 1.0, p, {1.0}).states.back());
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            num = std::max(num, std::abs(got.values[i] - exact.values[i]));
            den = std::max(den, std::abs(exact.values[i]));
        }
        checks.push_back({"taylor_green_rel_linf", num / den, 1e-6, num / den <= 1e-6});
    }

    const Grid g(32);
    SolverParams p;
    p.dt = default_dt(g, p);
    const SpectralField truth = random_initial_condition(3, g, p, 1.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    auto random_field = [&] {
        RealField r(g);
        for (auto& v : r.values) v = normal(rng);
        return drop_nyquist(to_spectral(r));
    };

    {
        // <step_vjp(x, dy), dx> against a central difference of <dy, step(x)>.
        const SpectralField dx = random_field(), dy = random_field();
        SpectralField lhs_vec = step_vjp(truth, dy, p);
        if (inject_fault) lhs_vec *= -1.0;
        const double lhs = spectral_dot(lhs_vec, dx);
        const double h = 1e-4;
        SpectralField sx = dx;
        sx *= h;
        const double rhs = (spectral_dot(dy, step(truth + sx, p)) - spectral_dot(dy, step(truth - sx, p))) / (2 * h);
        const double rel = std::abs(lhs - rhs) / std::abs(rhs);
        checks.push_back({"adjoint_dot_product", rel, 1e-6, rel <= 1e-6});
    }

    {
        const std::vector<double> times{0.0, 5 * p.dt, 10 * p.dt};
        const AssimilationProblem problem = make_problem(generate_observations(truth, 2, 0.0, 1, p, times), p);
        const SpectralField delta = random_field();
        CheckpointStore uniform, full(CheckpointPolicy::Full);
        CostGradient a = cost_vanilla_gradient(delta, problem, uniform);
        const CostGradient b = cost_vanilla_gradient(delta, problem, full);
        if (inject_fault) a.gradient *= -1.0;
        checks.push_back({"checkpoint_bit_identity", a.gradient.coeffs == b.gradient.coeffs ? 0.0 : 1.0, 0.0,
                          a.gradient.coeffs == b.gradient.coeffs});
        double worst = 0.0;
        for (int d = 0; d < 5; ++d) {
            const SpectralField dir = random_field();
            const double analytic = spectral_dot(a.gradient, dir);
            double best = 1e300;
            for (double eps : {1e-3, 1e-4, 1e-5}) {
                SpectralField s = dir;
                s *= eps;
                const double fd = (cost_vanilla(delta + s, problem) - cost_vanilla(delta - s, problem)) / (2 * eps);
                best = std::min(best, std::abs(fd - analytic) / std::abs(analytic));
            }
            worst = std::max(worst, best);
        }
        checks.push_back({"gradient_vs_fd", worst, 1e-5, worst <= 1e-5});
    }

    {
        SolverParams q;
        const auto rows = temporal_convergence(truth, q, 0.08, {2e-3, 1e-3, 5e-4, 2.5e-4}, 3.125e-5);
        const double slope = loglog_slope(rows);
        checks.push_back({"temporal_order", slope, 1.8, slope >= 1.8 && slope <= 4.5});
        // Low-mode start so that both coarse grids resolve the initial state.
        const SpectralField smooth = resample(resample(truth, Grid(8)), g);
        const auto spatial = spatial_convergence(smooth, q, 0.05, {8, 16}, 1e-3);
        const bool dec = spatial[1].error < spatial[0].error;
        checks.push_back({"spatial_error_decreases", spatial[1].error, spatial[0].error, dec});
    }

    bool all = true;
    for (const Check& c : checks) {
        std::printf("%-26s %-4s value=%.3e limit=%.3e\n", c.name.c_str(), c.pass ? "PASS" : "FAIL", c.value, c.limit);
        all = all && c.pass;
    }
    return all ? 0 : kExitVerifyFailed;
}

int dispatch(const std::string& command, const ExperimentConfig& c, bool inject_fault);

int cmd_replay(const std::string& manifest) {
    auto kv = read_key_values(manifest);
    const auto it = kv.find("command");
    if (it == kv.end()) throw ConfigError("manifest: missing 'command' entry");
    const std::string command = it->second;
    kv.erase(it);
    if (command == "replay" || command == "verify") throw ConfigError("manifest: command '" + command + "' cannot be replayed");
    return dispatch(command, ExperimentConfig::from_key_values(kv), false);
}

int dispatch(const std::string& command, const ExperimentConfig& c, bool inject_fault) {
    if (command == "simulate") return cmd_simulate(c);
    if (command == "observe") return cmd_observe(c);
    if (command == "assimilate") return cmd_assimilate(c);
    if (command == "rollout") return cmd_rollout(c);
    if (command == "spectrum") return cmd_spectrum(c);
    if (command == "converge") return cmd_converge(c);
    if (command == "verify") return cmd_verify(inject_fault);
    throw ConfigError("unknown command '" + command + "'");
}

}  // namespace

int main(int argc, char** argv) {
    tune_allocator();
    CLI::App app{"Variational data assimilation for 2D Kolmogorov flow"};
    app.require_subcommand(1);

    std::string config_file;
    std::map<std::string, std::string> flags;
    std::vector<std::string> sets;
    bool inject_fault = false;
    std::string manifest;

    const char* descriptions[][2] = {
        {"simulate", "spin up a truth state and write its observation-window snapshots"},
        {"observe", "write sparse, noisy observation files"},
        {"assimilate", "estimate the initial state with the selected method"},
        {"rollout", "forecast an estimate and the truth and record the error"},
        {"spectrum", "energy spectrum of an estimate (or of the truth)"},
        {"converge", "spatial and temporal convergence study"},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& d : descriptions) {
        CLI::App* sub = app.add_subcommand(d[0], d[1]);
        sub->add_option("-c,--config", config_file, "key=value config file");
        sub->add_option("--set", sets, "override as key=value (repeatable)");
        for (const std::string& key : ExperimentConfig::keys()) {
            sub->add_option_function<std::string>("--" + key, [&flags, key](const std::string& v) { flags[key] = v; },
                                                  "config key '" + key + "'");
        }
        subs[d[0]] = sub;
    }
    CLI::App* verify = app.add_subcommand("verify", "solver and adjoint self-checks; nonzero exit on failure");
    verify->add_flag("--inject-adjoint-fault", inject_fault, "flip the adjoint sign (the report must fail)");
    CLI::App* replay = app.add_subcommand("replay", "rerun the command recorded in a manifest");
    replay->add_option("manifest", manifest, "manifest.txt of an earlier run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (verify->parsed()) return cmd_verify(inject_fault);
        if (replay->parsed()) return cmd_replay(manifest);
        std::string command;
        for (const auto& [name, sub] : subs) {
            if (sub->parsed()) command = name;
        }
        std::map<std::string, std::string> kv;
        if (!config_file.empty()) kv = read_key_values(config_file);
        for (const std::string& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
            kv[s.substr(0, eq)] = s.substr(eq + 1);
        }
        for (const auto& [k, v] : flags) kv[k] = v;
        const ExperimentConfig c = ExperimentConfig::from_key_values(kv);
        c.validate();
        return dispatch(command, c, false);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
