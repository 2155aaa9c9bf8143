#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "kolmo/adamw.hpp"
#include "kolmo/adjoint.hpp"
#include "kolmo/lbfgs.hpp"
#include "kolmo/observation.hpp"
#include "kolmo/spinn.hpp"

namespace kolmo {

/// Everything an estimator may see: observations, the forward model and the
/// first guess. Truth is deliberately absent.
struct AssimilationProblem {
    ObservationSet observations;
    SolverParams params;
    /// First guess of the initial vorticity; increments are added to it.
    SpectralField base;

    Grid grid() const { return base.grid; }
    double window() const { return observations.times.back() - observations.times.front(); }
};

/// Vorticity of the bicubic interpolant of the t = 0 observations.
SpectralField interp_estimate(const ObservationSet& obs);
AssimilationProblem make_problem(ObservationSet obs, const SolverParams& params);

/// Observation misfit sum_k ||H(u_k) - y_k||^2 as a trajectory cost over the
/// solver steps that land on the observation times.
TrajectoryCost observation_misfit(const AssimilationProblem& problem);

/// J_Vanilla(base + delta). Solver blow-up yields +inf.
double cost_vanilla(const SpectralField& delta, const AssimilationProblem& problem);
/// Value and spectral gradient with respect to delta (identical to the gradient
/// with respect to the initial state).
CostGradient cost_vanilla_gradient(const SpectralField& delta, const AssimilationProblem& problem,
                                   CheckpointStore& checkpoints);

/// Diagnostic hook evaluated on the current estimate; never part of the loss.
using Monitor = std::function<double(const SpectralField& estimate)>;

struct TraceRow {
    std::size_t iter = 0;
    double cost = 0.0;
    double grad_norm = 0.0;
    /// NaN when no monitor ran at this iteration.
    double rel_l1 = 0.0;
    double wall_ms = 0.0;
};

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

struct RunResult {
    SpectralField estimate;
    std::vector<TraceRow> trace;
    bool aborted = false;
    std::string status = "ok";
};

struct MonitorOptions {
    Monitor monitor;
    std::size_t every = 1;
};

/// Variables L-BFGS works on. Velocity optimizes both components of the
/// increment delta u_0 on the grid (its curl enters the solver); Vorticity
/// optimizes the grid values of the vorticity increment directly.
enum class VanillaControl { Velocity, Vorticity };

struct VanillaConfig {
    std::size_t steps = 1000;
    VanillaControl control = VanillaControl::Velocity;
    LbfgsOptions lbfgs{};
    CheckpointPolicy checkpoints = CheckpointPolicy::Uniform;
};

RunResult run_vanilla(const AssimilationProblem& problem, const VanillaConfig& config = {},
                      const MonitorOptions& monitor = {});

struct NeuralConfig {
    std::size_t steps = 1000;
    SpinnShape shape = spatial_shape();
    /// decay_steps is overridden by `steps`.
    AdamWConfig adam{1e-2, 1e-4, 0.9, 0.999, 1e-8, 1000};
    std::uint64_t seed = 0;
};

/// Increment network for Neural-4DVAR: random weights, last axis output zeroed.
SpinnModel make_increment_model(const NeuralConfig& config);
/// Vorticity increment produced by a 2-channel spatial SPINN on the grid.
SpectralField neural_increment(const SpinnModel& model, const Grid& grid);
/// J_Neural(theta) = J_Vanilla(delta(theta)) and, if requested, its parameter gradient.
double cost_neural(const SpinnModel& model, const AssimilationProblem& problem, std::vector<double>* grad,
                   CheckpointStore* checkpoints = nullptr);

RunResult run_neural(const AssimilationProblem& problem, const NeuralConfig& config = {},
                     const MonitorOptions& monitor = {});

struct PinnLossConfig {
    double lambda_data = 5e3;
    double lambda_div = 5e3;
    /// Weight of the mean squared vorticity residual (0 gives J_Regression).
    double lambda_physics = 1.0;
    int n_t = 128;
    int n_x = 128;
    int n_y = 128;

    /// 1 / sigma^2, or 5e3 without noise.
    static double data_weight(double sigma);
    static PinnLossConfig for_sigma(double sigma);
    void validate() const;
};

/// Weighted contributions; total is their sum.
struct PinnTerms {
    double physics = 0.0;
    double divergence = 0.0;
    double data = 0.0;
    double total = 0.0;
};

struct PinnEvaluation {
    PinnTerms terms;
    std::vector<double> gradient;
};

/// Uniform collocation coordinates: t in (0, window), x and y in [0, 2 pi).
std::vector<std::vector<double>> sample_collocation(const PinnLossConfig& config, double window,
                                                    std::mt19937_64& rng);
/// J_PINN on explicit collocation coordinates {t, x, y}.
PinnEvaluation cost_pinn_at(const SpinnModel& model, const PinnLossConfig& config, const AssimilationProblem& problem,
                            const std::vector<std::vector<double>>& collocation, bool with_gradient = true);
/// J_PINN with freshly sampled collocation points.
PinnEvaluation cost_pinn(const SpinnModel& model, const PinnLossConfig& config, const AssimilationProblem& problem,
                         std::mt19937_64& rng, bool with_gradient = true);
/// Data misfit only (J_Regression), weighted by lambda_data.
PinnEvaluation cost_regression(const SpinnModel& model, const AssimilationProblem& problem, double lambda_data,
                               bool with_gradient = true);

/// Vorticity of a space-time velocity network at t = 0 (exact curl).
SpectralField pinn_estimate(const SpinnModel& model, const Grid& grid);

struct PinnConfig {
    std::size_t steps = 10000;
    /// Empty feature_scale means the default space-time shape for the window.
    SpinnShape shape{3, 128, 64, 3, 5, 2, {}};
    AdamWConfig adam{1e-3, 1e-4, 0.9, 0.999, 1e-8, 10000};
    PinnLossConfig loss{};
    std::uint64_t seed = 0;
    /// Abort once the cost exceeds this multiple of its initial value.
    double divergence_factor = 1e3;
};

RunResult run_pinn(const AssimilationProblem& problem, const PinnConfig& config = {},
                   const MonitorOptions& monitor = {});
/// Same trainer with the physics and divergence terms removed.
RunResult run_regression(const AssimilationProblem& problem, const PinnConfig& config = {},
                         const MonitorOptions& monitor = {});

struct HybridConfig {
    PinnConfig pinn{};
    NeuralConfig neural{500, spatial_shape(), {1e-2, 1e-4, 0.9, 0.999, 1e-8, 500}, 0};
};

/// PINN stage, then Neural-4DVAR around the PINN estimate with a fresh increment network.
/// `pinn_stage` optionally receives the first-stage result untouched.
RunResult run_hybrid(const AssimilationProblem& problem, const HybridConfig& config = {},
                     const MonitorOptions& monitor = {}, RunResult* pinn_stage = nullptr);

}  // namespace kolmo
