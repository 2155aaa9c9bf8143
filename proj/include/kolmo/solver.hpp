#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "kolmo/fields.hpp"

namespace kolmo {

struct SolverParams {
    double nu = 1e-2;
    double drag = 0.1;
    /// Body force amplitude A in A sin(k_f y) x-hat; zero disables forcing.
    double forcing_amplitude = 1.0;
    int forcing_wavenumber = 4;
    double dt = 1e-3;
    double cfl_safety = 0.5;
    double v_max = 7.0;
    bool dealias = true;
    /// Check dt against cfl_max_dt before stepping.
    bool enforce_cfl = false;
    /// Disables the advection term (linear dynamics only).
    bool nonlinear = true;

    void validate(const Grid& grid) const;
};

/// C dx / v_max.
double cfl_max_dt(const Grid& grid, const SolverParams& params);
/// Largest dt <= cfl_max_dt that divides `interval` into an integer number of steps.
double default_dt(const Grid& grid, const SolverParams& params, double interval = 0.05);

/// Vorticity of the body force: -A k_f cos(k_f y).
SpectralField forcing_vorticity(const Grid& grid, const SolverParams& params);

/// Explicitly treated terms -(u.grad)omega - drag*omega + forcing.
SpectralField explicit_rhs(const SpectralField& omega, const SolverParams& params);

/// Low-storage RK(5,4) coefficients (Carpenter and Kennedy), in the form used
/// by the IMEX step below.
struct RkCoefficients {
    static constexpr int stages = 5;
    std::array<double, stages + 1> alpha;
    std::array<double, stages> beta;
    std::array<double, stages> gamma;
};
const RkCoefficients& carpenter_kennedy();

/// Forward quantities of one step kept for the adjoint sweep.
struct StepTape {
    struct Stage {
        SpectralField omega;                 // stage input u_s
        std::vector<double> u, v, wx, wy;    // physical advection factors
        explicit Stage(const Grid& g) : omega(g) {}
    };
    std::vector<Stage> stages;
    double dt = 0.0;
};

/// One IMEX step of length dt (params.dt when omitted). Per stage s:
///   h   <- F(u) + beta_s h
///   mu  =  dt (alpha_{s+1} - alpha_s) / 2
///   u   <- (1 - mu L)^{-1} (u + gamma_s dt h + mu L u)
/// with F = explicit_rhs and L = nu * laplacian, a diagonal Crank-Nicolson
/// solve in Fourier space. Throws NumericalError on a non-finite result.
SpectralField step(const SpectralField& omega, const SolverParams& params,
                   std::optional<double> dt = std::nullopt, StepTape* tape = nullptr);

/// Number of step() invocations in this process (instrumentation).
std::uint64_t step_invocations();

/// Step sizes landing exactly on every time in `marks` (sorted, first = t0).
/// Each interval is split into ceil(len/dt) steps; the last one is shortened.
/// `mark_steps` receives the step index at which each mark is reached.
std::vector<double> step_schedule(const std::vector<double>& marks, double dt,
                                  std::vector<std::size_t>* mark_steps = nullptr);

struct Trajectory {
    std::vector<double> times;
    std::vector<SpectralField> states;
};

/// Integrates from t0 to t1 recording states at `record_at` (within [t0, t1]).
/// Steps are shortened so that record times and t1 are hit exactly.
Trajectory integrate(const SpectralField& omega0, double t0, double t1, const SolverParams& params,
                     const std::vector<double>& record_at);

/// Divergence-free random velocity, band-filtered around `peak_wavenumber`,
/// rescaled to max speed `v_max`, returned as vorticity and then integrated
/// for `spinup` time units.
SpectralField random_initial_condition(std::uint64_t seed, const Grid& grid, const SolverParams& params,
                                       double spinup, double peak_wavenumber = 4.0, double v_max = 7.0);

}  // namespace kolmo
