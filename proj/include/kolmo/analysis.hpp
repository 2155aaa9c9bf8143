#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kolmo/solver.hpp"

namespace kolmo {

/// ||est - truth||_1 / ||truth||_1 over grid values.
double relative_l1(const RealField& estimate, const RealField& truth);
/// Same on the vorticity grid values of two spectra.
double relative_l1(const SpectralField& estimate, const SpectralField& truth);

/// Shell-summed kinetic energy. E(kappa) collects modes whose radius rounds
/// to kappa; shells run up to round(sqrt(2) n / 2) so that every mode is
/// counted once. Normalization: sum_kappa E = (1/2) mean |u|^2.
struct SpectrumReport {
    std::vector<int> shells;
    std::vector<double> energy;
    double total = 0.0;
};

SpectrumReport energy_spectrum(const VelocityField& vel);
/// Sum of E(kappa) over kappa > kappa_min.
double band_energy(const SpectrumReport& spectrum, double kappa_min);

struct RolloutSnapshot {
    double time = 0.0;
    SpectralField estimate;
    SpectralField truth;
};

struct RolloutResult {
    std::vector<double> times;
    /// relative_l1 at each time; +inf once the estimate has blown up.
    std::vector<double> errors;
    std::vector<RolloutSnapshot> snapshots;
    bool estimate_blew_up = false;
    bool truth_blew_up = false;
};

/// Integrates estimate and truth to T and reports the error at every multiple
/// of `interval` plus full states at `snapshot_times`.
RolloutResult rollout_test(const SpectralField& estimate, const SpectralField& truth, const SolverParams& params,
                           double T = 5.0, const std::vector<double>& snapshot_times = {0.0, 2.5, 5.0},
                           double interval = 0.05);

struct ConvergenceRow {
    /// Grid spacing or time step.
    double h = 0.0;
    double error = 0.0;
};

/// Runs `omega0` (given on the reference grid) truncated to every size in
/// `sizes` up to time T with step dt, and compares each final state with the
/// reference run restricted to the coarse modes.
std::vector<ConvergenceRow> spatial_convergence(const SpectralField& omega0, const SolverParams& params, double T,
                                                const std::vector<int>& sizes, double dt = 1e-4);
/// Runs `omega0` with every step in `dts` and compares with the run at `reference_dt`.
std::vector<ConvergenceRow> temporal_convergence(const SpectralField& omega0, const SolverParams& params, double T,
                                                 const std::vector<double>& dts, double reference_dt);
/// Least-squares slope of log(error) against log(h); rows with zero error are skipped.
double loglog_slope(const std::vector<ConvergenceRow>& rows);

/// Two-column CSV with a header row.
void write_csv(const std::filesystem::path& path, const std::string& x_name, const std::string& y_name,
               const std::vector<double>& x, const std::vector<double>& y);
void write_spectrum_csv(const std::filesystem::path& path, const SpectrumReport& spectrum);
void write_rollout_csv(const std::filesystem::path& path, const RolloutResult& rollout);
void write_convergence_csv(const std::filesystem::path& path, const std::vector<ConvergenceRow>& rows);

}  // namespace kolmo
