#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "kolmo/solver.hpp"

namespace kolmo {

/// Observed grid indices {0, k, 2k, ...} < n along each axis.
std::vector<int> observation_indices(int n, int k);

/// Both velocity components on the observation lattice, m x m each,
/// x index first.
struct SparseSamples {
    int n = 0;
    int k = 1;
    std::vector<double> u;
    std::vector<double> v;

    int m() const { return static_cast<int>(observation_indices(n, k).size()); }
};

SparseSamples subsample(const VelocityField& vel, int k);

enum class NoiseMode {
    /// A fresh realization at every time (i.i.d. over all observations).
    PerTime,
    /// One realization per observed component, reused at every time.
    TimeIndependent,
};

/// Adds N(0, (sigma * scale)^2) noise to every sample.
void add_noise(std::vector<SparseSamples>& samples, double sigma, double scale, std::uint64_t seed,
               NoiseMode mode = NoiseMode::PerTime);
SparseSamples add_noise(const SparseSamples& samples, double sigma, double scale, std::uint64_t seed);

/// Periodic bicubic (Catmull-Rom / cubic Hermite) interpolation of the
/// lattice samples onto the full n x n grid. Exact at the observed nodes.
/// Requires at least 4 samples per axis.
VelocityField bicubic_upsample(const SparseSamples& samples);
std::vector<double> bicubic_upsample(const std::vector<double>& values, int n, int k);

struct ObservationSet {
    int n = 0;
    int k = 1;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    /// Absolute noise std divided by sigma (max speed of the true t = 0 field).
    double noise_scale = 0.0;
    std::vector<double> times;
    std::vector<SparseSamples> samples;

    Grid grid() const { return Grid(n); }
    std::size_t count() const { return times.size(); }
};

/// Observation times {0, interval, ..., window}.
std::vector<double> observation_times(double window = 0.5, double interval = 0.05);

/// Integrates the truth over the window, records velocity snapshots,
/// subsamples with stride k and adds noise with std sigma * max|u(t=0)|.
ObservationSet generate_observations(const SpectralField& omega0_true, int k, double sigma, std::uint64_t seed,
                                     const SolverParams& params, const std::vector<double>& times = observation_times(),
                                     NoiseMode mode = NoiseMode::PerTime);

// Observation file ("KOBS"): magic | n u32 | k u32 | sigma f64 | seed u64 |
// n_times u32, then per time: time f64, u (m*m f64), v (m*m f64).
void write_observations(const std::filesystem::path& path, const ObservationSet& obs);
ObservationSet read_observations(const std::filesystem::path& path);

}  // namespace kolmo
