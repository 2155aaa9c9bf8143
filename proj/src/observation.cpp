#include "kolmo/observation.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "kolmo/binary_io.hpp"
#include "kolmo/errors.hpp"
#include "kolmo/spectral_ops.hpp"

namespace kolmo {

std::vector<int> observation_indices(int n, int k) {
    if (k < 1) throw ConfigError("sparsity stride k must be >= 1");
    if (k > n) throw ConfigError("sparsity stride k exceeds grid size");
    std::vector<int> idx;
    for (int i = 0; i < n; i += k) idx.push_back(i);
    return idx;
}

SparseSamples subsample(const VelocityField& vel, int k) {
    const int n = vel.grid.n();
    const auto idx = observation_indices(n, k);
    SparseSamples s{n, k, {}, {}};
    s.u.reserve(idx.size() * idx.size());
    s.v.reserve(idx.size() * idx.size());
    for (int ix : idx) {
        for (int iy : idx) {
            const std::size_t p = static_cast<std::size_t>(ix) * n + iy;
            s.u.push_back(vel.ux[p]);
            s.v.push_back(vel.uy[p]);
        }
    }
    return s;
}

void add_noise(std::vector<SparseSamples>& samples, double sigma, double scale, std::uint64_t seed, NoiseMode mode) {
    if (sigma < 0.0) throw ConfigError("noise level sigma must be non-negative");
    if (sigma == 0.0 || samples.empty()) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma * scale);
    const std::size_t count = samples.front().u.size();
    std::vector<double> eu(count), ev(count);
    auto draw = [&] {
        for (auto& e : eu) e = normal(rng);
        for (auto& e : ev) e = normal(rng);
    };
    draw();
    for (std::size_t t = 0; t < samples.size(); ++t) {
        if (mode == NoiseMode::PerTime && t > 0) draw();
        for (std::size_t i = 0; i < count; ++i) {
            samples[t].u[i] += eu[i];
            samples[t].v[i] += ev[i];
        }
    }
}

SparseSamples add_noise(const SparseSamples& samples, double sigma, double scale, std::uint64_t seed) {
    std::vector<SparseSamples> one{samples};
    add_noise(one, sigma, scale, seed);
    return one.front();
}

namespace {

// Periodic cubic Hermite interpolation with centred-difference tangents
// through nodes x_j (period n) onto the integer points 0..n-1.
std::vector<double> hermite_periodic(const std::vector<int>& nodes, const double* f, std::ptrdiff_t stride, int n) {
    const int m = static_cast<int>(nodes.size());
    auto wrap = [m](int j) { return ((j % m) + m) % m; };
    auto x = [&](int j) { return nodes[static_cast<std::size_t>(wrap(j))] + n * ((j - wrap(j)) / m); };
    auto val = [&](int j) { return f[static_cast<std::ptrdiff_t>(wrap(j)) * stride]; };
    auto tangent = [&](int j) { return (val(j + 1) - val(j - 1)) / static_cast<double>(x(j + 1) - x(j - 1)); };
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int j = 0; j < m; ++j) {
        const double x0 = x(j);
        const double h = x(j + 1) - x0;
        const double f0 = val(j), f1 = val(j + 1), d0 = tangent(j), d1 = tangent(j + 1);
        for (int i = static_cast<int>(x0); i < x0 + h; ++i) {
            const double t = (i - x0) / h;
            const double t2 = t * t, t3 = t2 * t;
            const double v = (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 +
                             (t3 - t2) * h * d1;
            out[static_cast<std::size_t>(i % n)] = v;
        }
    }
    return out;
}

}  // namespace

std::vector<double> bicubic_upsample(const std::vector<double>& values, int n, int k) {
    const auto idx = observation_indices(n, k);
    const int m = static_cast<int>(idx.size());
    if (m < 4) throw ConfigError("bicubic interpolation needs at least 4 samples per axis");
    if (values.size() != static_cast<std::size_t>(m) * m) throw std::invalid_argument("sample count mismatch");
    // Along y for each observed x row, then along x for every y column.
    std::vector<double> rows(static_cast<std::size_t>(m) * n);
    for (int a = 0; a < m; ++a) {
        const auto line = hermite_periodic(idx, values.data() + static_cast<std::ptrdiff_t>(a) * m, 1, n);
        std::copy(line.begin(), line.end(), rows.begin() + static_cast<std::ptrdiff_t>(a) * n);
    }
    std::vector<double> out(static_cast<std::size_t>(n) * n);
    for (int iy = 0; iy < n; ++iy) {
        const auto line = hermite_periodic(idx, rows.data() + iy, n, n);
        for (int ix = 0; ix < n; ++ix) out[static_cast<std::size_t>(ix) * n + iy] = line[static_cast<std::size_t>(ix)];
    }
    return out;
}

VelocityField bicubic_upsample(const SparseSamples& samples) {
    VelocityField vel{Grid(samples.n)};
    vel.ux = bicubic_upsample(samples.u, samples.n, samples.k);
    vel.uy = bicubic_upsample(samples.v, samples.n, samples.k);
    return vel;
}

std::vector<double> observation_times(double window, double interval) {
    const auto count = static_cast<int>(std::llround(window / interval));
    std::vector<double> t;
    for (int i = 0; i <= count; ++i) t.push_back(i * interval);
    return t;
}

ObservationSet generate_observations(const SpectralField& omega0_true, int k, double sigma, std::uint64_t seed,
                                     const SolverParams& params, const std::vector<double>& times, NoiseMode mode) {
    if (times.empty()) throw ConfigError("no observation times");
    const Grid& g = omega0_true.grid;
    observation_indices(g.n(), k);
    const Trajectory traj = integrate(omega0_true, times.front(), times.back(), params, times);
    ObservationSet obs;
    obs.n = g.n();
    obs.k = k;
    obs.sigma = sigma;
    obs.seed = seed;
    obs.times = traj.times;
    for (const auto& state : traj.states) obs.samples.push_back(subsample(velocity_from_vorticity(state), k));
    obs.noise_scale = velocity_from_vorticity(traj.states.front()).max_speed();
    add_noise(obs.samples, sigma, obs.noise_scale, seed, mode);
    return obs;
}

void write_observations(const std::filesystem::path& path, const ObservationSet& obs) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    binary::write_magic(os, "KOBS");
    binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(obs.n));
    binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(obs.k));
    binary::write_le<double>(os, obs.sigma);
    binary::write_le<std::uint64_t>(os, obs.seed);
    binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(obs.times.size()));
    for (std::size_t t = 0; t < obs.times.size(); ++t) {
        binary::write_le<double>(os, obs.times[t]);
        for (double v : obs.samples[t].u) binary::write_le<double>(os, v);
        for (double v : obs.samples[t].v) binary::write_le<double>(os, v);
    }
}

ObservationSet read_observations(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    binary::expect_magic(is, "KOBS");
    ObservationSet obs;
    obs.n = static_cast<int>(binary::read_le<std::uint32_t>(is));
    obs.k = static_cast<int>(binary::read_le<std::uint32_t>(is));
    obs.sigma = binary::read_le<double>(is);
    obs.seed = binary::read_le<std::uint64_t>(is);
    const auto n_times = binary::read_le<std::uint32_t>(is);
    const std::size_t m = observation_indices(obs.n, obs.k).size();
    for (std::uint32_t t = 0; t < n_times; ++t) {
        obs.times.push_back(binary::read_le<double>(is));
        SparseSamples s{obs.n, obs.k, std::vector<double>(m * m), std::vector<double>(m * m)};
        for (auto& v : s.u) v = binary::read_le<double>(is);
        for (auto& v : s.v) v = binary::read_le<double>(is);
        obs.samples.push_back(std::move(s));
    }
    return obs;
}

}  // namespace kolmo
