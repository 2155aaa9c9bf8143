#include "kolmo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "kolmo/errors.hpp"
#include "kolmo/fft.hpp"
#include "kolmo/spectral_ops.hpp"

namespace kolmo {

double relative_l1(const RealField& estimate, const RealField& truth) {
    if (!(estimate.grid == truth.grid)) throw ConfigError("relative_l1: grids differ");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.values.size(); ++i) {
        num += std::abs(estimate.values[i] - truth.values[i]);
        den += std::abs(truth.values[i]);
    }
    if (den == 0.0) throw ConfigError("relative_l1: truth is identically zero");
    return num / den;
}

double relative_l1(const SpectralField& estimate, const SpectralField& truth) {
    return relative_l1(to_physical(estimate), to_physical(truth));
}

SpectrumReport energy_spectrum(const VelocityField& vel) {
    const Grid& g = vel.grid;
    const int n = g.n();
    const int shells = static_cast<int>(std::lround(std::sqrt(2.0) * n / 2.0)) + 1;
    SpectrumReport r;
    r.shells.resize(static_cast<std::size_t>(shells));
    for (int s = 0; s < shells; ++s) r.shells[static_cast<std::size_t>(s)] = s;
    r.energy.assign(static_cast<std::size_t>(shells), 0.0);

    std::vector<Complex> ux(g.spectral_size()), uy(g.spectral_size());
    forward_fft(g, vel.ux.data(), ux.data());
    forward_fft(g, vel.uy.data(), uy.data());
    // Parseval for the unnormalized forward transform:
    // mean |u|^2 = (1/n^4) sum over the full spectrum of |u_hat|^2.
    const double norm = 1.0 / (static_cast<double>(g.size()) * static_cast<double>(g.size()));
    for (int i = 0; i < n; ++i) {
        const int kx = g.wavenumber(i);
        for (int j = 0; j < g.half(); ++j) {
            const double weight = (j == 0 || j == n / 2) ? 1.0 : 2.0;
            const std::size_t p = static_cast<std::size_t>(i) * g.half() + j;
            const double e = 0.5 * weight * norm * (std::norm(ux[p]) + std::norm(uy[p]));
            const auto shell = static_cast<std::size_t>(std::floor(std::hypot(kx, j) + 0.5));
            r.energy[shell] += e;
        }
    }
    for (double e : r.energy) r.total += e;
    return r;
}

double band_energy(const SpectrumReport& spectrum, double kappa_min) {
    double s = 0.0;
    for (std::size_t i = 0; i < spectrum.shells.size(); ++i) {
        if (spectrum.shells[i] > kappa_min) s += spectrum.energy[i];
    }
    return s;
}

RolloutResult rollout_test(const SpectralField& estimate, const SpectralField& truth, const SolverParams& params,
                           double T, const std::vector<double>& snapshot_times, double interval) {
    if (!(estimate.grid == truth.grid)) throw ConfigError("rollout: grids differ");
    if (!(T >= 0.0) || !(interval > 0.0)) throw ConfigError("rollout: invalid horizon or interval");
    std::vector<double> marks;
    const auto count = static_cast<int>(std::llround(T / interval));
    for (int i = 0; i <= count; ++i) marks.push_back(std::min(T, i * interval));
    for (double t : snapshot_times) {
        if (t < 0.0 || t > T) throw ConfigError("rollout: snapshot time outside [0, T]");
        marks.push_back(t);
    }
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                marks.end());
    if (marks.back() < T) marks.push_back(T);

    std::vector<std::size_t> mark_steps;
    const auto steps = step_schedule(marks, params.dt, &mark_steps);
    RolloutResult r;
    SpectralField est = estimate, tru = truth;
    auto record = [&](double t) {
        r.times.push_back(t);
        const bool broken = r.estimate_blew_up || r.truth_blew_up;
        r.errors.push_back(broken ? std::numeric_limits<double>::infinity() : relative_l1(est, tru));
        for (double s : snapshot_times) {
            if (std::abs(s - t) < 1e-12 && !broken) r.snapshots.push_back({t, est, tru});
        }
    };
    std::size_t mark = 0;
    for (std::size_t s = 0; s <= steps.size(); ++s) {
        while (mark < marks.size() && mark_steps[mark] == s) record(marks[mark++]);
        if (s == steps.size()) break;
        if (!r.estimate_blew_up) {
            try {
                est = step(est, params, steps[s]);
            } catch (const NumericalError&) {
                r.estimate_blew_up = true;
            }
        }
        if (!r.truth_blew_up) {
            try {
                tru = step(tru, params, steps[s]);
            } catch (const NumericalError&) {
                r.truth_blew_up = true;
            }
        }
    }
    return r;
}

namespace {

SpectralField run_to(const SpectralField& omega0, SolverParams params, double T, double dt) {
    params.dt = dt;
    return integrate(omega0, 0.0, T, params, {T}).states.back();
}

}  // namespace

std::vector<ConvergenceRow> spatial_convergence(const SpectralField& omega0, const SolverParams& params, double T,
                                                const std::vector<int>& sizes, double dt) {
    const SpectralField reference = run_to(omega0, params, T, dt);
    std::vector<ConvergenceRow> rows;
    for (int n : sizes) {
        const Grid coarse(n);
        if (n > omega0.grid.n()) throw ConfigError("spatial convergence: size exceeds the reference grid");
        const SpectralField run = n == omega0.grid.n() ? reference : run_to(resample(omega0, coarse), params, T, dt);
        rows.push_back({coarse.dx(), relative_l1(run, resample(reference, coarse))});
    }
    return rows;
}

std::vector<ConvergenceRow> temporal_convergence(const SpectralField& omega0, const SolverParams& params, double T,
                                                 const std::vector<double>& dts, double reference_dt) {
    const SpectralField reference = run_to(omega0, params, T, reference_dt);
    std::vector<ConvergenceRow> rows;
    for (double dt : dts) {
        const SpectralField run = dt == reference_dt ? reference : run_to(omega0, params, T, dt);
        rows.push_back({dt, relative_l1(run, reference)});
    }
    return rows;
}

double loglog_slope(const std::vector<ConvergenceRow>& rows) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (const auto& r : rows) {
        if (!(r.error > 0.0) || !(r.h > 0.0)) continue;
        const double x = std::log(r.h), y = std::log(r.error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 2) throw std::invalid_argument("loglog_slope: need at least two positive rows");
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

void write_csv(const std::filesystem::path& path, const std::string& x_name, const std::string& y_name,
               const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("write_csv: column lengths differ");
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.precision(17);
    os << x_name << ',' << y_name << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) os << x[i] << ',' << y[i] << '\n';
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumReport& spectrum) {
    std::vector<double> k(spectrum.shells.begin(), spectrum.shells.end());
    write_csv(path, "kappa", "energy", k, spectrum.energy);
}

void write_rollout_csv(const std::filesystem::path& path, const RolloutResult& rollout) {
    write_csv(path, "t", "rel_l1", rollout.times, rollout.errors);
}

void write_convergence_csv(const std::filesystem::path& path, const std::vector<ConvergenceRow>& rows) {
    std::vector<double> h, e;
    for (const auto& r : rows) {
        h.push_back(r.h);
        e.push_back(r.error);
    }
    write_csv(path, "h", "error", h, e);
}

}  // namespace kolmo
