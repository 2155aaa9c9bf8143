#include "kolmo/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <string>

#include "kolmo/errors.hpp"
#include "kolmo/fft.hpp"
#include "kolmo/spectral_ops.hpp"

namespace kolmo {
namespace {

std::atomic<std::uint64_t> g_step_invocations{0};

struct AdvectionFactors {
    std::vector<double> u, v, wx, wy;
};

// Physical-space u, v, d_x omega, d_y omega for the advection product.
AdvectionFactors advection_factors(const SpectralField& omega, bool dealias) {
    const Grid& g = omega.grid;
    const auto& t = spectral_tables(g);
    SpectralField uh(g), vh(g), wxh(g), wyh(g);
    for (std::size_t p = 0; p < omega.coeffs.size(); ++p) {
        if (dealias && !t.keep[p]) continue;
        const Complex w = omega.coeffs[p];
        const Complex psi = t.inv_k2[p] * w;
        uh.coeffs[p] = times_i(t.dy[p], psi);
        vh.coeffs[p] = times_i(-t.dx[p], psi);
        wxh.coeffs[p] = times_i(t.dx[p], w);
        wyh.coeffs[p] = times_i(t.dy[p], w);
    }
    AdvectionFactors f;
    for (auto* v : {&f.u, &f.v, &f.wx, &f.wy}) v->resize(g.size());
    inverse_fft(g, uh.coeffs.data(), f.u.data());
    inverse_fft(g, vh.coeffs.data(), f.v.data());
    inverse_fft(g, wxh.coeffs.data(), f.wx.data());
    inverse_fft(g, wyh.coeffs.data(), f.wy.data());
    return f;
}

SpectralField rhs_from_factors(const SpectralField& omega, const AdvectionFactors* adv, const SolverParams& p,
                               const SpectralField& forcing) {
    const Grid& g = omega.grid;
    const auto& t = spectral_tables(g);
    SpectralField out(g);
    if (adv != nullptr) {
        std::vector<double> prod(g.size());
        for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = adv->u[i] * adv->wx[i] + adv->v[i] * adv->wy[i];
        forward_fft(g, prod.data(), out.coeffs.data());
        for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
            out.coeffs[i] = (p.dealias && !t.keep[i]) ? Complex(0.0) : -out.coeffs[i];
        }
    }
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
        out.coeffs[i] += -p.drag * omega.coeffs[i] + forcing.coeffs[i];
    }
    return out;
}

}  // namespace

void SolverParams::validate(const Grid& grid) const {
    if (!(nu > 0.0)) throw ConfigError("nu must be positive");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (drag < 0.0) throw ConfigError("drag must be non-negative");
    if (enforce_cfl && dt > cfl_max_dt(grid, *this) * (1.0 + 1e-12)) {
        throw ConfigError("dt exceeds CFL bound " + std::to_string(cfl_max_dt(grid, *this)));
    }
}

double cfl_max_dt(const Grid& grid, const SolverParams& params) {
    if (!(params.v_max > 0.0)) throw ConfigError("v_max must be positive");
    return params.cfl_safety * grid.dx() / params.v_max;
}

double default_dt(const Grid& grid, const SolverParams& params, double interval) {
    const double bound = cfl_max_dt(grid, params);
    const double steps = std::ceil(interval / bound - 1e-12);
    return interval / steps;
}

SpectralField forcing_vorticity(const Grid& grid, const SolverParams& params) {
    const int k = params.forcing_wavenumber;
    if (params.forcing_amplitude == 0.0) return SpectralField(grid);
    if (k > 0 && 2 * k < grid.n()) {
        // -A k cos(k y) has a single half-spectrum coefficient at (0, k).
        SpectralField f(grid);
        f.at(0, k) = -params.forcing_amplitude * k * 0.5 * static_cast<double>(grid.size());
        return f;
    }
    RealField f(grid);
    for (int ix = 0; ix < grid.n(); ++ix) {
        for (int iy = 0; iy < grid.n(); ++iy) {
            f(ix, iy) = -params.forcing_amplitude * k * std::cos(k * grid.coordinate(iy));
        }
    }
    return to_spectral(f);
}

SpectralField explicit_rhs(const SpectralField& omega, const SolverParams& params) {
    const SpectralField forcing = forcing_vorticity(omega.grid, params);
    if (!params.nonlinear) return rhs_from_factors(omega, nullptr, params, forcing);
    const AdvectionFactors adv = advection_factors(omega, params.dealias);
    return rhs_from_factors(omega, &adv, params, forcing);
}

const RkCoefficients& carpenter_kennedy() {
    static const RkCoefficients c{
        {0.0, 1432997174477.0 / 9575080441755.0, 2526269341429.0 / 6820363962896.0,
         2006345519317.0 / 3224310063776.0, 2802321613138.0 / 2924317926251.0, 1.0},
        {0.0, -567301805773.0 / 1357537059087.0, -2404267990393.0 / 2016746695238.0,
         -3550918686646.0 / 2091501179385.0, -1275806237668.0 / 842570457699.0},
        {1432997174477.0 / 9575080441755.0, 5161836677717.0 / 13612068292357.0,
         1720146321549.0 / 2090206949498.0, 3134564353537.0 / 4481467310338.0,
         2277821191437.0 / 14882151754819.0}};
    return c;
}

SpectralField step(const SpectralField& omega, const SolverParams& params, std::optional<double> dt_opt,
                   StepTape* tape) {
    g_step_invocations.fetch_add(1, std::memory_order_relaxed);
    const Grid& g = omega.grid;
    const double dt = dt_opt.value_or(params.dt);
    const auto& rk = carpenter_kennedy();
    const SpectralField forcing = forcing_vorticity(g, params);
    const auto& tables = spectral_tables(g);

    if (tape != nullptr) {
        tape->stages.clear();
        tape->dt = dt;
    }

    SpectralField u = omega;
    SpectralField h(g);
    for (int s = 0; s < RkCoefficients::stages; ++s) {
        SpectralField f(g);
        if (params.nonlinear) {
            AdvectionFactors adv = advection_factors(u, params.dealias);
            f = rhs_from_factors(u, &adv, params, forcing);
            if (tape != nullptr) {
                auto& st = tape->stages.emplace_back(g);
                st.omega = u;
                st.u = std::move(adv.u);
                st.v = std::move(adv.v);
                st.wx = std::move(adv.wx);
                st.wy = std::move(adv.wy);
            }
        } else {
            f = rhs_from_factors(u, nullptr, params, forcing);
            if (tape != nullptr) tape->stages.emplace_back(g).omega = u;
        }
        const double mu = 0.5 * dt * (rk.alpha[s + 1] - rk.alpha[s]);
        const double gdt = rk.gamma[s] * dt;
        for (std::size_t idx = 0; idx < u.coeffs.size(); ++idx) {
            const double lam = mu * params.nu * tables.k2[idx];
            h.coeffs[idx] = f.coeffs[idx] + rk.beta[s] * h.coeffs[idx];
            u.coeffs[idx] = (u.coeffs[idx] * (1.0 - lam) + gdt * h.coeffs[idx]) / (1.0 + lam);
        }
    }
    if (!all_finite(u)) throw NumericalError("non-finite state after solver step");
    return u;
}

std::uint64_t step_invocations() { return g_step_invocations.load(std::memory_order_relaxed); }

std::vector<double> step_schedule(const std::vector<double>& marks, double dt, std::vector<std::size_t>* mark_steps) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    std::vector<double> steps;
    if (mark_steps != nullptr) mark_steps->assign(marks.empty() ? 0 : 1, 0);
    for (std::size_t m = 1; m < marks.size(); ++m) {
        const double len = marks[m] - marks[m - 1];
        if (len < 0.0) throw ConfigError("step_schedule: marks must be sorted");
        if (len > 0.0) {
            const auto count = static_cast<std::size_t>(std::ceil(len / dt - 1e-9));
            const double rem = len - static_cast<double>(count - 1) * dt;
            if (std::abs(rem - dt) <= 1e-12 * std::max(1.0, len)) {
                steps.insert(steps.end(), count, dt);
            } else {
                steps.insert(steps.end(), count - 1, dt);
                steps.push_back(rem);
            }
        }
        if (mark_steps != nullptr) mark_steps->push_back(steps.size());
    }
    return steps;
}

Trajectory integrate(const SpectralField& omega0, double t0, double t1, const SolverParams& params,
                     const std::vector<double>& record_at) {
    if (t1 < t0) throw ConfigError("integrate: t1 must not precede t0");
    std::vector<double> rec = record_at;
    std::sort(rec.begin(), rec.end());
    for (double t : rec) {
        if (t < t0 || t > t1) throw ConfigError("integrate: record time outside [t0, t1]");
    }
    std::vector<double> marks{t0};
    for (double t : rec) {
        if (t > marks.back()) marks.push_back(t);
    }
    if (t1 > marks.back()) marks.push_back(t1);

    std::vector<std::size_t> mark_steps;
    const auto steps = step_schedule(marks, params.dt, &mark_steps);

    Trajectory traj;
    SpectralField state = omega0;
    std::size_t mark = 0;
    auto record_marks = [&](std::size_t step_index) {
        while (mark < marks.size() && mark_steps[mark] == step_index) {
            if (std::find(rec.begin(), rec.end(), marks[mark]) != rec.end()) {
                traj.times.push_back(marks[mark]);
                traj.states.push_back(state);
            }
            ++mark;
        }
    };
    record_marks(0);
    if (rec.empty() && t1 == t0) {
        traj.times.push_back(t0);
        traj.states.push_back(state);
    }
    for (std::size_t s = 0; s < steps.size(); ++s) {
        try {
            state = step(state, params, steps[s]);
        } catch (const NumericalError&) {
            throw NumericalError("solver blow-up at step " + std::to_string(s), s);
        }
        record_marks(s + 1);
    }
    return traj;
}

SpectralField random_initial_condition(std::uint64_t seed, const Grid& grid, const SolverParams& params,
                                       double spinup, double peak_wavenumber, double v_max) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    RealField noise_u(grid), noise_v(grid);
    for (auto& x : noise_u.values) x = normal(rng);
    for (auto& x : noise_v.values) x = normal(rng);
    SpectralField uh = to_spectral(noise_u);
    SpectralField vh = to_spectral(noise_v);

    // Amplitude filter k^2 exp(-(k/kp)^2) peaks at |k| = kp; the projection
    // removes the compressive part k (k.u)/|k|^2.
    for (int i = 0; i < grid.n(); ++i) {
        for (int j = 0; j < grid.half(); ++j) {
            const double kx = grid.wavenumber(i);
            const double ky = j;
            const double k2 = kx * kx + ky * ky;
            if (k2 == 0.0 || i == grid.n() / 2 || j == grid.n() / 2) {
                uh.at(i, j) = 0.0;
                vh.at(i, j) = 0.0;
                continue;
            }
            const double filt = k2 * std::exp(-k2 / (peak_wavenumber * peak_wavenumber));
            const Complex kdotu = kx * uh.at(i, j) + ky * vh.at(i, j);
            uh.at(i, j) = filt * (uh.at(i, j) - kx * kdotu / k2);
            vh.at(i, j) = filt * (vh.at(i, j) - ky * kdotu / k2);
        }
    }
    VelocityField vel(grid);
    inverse_fft(grid, uh.coeffs.data(), vel.ux.data());
    inverse_fft(grid, vh.coeffs.data(), vel.uy.data());
    const double scale = v_max / vel.max_speed();
    for (auto& x : vel.ux) x *= scale;
    for (auto& x : vel.uy) x *= scale;
    SpectralField omega = vorticity_from_velocity(vel);
    if (spinup > 0.0) {
        auto traj = integrate(omega, 0.0, spinup, params, {spinup});
        omega = traj.states.back();
    }
    return omega;
}

}  // namespace kolmo
