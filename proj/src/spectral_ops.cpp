#include "kolmo/spectral_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>

#include "kolmo/fft.hpp"

namespace kolmo {
namespace {

template <class Symbol>
SpectralField apply_symbol(const SpectralField& f, Symbol symbol) {
    SpectralField out(f.grid);
    const int n = f.grid.n();
    const int h = f.grid.half();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < h; ++j) out.at(i, j) = symbol(i, j) * f.at(i, j);
    }
    return out;
}

}  // namespace

const SpectralTables& spectral_tables(const Grid& g) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<SpectralTables>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[g.n()];
    if (!slot) {
        auto t = std::make_unique<SpectralTables>();
        const std::size_t m = g.spectral_size();
        t->dx.resize(m);
        t->dy.resize(m);
        t->k2.resize(m);
        t->inv_k2.resize(m);
        t->keep.resize(m);
        for (int i = 0; i < g.n(); ++i) {
            for (int j = 0; j < g.half(); ++j) {
                const std::size_t p = static_cast<std::size_t>(i) * g.half() + j;
                t->dx[p] = ddx_symbol(g, i, j).imag();
                t->dy[p] = ddy_symbol(g, i, j).imag();
                t->k2[p] = k_squared(g, i, j);
                t->inv_k2[p] = t->k2[p] == 0.0 ? 0.0 : 1.0 / t->k2[p];
                t->keep[p] = dealias_keep(g, i, j) ? 1 : 0;
            }
        }
        slot = std::move(t);
    }
    return *slot;
}

Complex ddx_symbol(const Grid& g, int ikx, int /*iky*/) {
    if (ikx == g.n() / 2) return {0.0, 0.0};
    return {0.0, static_cast<double>(g.wavenumber(ikx))};
}

Complex ddy_symbol(const Grid& g, int /*ikx*/, int iky) {
    if (iky == g.n() / 2) return {0.0, 0.0};
    return {0.0, static_cast<double>(iky)};
}

double k_squared(const Grid& g, int ikx, int iky) {
    const double kx = g.wavenumber(ikx);
    const double ky = iky;
    return kx * kx + ky * ky;
}

bool dealias_keep(const Grid& g, int ikx, int iky) {
    const int n = g.n();
    return 3 * std::abs(g.wavenumber(ikx)) < n && 3 * iky < n;
}

SpectralField ddx(const SpectralField& f) {
    return apply_symbol(f, [&](int i, int j) { return ddx_symbol(f.grid, i, j); });
}

SpectralField ddy(const SpectralField& f) {
    return apply_symbol(f, [&](int i, int j) { return ddy_symbol(f.grid, i, j); });
}

SpectralField laplacian(const SpectralField& f) {
    return apply_symbol(f, [&](int i, int j) { return Complex(-k_squared(f.grid, i, j), 0.0); });
}

SpectralField apply_dealias(SpectralField f) {
    const int n = f.grid.n();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < f.grid.half(); ++j) {
            if (!dealias_keep(f.grid, i, j)) f.at(i, j) = 0.0;
        }
    }
    return f;
}

SpectralField drop_nyquist(SpectralField f) {
    const int n = f.grid.n();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < f.grid.half(); ++j) {
            if (i == n / 2 || j == n / 2) f.at(i, j) = 0.0;
        }
    }
    return f;
}

SpectralField resample(const SpectralField& f, const Grid& target) {
    const Grid& src = f.grid;
    SpectralField out(target);
    const int limit = std::min(src.n(), target.n()) / 2;
    const double scale = static_cast<double>(target.size()) / static_cast<double>(src.size());
    for (int i = 0; i < target.n(); ++i) {
        const int kx = target.wavenumber(i);
        if (std::abs(kx) >= limit) continue;
        const int si = kx >= 0 ? kx : kx + src.n();
        for (int j = 0; j < limit; ++j) out.at(i, j) = scale * f.at(si, j);
    }
    return out;
}

SpectralField streamfunction_from_vorticity(const SpectralField& omega) {
    return apply_symbol(omega, [&](int i, int j) {
        const double k2 = k_squared(omega.grid, i, j);
        return Complex(k2 == 0.0 ? 0.0 : 1.0 / k2, 0.0);
    });
}

VelocityField velocity_from_vorticity(const SpectralField& omega) {
    const SpectralField psi = streamfunction_from_vorticity(omega);
    VelocityField vel(omega.grid);
    const SpectralField u = ddy(psi);
    SpectralField v = ddx(psi);
    v *= -1.0;
    inverse_fft(omega.grid, u.coeffs.data(), vel.ux.data());
    inverse_fft(omega.grid, v.coeffs.data(), vel.uy.data());
    return vel;
}

SpectralField vorticity_from_velocity(const VelocityField& vel) {
    SpectralField u(vel.grid);
    SpectralField v(vel.grid);
    forward_fft(vel.grid, vel.ux.data(), u.coeffs.data());
    forward_fft(vel.grid, vel.uy.data(), v.coeffs.data());
    return ddx(v) - ddy(u);
}

SpectralField velocity_from_vorticity_adjoint(const Grid& g, const std::vector<double>& ux_bar,
                                              const std::vector<double>& uy_bar) {
    SpectralField ub(g);
    SpectralField vb(g);
    forward_fft(g, ux_bar.data(), ub.coeffs.data());
    forward_fft(g, uy_bar.data(), vb.coeffs.data());
    const auto& t = spectral_tables(g);
    SpectralField out(g);
    for (std::size_t p = 0; p < out.coeffs.size(); ++p) {
        // forward: u = ddy(psi), v = -ddx(psi), psi = omega / k^2
        out.coeffs[p] = t.inv_k2[p] * (times_i(-t.dy[p], ub.coeffs[p]) - times_i(-t.dx[p], vb.coeffs[p]));
    }
    return out;
}

VelocityField vorticity_from_velocity_adjoint(const SpectralField& omega_bar) {
    const Grid& g = omega_bar.grid;
    const auto& t = spectral_tables(g);
    SpectralField ub(g);
    SpectralField vb(g);
    for (std::size_t p = 0; p < ub.coeffs.size(); ++p) {
        ub.coeffs[p] = times_i(t.dy[p], omega_bar.coeffs[p]);
        vb.coeffs[p] = times_i(-t.dx[p], omega_bar.coeffs[p]);
    }
    VelocityField out(g);
    inverse_fft(g, ub.coeffs.data(), out.ux.data());
    inverse_fft(g, vb.coeffs.data(), out.uy.data());
    return out;
}

double spectral_divergence_max(const VelocityField& vel) {
    SpectralField u(vel.grid);
    SpectralField v(vel.grid);
    forward_fft(vel.grid, vel.ux.data(), u.coeffs.data());
    forward_fft(vel.grid, vel.uy.data(), v.coeffs.data());
    const RealField div = to_physical(ddx(u) + ddy(v));
    double m = 0.0;
    for (double d : div.values) m = std::max(m, std::abs(d));
    return m;
}

}  // namespace kolmo
