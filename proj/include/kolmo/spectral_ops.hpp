#pragma once

#include <vector>

#include "kolmo/fields.hpp"

namespace kolmo {

// Fourier-space differential operators. First-derivative multipliers vanish
// on the Nyquist row/column so that real fields map to real fields; all
// multipliers are therefore Hermitian-consistent and the adjoint of each is
// the conjugate multiplier under spectral_dot.

/// Per-mode wavenumber data for one grid size, indexed like SpectralField.
struct SpectralTables {
    /// Derivative wavenumbers (the symbols are i * dx[p], i * dy[p]), zero on Nyquist.
    std::vector<double> dx, dy;
    std::vector<double> k2;
    /// 1 / |k|^2, zero for the mean mode.
    std::vector<double> inv_k2;
    std::vector<unsigned char> keep;
};

/// Shared, lazily built tables (thread-safe).
const SpectralTables& spectral_tables(const Grid& g);

/// i * c * a.
inline Complex times_i(double c, Complex a) { return {-c * a.imag(), c * a.real()}; }

/// i * kx for half-spectrum entry (ikx, iky), zero on the kx Nyquist row.
Complex ddx_symbol(const Grid& g, int ikx, int iky);
/// i * ky, zero on the ky Nyquist column.
Complex ddy_symbol(const Grid& g, int ikx, int iky);
/// |k|^2 = kx^2 + ky^2 (no Nyquist truncation).
double k_squared(const Grid& g, int ikx, int iky);
/// 2/3-rule mask: keeps modes with |kx|, |ky| < n/3 on both axes.
bool dealias_keep(const Grid& g, int ikx, int iky);

SpectralField ddx(const SpectralField& f);
SpectralField ddy(const SpectralField& f);
SpectralField laplacian(const SpectralField& f);
SpectralField apply_dealias(SpectralField f);
/// Zeroes the Nyquist row and column.
SpectralField drop_nyquist(SpectralField f);

/// Spectral interpolation/truncation onto another grid size. Modes with
/// |kx|, |ky| < min(n, n') / 2 are kept; Nyquist modes are dropped.
SpectralField resample(const SpectralField& f, const Grid& target);

/// Solves -lap(psi) = omega; psi_hat(0) = 0.
SpectralField streamfunction_from_vorticity(const SpectralField& omega);
/// u = (d_y psi, -d_x psi).
VelocityField velocity_from_vorticity(const SpectralField& omega);
/// omega = d_x u_y - d_y u_x.
SpectralField vorticity_from_velocity(const VelocityField& vel);

/// Adjoint of velocity_from_vorticity: maps physical cotangents on (u_x, u_y)
/// to the spectral cotangent of omega.
SpectralField velocity_from_vorticity_adjoint(const Grid& g, const std::vector<double>& ux_bar,
                                              const std::vector<double>& uy_bar);
/// Adjoint of vorticity_from_velocity: spectral cotangent of omega to physical
/// cotangents of (u_x, u_y).
VelocityField vorticity_from_velocity_adjoint(const SpectralField& omega_bar);

/// Max-norm of the spectral divergence d_x u_x + d_y u_y in physical space.
double spectral_divergence_max(const VelocityField& vel);

}  // namespace kolmo
