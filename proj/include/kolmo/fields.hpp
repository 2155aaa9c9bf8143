#pragma once

#include <complex>
#include <vector>

#include "kolmo/grid.hpp"

namespace kolmo {

using Complex = std::complex<double>;

/// Real scalar field sampled at the collocation points.
struct RealField {
    Grid grid;
    std::vector<double> values;

    explicit RealField(Grid g) : grid(g), values(g.size(), 0.0) {}
    RealField(Grid g, std::vector<double> v);

    double& operator()(int ix, int iy) { return values[static_cast<std::size_t>(ix) * grid.n() + iy]; }
    double operator()(int ix, int iy) const { return values[static_cast<std::size_t>(ix) * grid.n() + iy]; }
};

/// Half-spectrum Fourier coefficients of a real field (see Grid for layout).
/// Forward transforms are unnormalized; inverse transforms carry 1/n^2.
struct SpectralField {
    Grid grid;
    std::vector<Complex> coeffs;

    explicit SpectralField(Grid g) : grid(g), coeffs(g.spectral_size(), Complex(0.0, 0.0)) {}
    SpectralField(Grid g, std::vector<Complex> c);

    Complex& at(int ikx, int iky) { return coeffs[static_cast<std::size_t>(ikx) * grid.half() + iky]; }
    Complex at(int ikx, int iky) const { return coeffs[static_cast<std::size_t>(ikx) * grid.half() + iky]; }

    SpectralField& operator+=(const SpectralField& other);
    SpectralField& operator-=(const SpectralField& other);
    SpectralField& operator*=(double s);
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

/// Two velocity components at the collocation points.
struct VelocityField {
    Grid grid;
    std::vector<double> ux;
    std::vector<double> uy;

    explicit VelocityField(Grid g) : grid(g), ux(g.size(), 0.0), uy(g.size(), 0.0) {}

    double max_speed() const;
};

/// Inner product matching the physical Euclidean one: <a, b> = sum_x a(x) b(x)
/// for the real fields a, b whose spectra are given.
double spectral_dot(const SpectralField& a, const SpectralField& b);

bool all_finite(const SpectralField& f);

}  // namespace kolmo
