#include "kolmo/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kolmo {

RealField::RealField(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw std::invalid_argument("RealField: size mismatch");
}

SpectralField::SpectralField(Grid g, std::vector<Complex> c) : grid(g), coeffs(std::move(c)) {
    if (coeffs.size() != grid.spectral_size()) throw std::invalid_argument("SpectralField: size mismatch");
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += other.coeffs[i];
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] -= other.coeffs[i];
    return *this;
}

SpectralField& SpectralField::operator*=(double s) {
    for (auto& c : coeffs) c *= s;
    return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

double VelocityField::max_speed() const {
    double m = 0.0;
    for (std::size_t i = 0; i < ux.size(); ++i) m = std::max(m, std::hypot(ux[i], uy[i]));
    return m;
}

double spectral_dot(const SpectralField& a, const SpectralField& b) {
    const int n = a.grid.n();
    const int h = a.grid.half();
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < h; ++j) {
            // Columns ky = 0 and ky = n/2 have no mirrored partner in the half-spectrum.
            const double w = (j == 0 || j == n / 2) ? 1.0 : 2.0;
            const Complex x = a.at(i, j);
            const Complex y = b.at(i, j);
            sum += w * (x.real() * y.real() + x.imag() * y.imag());
        }
    }
    return sum / static_cast<double>(a.grid.size());
}

bool all_finite(const SpectralField& f) {
    for (const auto& c : f.coeffs) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    }
    return true;
}

}  // namespace kolmo
