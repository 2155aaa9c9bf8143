#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "kolmo/fft.hpp"
#include "kolmo/spectral_ops.hpp"

namespace kolmo::testing {

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = normal(rng);
    return v;
}

/// Random real field with modes |kx|, |ky| <= kmax, zero mean.
inline SpectralField smooth_field(const Grid& g, std::uint64_t seed, int kmax, double scale = 1.0) {
    RealField r(g, random_vector(g.size(), seed, scale));
    SpectralField s = to_spectral(r);
    for (int i = 0; i < g.n(); ++i) {
        for (int j = 0; j < g.half(); ++j) {
            if (std::abs(g.wavenumber(i)) > kmax || j > kmax) s.at(i, j) = 0.0;
        }
    }
    s.at(0, 0) = 0.0;
    return s;
}

/// Random real field without Nyquist modes (any mean).
inline SpectralField random_field(const Grid& g, std::uint64_t seed) {
    return drop_nyquist(to_spectral(RealField(g, random_vector(g.size(), seed))));
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double spectral_max_diff(const SpectralField& a, const SpectralField& b) {
    return max_abs_diff(to_physical(a).values, to_physical(b).values);
}

}  // namespace kolmo::testing
