#pragma once

#include <cstddef>

namespace kolmo {

/// Uniform periodic grid on [0, 2pi)^2 with n points per axis.
///
/// Physical arrays are row-major with the x index first: value(ix, iy) is
/// stored at ix * n + iy. Spectral arrays hold the real-to-complex
/// half-spectrum: full kx in standard FFT ordering (0, 1, ..., n/2, -n/2+1,
/// ..., -1) by ky in 0..n/2, stored at ikx * (n/2 + 1) + iky.
class Grid {
public:
    explicit Grid(int n);

    int n() const { return n_; }
    int half() const { return n_ / 2 + 1; }
    double length() const;
    double dx() const;
    std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
    std::size_t spectral_size() const { return static_cast<std::size_t>(n_) * half(); }

    /// Signed integer wavenumber for FFT index i along a full axis.
    int wavenumber(int i) const { return i <= n_ / 2 ? i : i - n_; }
    double coordinate(int i) const { return i * dx(); }

    bool operator==(const Grid& other) const { return n_ == other.n_; }

private:
    int n_;
};

Grid make_grid(int n);

}  // namespace kolmo
