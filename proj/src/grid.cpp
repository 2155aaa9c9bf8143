#include "kolmo/grid.hpp"

#include <numbers>
#include <string>

#include "kolmo/errors.hpp"

namespace kolmo {

Grid::Grid(int n) : n_(n) {
    if (n < 4 || n % 2 != 0) {
        throw ConfigError("grid size must be even and >= 4, got " + std::to_string(n));
    }
}

double Grid::length() const { return 2.0 * std::numbers::pi; }

double Grid::dx() const { return length() / n_; }

Grid make_grid(int n) { return Grid(n); }

}  // namespace kolmo
