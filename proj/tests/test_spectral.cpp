#include <numbers>

#include "doctest.h"
#include "kolmo/errors.hpp"
#include "support.hpp"

using namespace kolmo;
using namespace kolmo::testing;

namespace {

RealField sample(const Grid& g, auto f) {
    RealField r(g);
    for (int ix = 0; ix < g.n(); ++ix) {
        for (int iy = 0; iy < g.n(); ++iy) r(ix, iy) = f(g.coordinate(ix), g.coordinate(iy));
    }
    return r;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("grid geometry and wavenumber ordering") {
    const Grid g4 = make_grid(4);
    CHECK(g4.dx() == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
    CHECK(g4.wavenumber(0) == 0);
    CHECK(g4.wavenumber(1) == 1);
    CHECK(g4.wavenumber(2) == 2);
    CHECK(g4.wavenumber(3) == -1);
    CHECK(make_grid(256).dx() == doctest::Approx(0.02454).epsilon(1e-3));
    CHECK(make_grid(64).dx() * 64 == doctest::Approx(2 * std::numbers::pi));
    CHECK_THROWS_AS(make_grid(3), ConfigError);
    CHECK_THROWS_AS(make_grid(2), ConfigError);
    CHECK_THROWS_AS(make_grid(7), ConfigError);
}

TEST_CASE("transform round trip and Parseval pairing") {
    const Grid g(32);
    const RealField a(g, random_vector(g.size(), 1));
    const RealField b(g, random_vector(g.size(), 2));
    const RealField back = to_physical(to_spectral(a));
    CHECK(max_abs_diff(back.values, a.values) <= 1e-12);
    // Reality: re-transforming reproduces the spectrum.
    const SpectralField s = to_spectral(a);
    const SpectralField s2 = to_spectral(to_physical(s));
    double worst = 0.0;
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) worst = std::max(worst, std::abs(s.coeffs[i] - s2.coeffs[i]));
    CHECK(worst <= 1e-12 * static_cast<double>(g.size()));
    CHECK(spectral_dot(to_spectral(a), to_spectral(b)) == doctest::Approx(dot(a.values, b.values)).epsilon(1e-12));
}

TEST_CASE("streamfunction solves the Poisson problem") {
    const Grid g(32);
    const SpectralField zero(g);
    CHECK(max_abs(to_physical(streamfunction_from_vorticity(zero)).values) == 0.0);

    const SpectralField sinx = to_spectral(sample(g, [](double x, double) { return std::sin(x); }));
    CHECK(spectral_max_diff(streamfunction_from_vorticity(sinx), sinx) <= 1e-13);

    const SpectralField w = smooth_field(g, 3, 15);
    const SpectralField psi = streamfunction_from_vorticity(w);
    SpectralField back = laplacian(psi);
    back *= -1.0;
    CHECK(spectral_max_diff(back, w) <= 1e-12 * max_abs(to_physical(w).values));
    CHECK(psi.at(0, 0) == Complex(0.0, 0.0));
}

TEST_CASE("velocity from vorticity") {
    const Grid g(32);
    const SpectralField sinx = to_spectral(sample(g, [](double x, double) { return std::sin(x); }));
    const VelocityField v = velocity_from_vorticity(sinx);
    const RealField mcos = sample(g, [](double x, double) { return -std::cos(x); });
    CHECK(max_abs(v.ux) <= 1e-14);
    CHECK(max_abs_diff(v.uy, mcos.values) <= 1e-14);

    const VelocityField zero = velocity_from_vorticity(SpectralField(g));
    CHECK(max_abs(zero.ux) == 0.0);
    CHECK(max_abs(zero.uy) == 0.0);

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const SpectralField w = random_field(g, 10 + seed);
        const VelocityField vel = velocity_from_vorticity(w);
        CHECK(spectral_divergence_max(vel) <= 1e-12);
        SpectralField w0 = w;
        w0.at(0, 0) = 0.0;
        CHECK(spectral_max_diff(vorticity_from_velocity(vel), w0) <= 1e-12 * max_abs(to_physical(w0).values));
    }
}

TEST_CASE("vorticity from velocity") {
    const Grid g(32);
    VelocityField v(g);
    v.ux = sample(g, [](double, double y) { return -std::sin(y); }).values;
    const RealField cosy = sample(g, [](double, double y) { return std::cos(y); });
    CHECK(max_abs_diff(to_physical(vorticity_from_velocity(v)).values, cosy.values) <= 1e-13);

    VelocityField c(g);
    std::fill(c.ux.begin(), c.ux.end(), 1.5);
    std::fill(c.uy.begin(), c.uy.end(), -0.5);
    CHECK(max_abs(to_physical(vorticity_from_velocity(c)).values) <= 1e-14);
}

TEST_CASE("curl operators have matching adjoints") {
    const Grid g(16);
    const SpectralField w = random_field(g, 21);
    const auto a = random_vector(g.size(), 22);
    const auto b = random_vector(g.size(), 23);
    const VelocityField vel = velocity_from_vorticity(w);
    const double lhs = dot(vel.ux, a) + dot(vel.uy, b);
    const double rhs = spectral_dot(w, velocity_from_vorticity_adjoint(g, a, b));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    VelocityField u(g);
    u.ux = random_vector(g.size(), 24);
    u.uy = random_vector(g.size(), 25);
    const SpectralField wbar = random_field(g, 26);
    const VelocityField ubar = vorticity_from_velocity_adjoint(wbar);
    CHECK(spectral_dot(vorticity_from_velocity(u), wbar) ==
          doctest::Approx(dot(u.ux, ubar.ux) + dot(u.uy, ubar.uy)).epsilon(1e-12));
}

TEST_CASE("dealias mask follows the two-thirds rule") {
    const Grid g(12);
    CHECK(dealias_keep(g, 0, 0));
    CHECK(dealias_keep(g, 3, 3));
    CHECK_FALSE(dealias_keep(g, 4, 0));
    CHECK_FALSE(dealias_keep(g, 0, 4));
    CHECK(dealias_keep(g, g.n() - 3, 0));
    CHECK_FALSE(dealias_keep(g, g.n() - 4, 0));
}

TEST_CASE("spectral resampling") {
    const Grid coarse(16), fine(64);
    const SpectralField w = smooth_field(coarse, 5, 7);
    const SpectralField up = resample(w, fine);
    // Interpolation reproduces the coarse samples at shared nodes.
    const RealField cw = to_physical(w), fw = to_physical(up);
    double worst = 0.0;
    for (int ix = 0; ix < 16; ++ix) {
        for (int iy = 0; iy < 16; ++iy) worst = std::max(worst, std::abs(cw(ix, iy) - fw(4 * ix, 4 * iy)));
    }
    CHECK(worst <= 1e-13);
    CHECK(spectral_max_diff(resample(up, coarse), w) <= 1e-13);
    CHECK(spectral_max_diff(resample(w, coarse), w) <= 1e-15);
}

}
