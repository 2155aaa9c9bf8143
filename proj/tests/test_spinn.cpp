#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "kolmo/adamw.hpp"
#include "kolmo/spinn.hpp"
#include "support.hpp"

using namespace kolmo;
using namespace kolmo::testing;

namespace {

// Straightforward per-point evaluation of one axis network.
std::vector<double> naive_axis(const SpinnModel& m, int axis, double x) {
    const auto& s = m.shape;
    std::vector<double> a = fourier_encode(x, s.modes, s.feature_scale[static_cast<std::size_t>(axis)]);
    const double* theta = m.axis_params(axis);
    const auto dims = s.layer_dims();
    for (std::size_t l = 0; l < dims.size(); ++l) {
        const auto [in, out] = dims[l];
        std::vector<double> z(static_cast<std::size_t>(out));
        for (int o = 0; o < out; ++o) {
            double acc = theta[static_cast<std::ptrdiff_t>(in) * out + o];
            for (int i = 0; i < in; ++i) acc += theta[static_cast<std::ptrdiff_t>(o) * in + i] * a[static_cast<std::size_t>(i)];
            z[static_cast<std::size_t>(o)] = l + 1 < dims.size() ? std::tanh(acc) : acc;
        }
        theta += static_cast<std::ptrdiff_t>(in) * out + out;
        a = std::move(z);
    }
    return a;
}

double naive_point(const SpinnModel& m, const std::vector<double>& x, int channel) {
    const int R = m.shape.rank;
    std::vector<std::vector<double>> outs;
    for (int a = 0; a < m.shape.axes; ++a) outs.push_back(naive_axis(m, a, x[static_cast<std::size_t>(a)]));
    double sum = 0.0;
    for (int r = 0; r < R; ++r) {
        double prod = 1.0;
        for (const auto& o : outs) prod *= o[static_cast<std::size_t>(channel * R + r)];
        sum += prod;
    }
    return sum;
}

std::vector<double> naive_grid(const SpinnModel& m, const std::vector<std::vector<double>>& coords, int channel) {
    std::vector<double> out;
    if (coords.size() == 2) {
        for (double x : coords[0]) {
            for (double y : coords[1]) out.push_back(naive_point(m, {x, y}, channel));
        }
    } else {
        for (double t : coords[0]) {
            for (double x : coords[1]) {
                for (double y : coords[2]) out.push_back(naive_point(m, {t, x, y}, channel));
            }
        }
    }
    return out;
}

SpinnShape small2(int channels = 2) { return spatial_shape(6, 8, 2, 3, channels); }
SpinnShape small3() { return spacetime_shape(0.5, 5, 7, 3, 3, 2); }

std::vector<double> coords_uniform(int n, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> c(static_cast<std::size_t>(n));
    for (auto& v : c) v = u(rng);
    return c;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    return max_abs_diff(a, b) / std::max(1e-300, max_abs(b));
}

}  // namespace

TEST_SUITE("spinn") {

TEST_CASE("Glorot initialization") {
    const SpinnShape shape = spatial_shape();
    CHECK(glorot_init(shape, 3) == glorot_init(shape, 3));
    CHECK(glorot_init(shape, 3) != glorot_init(shape, 4));

    // Biases are zero; hidden 64x64 weights have variance 2 / 128.
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    const auto dims = shape.layer_dims();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SpinnModel m = make_model(shape, seed);
        for (int a = 0; a < shape.axes; ++a) {
            const double* p = m.axis_params(a);
            for (const auto& [in, out] : dims) {
                const std::size_t nw = static_cast<std::size_t>(in) * out;
                for (int o = 0; o < out; ++o) CHECK(p[nw + static_cast<std::size_t>(o)] == 0.0);
                if (in == 64 && out == 64) {
                    for (std::size_t i = 0; i < nw; ++i) {
                        sum += p[i];
                        sq += p[i] * p[i];
                        ++count;
                    }
                }
                p += nw + static_cast<std::size_t>(out);
            }
        }
    }
    REQUIRE(count > 0);
    const double mean = sum / static_cast<double>(count);
    const double var = sq / static_cast<double>(count) - mean * mean;
    CHECK(std::abs(var - 2.0 / 128.0) <= 0.2 * 2.0 / 128.0);
}

TEST_CASE("Fourier features") {
    const auto f0 = fourier_encode(0.0, 5);
    REQUIRE(f0.size() == 10);
    for (int j = 0; j < 5; ++j) {
        CHECK(f0[static_cast<std::size_t>(j)] == 0.0);
        CHECK(f0[static_cast<std::size_t>(5 + j)] == 1.0);
    }
    const double x = 1.234;
    CHECK(max_abs_diff(fourier_encode(x, 5), fourier_encode(x + 2 * std::numbers::pi, 5)) <= 1e-12);
    const auto ft = fourier_encode(0.5, 2, std::numbers::pi / 0.5);
    CHECK(ft[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(ft[2] == doctest::Approx(-1.0));
}

TEST_CASE("tensor-grid evaluation matches the naive oracle") {
    const SpinnModel m2 = make_model(small2(), 1);
    const std::vector<std::vector<double>> c2{coords_uniform(8, 0, 6.28, 1), coords_uniform(8, 0, 6.28, 2)};
    for (int ch = 0; ch < 2; ++ch) CHECK(relative_error(eval_grid(m2, c2, ch), naive_grid(m2, c2, ch)) <= 1e-12);

    const SpinnModel m3 = make_model(small3(), 2);
    const std::vector<std::vector<double>> c3{coords_uniform(4, 0, 0.5, 3), coords_uniform(6, 0, 6.28, 4),
                                              coords_uniform(5, 0, 6.28, 5)};
    for (int ch = 0; ch < 2; ++ch) CHECK(relative_error(eval_grid(m3, c3, ch), naive_grid(m3, c3, ch)) <= 1e-12);

    // Rectangular grids up to 16 points per axis.
    const std::vector<std::vector<double>> c4{coords_uniform(16, 0, 6.28, 6), coords_uniform(3, 0, 6.28, 7)};
    CHECK(relative_error(eval_grid(m2, c4, 1), naive_grid(m2, c4, 1)) <= 1e-12);
}

TEST_CASE("zeroed output layer gives a zero field") {
    SpinnModel m = make_model(small2(), 5);
    zero_output_layer(m, 1);
    const std::vector<std::vector<double>> c{coords_uniform(5, 0, 6, 1), coords_uniform(5, 0, 6, 2)};
    CHECK(max_abs(eval_grid(m, c, 0)) == 0.0);
    CHECK(max_abs(eval_derivatives(m, c, {2, 1, 0}, 1)) == 0.0);
}

TEST_CASE("rank-one fields factorize") {
    const SpinnModel m = make_model(spatial_shape(1, 6, 2, 3, 1), 8);
    const auto xs = coords_uniform(5, 0, 6, 1), ys = coords_uniform(4, 0, 6, 2);
    const auto f = eval_grid(m, {xs, ys});
    const auto fx = eval_derivatives(m, {xs, ys}, {1, 0, 0});
    const double h = 1e-5;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double g = naive_axis(m, 0, xs[i])[0];
        const double gp = (naive_axis(m, 0, xs[i] + h)[0] - naive_axis(m, 0, xs[i] - h)[0]) / (2 * h);
        for (std::size_t j = 0; j < ys.size(); ++j) {
            const double hy = naive_axis(m, 1, ys[j])[0];
            CHECK(f[i * ys.size() + j] == doctest::Approx(g * hy).epsilon(1e-12));
            CHECK(fx[i * ys.size() + j] == doctest::Approx(gp * hy).epsilon(1e-8));
        }
    }
}

TEST_CASE("input derivatives match finite differences") {
    const double h = 1e-4;
    auto fd_check = [&](const SpinnModel& m, std::vector<std::vector<double>> c, Orders orders, int ch) {
        // Differentiate the next-lower exact derivative along the first axis with a nonzero order.
        std::size_t axis = 0;
        while (orders[axis] == 0) ++axis;
        Orders lower = orders;
        lower[axis] -= 1;
        auto plus = c, minus = c;
        for (auto& v : plus[axis]) v += h;
        for (auto& v : minus[axis]) v -= h;
        const auto fp = eval_derivatives(m, plus, lower, ch);
        const auto fm = eval_derivatives(m, minus, lower, ch);
        std::vector<double> fd(fp.size());
        for (std::size_t i = 0; i < fd.size(); ++i) fd[i] = (fp[i] - fm[i]) / (2 * h);
        return relative_error(eval_derivatives(m, c, orders, ch), fd);
    };
    const SpinnModel m2 = make_model(small2(), 11);
    const std::vector<std::vector<double>> c2{coords_uniform(6, 0, 6.28, 1), coords_uniform(7, 0, 6.28, 2)};
    for (const Orders& o : {Orders{1, 0, 0}, Orders{0, 1, 0}, Orders{2, 0, 0}, Orders{1, 1, 0}, Orders{0, 2, 0}}) {
        CHECK(fd_check(m2, c2, o, 0) <= 1e-5);
        CHECK(fd_check(m2, c2, o, 1) <= 1e-5);
    }
    for (const Orders& o : {Orders{3, 0, 0}, Orders{2, 1, 0}, Orders{1, 2, 0}, Orders{0, 3, 0}}) {
        CHECK(fd_check(m2, c2, o, 1) <= 1e-3);
    }

    const SpinnModel m3 = make_model(small3(), 12);
    const std::vector<std::vector<double>> c3{coords_uniform(3, 0, 0.5, 3), coords_uniform(4, 0, 6.28, 4),
                                              coords_uniform(5, 0, 6.28, 5)};
    for (const Orders& o : {Orders{1, 0, 0}, Orders{0, 1, 0}, Orders{0, 0, 1}, Orders{1, 1, 0}, Orders{1, 0, 1},
                            Orders{0, 1, 1}, Orders{0, 0, 2}, Orders{0, 2, 0}}) {
        CHECK(fd_check(m3, c3, o, 0) <= 1e-5);
    }
    for (const Orders& o : {Orders{0, 3, 0}, Orders{0, 0, 3}, Orders{0, 2, 1}, Orders{0, 1, 2}}) {
        CHECK(fd_check(m3, c3, o, 1) <= 1e-3);
    }
    CHECK_THROWS_AS(eval_derivatives(m2, c2, {4, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(eval_derivatives(m2, c2, {0, 0, 1}), std::invalid_argument);
}

TEST_CASE("parameter gradients match finite differences") {
    const SpinnModel m = make_model(small3(), 21);
    const std::vector<std::vector<double>> c{coords_uniform(3, 0, 0.5, 1), coords_uniform(4, 0, 6.28, 2),
                                             coords_uniform(4, 0, 6.28, 3)};
    const std::vector<FieldRequest> req{{0, {0, 0, 0}}, {1, {1, 1, 0}}, {0, {0, 2, 1}}, {1, {0, 0, 3}}};
    const auto weights = random_vector(4 * 48, 5);
    const GridLoss loss = [&](const std::vector<std::vector<double>>& f, std::vector<std::vector<double>>& cot) {
        double s = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) {
            for (std::size_t i = 0; i < f[k].size(); ++i) {
                const double w = weights[k * 48 + i];
                s += w * f[k][i] * f[k][i] + 0.1 * f[k][i];
                cot[k][i] = 2 * w * f[k][i] + 0.1;
            }
        }
        return s;
    };
    std::vector<double> grad;
    param_gradient(m, c, req, loss, grad);
    auto value = [&](const std::vector<double>& params) {
        SpinnModel mm{m.shape, params};
        std::vector<double> unused;
        return param_gradient(mm, c, req, loss, unused);
    };
    for (std::uint64_t d = 0; d < 20; ++d) {
        const auto dir = random_vector(m.params.size(), 100 + d);
        const double analytic = dot(grad, dir);
        double best = std::numeric_limits<double>::infinity();
        for (double eps : {1e-4, 1e-5, 1e-6}) {
            auto p = m.params, q = m.params;
            for (std::size_t i = 0; i < p.size(); ++i) {
                p[i] += eps * dir[i];
                q[i] -= eps * dir[i];
            }
            best = std::min(best, std::abs((value(p) - value(q)) / (2 * eps) - analytic) / std::abs(analytic));
        }
        CHECK(best <= 1e-5);
    }
}

TEST_CASE("parameter gradient of trivial and additive losses") {
    SpinnModel zero = make_model(small2(), 1);
    std::fill(zero.params.begin(), zero.params.end(), 0.0);
    const std::vector<std::vector<double>> c{coords_uniform(4, 0, 6, 1), coords_uniform(3, 0, 6, 2)};
    const GridLoss squares = [](const std::vector<std::vector<double>>& f, std::vector<std::vector<double>>& cot) {
        double s = 0.0;
        for (std::size_t i = 0; i < f[0].size(); ++i) {
            s += f[0][i] * f[0][i];
            cot[0][i] = 2 * f[0][i];
        }
        return s;
    };
    std::vector<double> g;
    CHECK(param_gradient(zero, c, {{0, {0, 0, 0}}}, squares, g) == 0.0);
    CHECK(max_abs(g) == 0.0);

    // Gradient of the grid sum equals the sum of per-point gradients.
    const SpinnModel m = make_model(small2(), 2);
    std::vector<double> total;
    param_gradient(m, c, {{1, {1, 0, 0}}}, [](const auto& f, auto& cot) {
        std::fill(cot[0].begin(), cot[0].end(), 1.0);
        double s = 0.0;
        for (double v : f[0]) s += v;
        return s;
    }, total);
    std::vector<double> acc(total.size(), 0.0);
    for (std::size_t p = 0; p < 12; ++p) {
        std::vector<double> gp;
        param_gradient(m, c, {{1, {1, 0, 0}}}, [p](const auto& f, auto& cot) {
            cot[0][p] = 1.0;
            return f[0][p];
        }, gp);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += gp[i];
    }
    CHECK(max_abs_diff(acc, total) <= 1e-12 * std::max(1.0, max_abs(total)));
}

TEST_CASE("model files round trip") {
    const SpinnModel m = make_model(small3(), 4);
    const auto path = std::filesystem::temp_directory_path() / "kolmo_model_test.spnn";
    write_model(path, m);
    const SpinnModel back = read_model(path);
    CHECK(back.params == m.params);
    CHECK(back.shape.feature_scale == m.shape.feature_scale);
    CHECK(back.shape.rank == m.shape.rank);
    std::filesystem::remove(path);
}

TEST_CASE("AdamW decoupled decay and cosine schedule") {
    AdamWConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.weight_decay = 0.5;
    cfg.decay_steps = 100;
    AdamW opt(cfg, 3);
    CHECK(opt.learning_rate(0) == cfg.learning_rate);
    CHECK(opt.learning_rate(100) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(opt.learning_rate(50) == doctest::Approx(0.5e-2));
    std::vector<double> p{1.0, -2.0, 3.0};
    for (std::size_t t = 0; t < 5; ++t) {
        const double factor = 1.0 - opt.learning_rate(t) * cfg.weight_decay;
        const auto before = p;
        opt.step(p, {0.0, 0.0, 0.0});
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(before[i] * factor).epsilon(1e-15));
    }
    CHECK(opt.step_count() == 5);
}

TEST_CASE("AdamW minimizes a scalar quadratic") {
    AdamWConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.decay_steps = 500;
    AdamW opt(cfg, 1);
    std::vector<double> p{1.0};
    for (int t = 0; t < 500; ++t) opt.step(p, {p[0]});
    CHECK(std::abs(p[0]) < 1e-2);
}

}
