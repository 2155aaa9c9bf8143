#include "kolmo/spinn.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "kolmo/binary_io.hpp"

namespace kolmo {
namespace {

using Array = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;

// d^j/dx^j of sin and cos expressed through sin/cos of the same argument.
double sin_derivative(int j, double s, double c) {
    switch (j & 3) {
        case 0: return s;
        case 1: return c;
        case 2: return -s;
        default: return -c;
    }
}

double cos_derivative(int j, double s, double c) {
    switch (j & 3) {
        case 0: return c;
        case 1: return -s;
        case 2: return -c;
        default: return s;
    }
}

// Derivatives of tanh at the pre-activation values: f1 = tanh', ..., f4.
struct TanhDerivs {
    Array t, f1, f2, f3, f4;
    explicit TanhDerivs(const RowMatrix& z, int upto) {
        t = z.array().tanh();
        f1 = 1.0 - t.square();
        if (upto >= 2) f2 = -2.0 * t * f1;
        if (upto >= 3) f3 = -2.0 * f1.square() + 4.0 * t.square() * f1;
        if (upto >= 4) f4 = -4.0 * f1 * f2 + 8.0 * t * f1.square() + 4.0 * t.square() * f2;
    }
};

}  // namespace

void SpinnShape::validate() const {
    if (axes < 2 || axes > 3) throw std::invalid_argument("SPINN supports 2 or 3 axes");
    if (rank < 1 || width < 1 || depth < 1 || modes < 1 || channels < 1) {
        throw std::invalid_argument("SPINN dimensions must be positive");
    }
    if (feature_scale.size() != static_cast<std::size_t>(axes)) {
        throw std::invalid_argument("SPINN feature_scale must have one entry per axis");
    }
}

std::vector<std::array<int, 2>> SpinnShape::layer_dims() const {
    std::vector<std::array<int, 2>> dims;
    int in = feature_count();
    for (int l = 0; l < depth; ++l) {
        dims.push_back({in, width});
        in = width;
    }
    dims.push_back({in, output_count()});
    return dims;
}

std::size_t SpinnShape::axis_parameter_count() const {
    std::size_t count = 0;
    for (const auto& [in, out] : layer_dims()) count += static_cast<std::size_t>(in) * out + out;
    return count;
}

SpinnShape spatial_shape(int rank, int width, int depth, int modes, int channels) {
    return SpinnShape{2, rank, width, depth, modes, channels, {1.0, 1.0}};
}

SpinnShape spacetime_shape(double window, int rank, int width, int depth, int modes, int channels) {
    if (!(window > 0.0)) throw std::invalid_argument("time window must be positive");
    return SpinnShape{3, rank, width, depth, modes, channels, {std::numbers::pi / window, 1.0, 1.0}};
}

std::vector<double> glorot_init(const SpinnShape& shape, std::uint64_t seed) {
    shape.validate();
    std::mt19937_64 rng(seed);
    std::vector<double> params;
    params.reserve(shape.parameter_count());
    for (int a = 0; a < shape.axes; ++a) {
        for (const auto& [in, out] : shape.layer_dims()) {
            std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / (in + out)));
            for (int i = 0; i < in * out; ++i) params.push_back(normal(rng));
            params.insert(params.end(), static_cast<std::size_t>(out), 0.0);
        }
    }
    return params;
}

SpinnModel make_model(const SpinnShape& shape, std::uint64_t seed) { return {shape, glorot_init(shape, seed)}; }

void zero_output_layer(SpinnModel& model, int axis) {
    const auto dims = model.shape.layer_dims();
    std::size_t offset = model.shape.axis_parameter_count() * static_cast<std::size_t>(axis);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) offset += static_cast<std::size_t>(dims[l][0]) * dims[l][1] + dims[l][1];
    const std::size_t count = static_cast<std::size_t>(dims.back()[0]) * dims.back()[1] + dims.back()[1];
    std::fill_n(model.params.begin() + static_cast<std::ptrdiff_t>(offset), count, 0.0);
}

std::vector<double> fourier_encode(double x, int modes, double scale) {
    std::vector<double> f(static_cast<std::size_t>(2 * modes));
    for (int j = 1; j <= modes; ++j) {
        f[static_cast<std::size_t>(j - 1)] = std::sin(j * scale * x);
        f[static_cast<std::size_t>(modes + j - 1)] = std::cos(j * scale * x);
    }
    return f;
}

SpinnGrid::SpinnGrid(const SpinnModel& model, std::vector<std::vector<double>> coords, Orders max_orders)
    : model_(&model), coords_(std::move(coords)), max_orders_(max_orders) {
    model.shape.validate();
    if (model.params.size() != model.shape.parameter_count()) throw std::invalid_argument("SPINN parameter count mismatch");
    if (coords_.size() != static_cast<std::size_t>(model.shape.axes)) throw std::invalid_argument("one coordinate list per axis required");
    for (int a = 0; a < 3; ++a) {
        if (max_orders_[static_cast<std::size_t>(a)] < 0 || max_orders_[static_cast<std::size_t>(a)] > kMaxDerivativeOrder) {
            throw std::invalid_argument("derivative order must be in [0, 3]");
        }
    }
    passes_.resize(coords_.size());
    for (int a = 0; a < model.shape.axes; ++a) forward_axis(a);
}

std::size_t SpinnGrid::points() const {
    std::size_t p = 1;
    for (const auto& c : coords_) p *= c.size();
    return p;
}

void SpinnGrid::forward_axis(int axis) {
    const auto& shape = model_->shape;
    const auto& x = coords_[static_cast<std::size_t>(axis)];
    const int K = max_orders_[static_cast<std::size_t>(axis)];
    const auto n = static_cast<Eigen::Index>(x.size());
    const double scale = shape.feature_scale[static_cast<std::size_t>(axis)];
    AxisPass& pass = passes_[static_cast<std::size_t>(axis)];

    pass.act.assign(static_cast<std::size_t>(shape.depth + 1), {});
    pass.pre.assign(static_cast<std::size_t>(shape.depth), {});
    auto& feat = pass.act[0];
    feat.assign(static_cast<std::size_t>(K + 1), RowMatrix(n, shape.feature_count()));
    for (Eigen::Index p = 0; p < n; ++p) {
        for (int q = 1; q <= shape.modes; ++q) {
            const double w = q * scale;
            const double s = std::sin(w * x[static_cast<std::size_t>(p)]);
            const double c = std::cos(w * x[static_cast<std::size_t>(p)]);
            double wj = 1.0;
            for (int j = 0; j <= K; ++j) {
                feat[static_cast<std::size_t>(j)](p, q - 1) = wj * sin_derivative(j, s, c);
                feat[static_cast<std::size_t>(j)](p, shape.modes + q - 1) = wj * cos_derivative(j, s, c);
                wj *= w;
            }
        }
    }

    const double* theta = model_->axis_params(axis);
    const auto dims = shape.layer_dims();
    for (int l = 0; l <= shape.depth; ++l) {
        const auto [in, out] = dims[static_cast<std::size_t>(l)];
        // Owned copies: Eigen's kernels peel by address, so sums over heap-placed Maps vary in the last ulp.
        const RowMatrix W = ConstMatMap(theta, out, in);
        const Eigen::RowVectorXd b = ConstVecMap(theta + static_cast<std::ptrdiff_t>(in) * out, out);
        theta += static_cast<std::ptrdiff_t>(in) * out + out;
        const auto& a = pass.act[static_cast<std::size_t>(l)];
        std::vector<RowMatrix> z(static_cast<std::size_t>(K + 1));
        for (int j = 0; j <= K; ++j) z[static_cast<std::size_t>(j)].noalias() = a[static_cast<std::size_t>(j)] * W.transpose();
        z[0].rowwise() += b;
        if (l == shape.depth) {
            pass.out = std::move(z);
            break;
        }
        // Taylor-jet propagation through tanh (Faa di Bruno up to order 3).
        TanhDerivs d(z[0], K);
        std::vector<RowMatrix> y(static_cast<std::size_t>(K + 1));
        y[0] = d.t.matrix();
        if (K >= 1) y[1] = (d.f1 * z[1].array()).matrix();
        if (K >= 2) y[2] = (d.f2 * z[1].array().square() + d.f1 * z[2].array()).matrix();
        if (K >= 3) {
            y[3] = (d.f3 * z[1].array().cube() + 3.0 * d.f2 * z[1].array() * z[2].array() + d.f1 * z[3].array())
                       .matrix();
        }
        pass.pre[static_cast<std::size_t>(l)] = std::move(z);
        pass.act[static_cast<std::size_t>(l + 1)] = std::move(y);
    }
    pass.out_bar.assign(static_cast<std::size_t>(K + 1), RowMatrix::Zero(n, shape.output_count()));
}

void SpinnGrid::check_orders(const Orders& orders) const {
    for (int a = 0; a < model_->shape.axes; ++a) {
        const int o = orders[static_cast<std::size_t>(a)];
        if (o < 0 || o > kMaxDerivativeOrder) throw std::invalid_argument("derivative order must be in [0, 3]");
        if (o > max_orders_[static_cast<std::size_t>(a)]) throw std::invalid_argument("derivative order exceeds the evaluated jet");
    }
    for (int a = model_->shape.axes; a < 3; ++a) {
        if (orders[static_cast<std::size_t>(a)] != 0) throw std::invalid_argument("derivative along a missing axis");
    }
}

std::vector<double> SpinnGrid::field(int channel, Orders orders) const {
    std::vector<double> result(points(), 0.0);
    accumulate_field(channel, orders, 1.0, result);
    return result;
}

void SpinnGrid::accumulate_field(int channel, Orders orders, double scale, std::vector<double>& target) const {
    check_orders(orders);
    if (target.size() != points()) throw std::invalid_argument("field size mismatch");
    const int R = model_->shape.rank;
    const Eigen::Index c0 = static_cast<Eigen::Index>(channel) * R;
    auto factor = [&](int a) {
        return passes_[static_cast<std::size_t>(a)].out[static_cast<std::size_t>(orders[static_cast<std::size_t>(a)])].middleCols(c0, R);
    };
    if (model_->shape.axes == 2) {
        RowMatrix P;
        P.noalias() = scale * factor(0) * factor(1).transpose();
        MatMap(target.data(), P.rows(), P.cols()) += P;
    } else {
        const auto T = factor(0);
        const auto X = factor(1);
        const Eigen::Index n0 = T.rows(), n1 = X.rows(), n2 = static_cast<Eigen::Index>(coords_[2].size());
        RowMatrix A(n0 * n1, R);
        for (Eigen::Index i = 0; i < n0; ++i) {
            A.middleRows(i * n1, n1) = X.array().rowwise() * T.row(i).array();
        }
        RowMatrix P;
        P.noalias() = scale * A * factor(2).transpose();
        MatMap(target.data(), n0 * n1, n2) += P;
    }
}

void SpinnGrid::add_cotangent(int channel, Orders orders, const std::vector<double>& cotangent, double scale) {
    check_orders(orders);
    if (cotangent.size() != points()) throw std::invalid_argument("cotangent size mismatch");
    const int R = model_->shape.rank;
    const Eigen::Index c0 = static_cast<Eigen::Index>(channel) * R;
    auto factor = [&](int a) {
        return passes_[static_cast<std::size_t>(a)].out[static_cast<std::size_t>(orders[static_cast<std::size_t>(a)])].middleCols(c0, R);
    };
    auto factor_bar = [&](int a) {
        return passes_[static_cast<std::size_t>(a)].out_bar[static_cast<std::size_t>(orders[static_cast<std::size_t>(a)])].middleCols(c0, R);
    };
    if (model_->shape.axes == 2) {
        const RowMatrix G = ConstMatMap(cotangent.data(), static_cast<Eigen::Index>(coords_[0].size()), static_cast<Eigen::Index>(coords_[1].size()));
        factor_bar(0).noalias() += scale * G * factor(1);
        factor_bar(1).noalias() += scale * G.transpose() * factor(0);
    } else {
        const auto T = factor(0);
        const auto X = factor(1);
        const Eigen::Index n0 = T.rows(), n1 = X.rows(), n2 = static_cast<Eigen::Index>(coords_[2].size());
        const RowMatrix G = ConstMatMap(cotangent.data(), n0 * n1, n2);
        RowMatrix A(n0 * n1, R);
        for (Eigen::Index i = 0; i < n0; ++i) A.middleRows(i * n1, n1) = X.array().rowwise() * T.row(i).array();
        const RowMatrix Abar = scale * G * factor(2);
        factor_bar(2).noalias() += scale * G.transpose() * A;
        auto Tb = factor_bar(0);
        auto Xb = factor_bar(1);
        for (Eigen::Index i = 0; i < n0; ++i) {
            const auto block = Abar.middleRows(i * n1, n1);
            Tb.row(i) += (block.array() * X.array()).colwise().sum().matrix();
            Xb += (block.array().rowwise() * T.row(i).array()).matrix();
        }
    }
}

void SpinnGrid::backward_axis(int axis, double* grad) const {
    const auto& shape = model_->shape;
    const AxisPass& pass = passes_[static_cast<std::size_t>(axis)];
    const int K = max_orders_[static_cast<std::size_t>(axis)];
    const auto dims = shape.layer_dims();

    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const auto& [in, out] : dims) {
        offsets.push_back(off);
        off += static_cast<std::size_t>(in) * out + out;
    }
    const double* theta = model_->axis_params(axis);

    std::vector<RowMatrix> zbar = pass.out_bar;
    for (int l = shape.depth; l >= 0; --l) {
        const auto [in, out] = dims[static_cast<std::size_t>(l)];
        const std::size_t o = offsets[static_cast<std::size_t>(l)];
        const RowMatrix W = ConstMatMap(theta + o, out, in);
        RowMatrix Wbar = RowMatrix::Zero(out, in);
        const auto& a = pass.act[static_cast<std::size_t>(l)];
        for (int j = 0; j <= K; ++j) Wbar.noalias() += zbar[static_cast<std::size_t>(j)].transpose() * a[static_cast<std::size_t>(j)];
        MatMap(grad + o, out, in) += Wbar;
        const Eigen::RowVectorXd bsum = zbar[0].colwise().sum();
        VecMap(grad + o + static_cast<std::size_t>(in) * out, out) += bsum;
        if (l == 0) break;

        std::vector<RowMatrix> abar(static_cast<std::size_t>(K + 1));
        for (int j = 0; j <= K; ++j) abar[static_cast<std::size_t>(j)].noalias() = zbar[static_cast<std::size_t>(j)] * W;

        // Reverse of the tanh jet propagation of hidden layer l - 1.
        const auto& z = pass.pre[static_cast<std::size_t>(l - 1)];
        TanhDerivs d(z[0], K + 1);
        auto yb = [&](int j) { return abar[static_cast<std::size_t>(j)].array(); };
        auto za = [&](int j) { return z[static_cast<std::size_t>(j)].array(); };
        std::vector<RowMatrix> next(static_cast<std::size_t>(K + 1));
        Array g0 = yb(0) * d.f1;
        if (K >= 1) g0 += yb(1) * d.f2 * za(1);
        if (K >= 2) g0 += yb(2) * (d.f3 * za(1).square() + d.f2 * za(2));
        if (K >= 3) g0 += yb(3) * (d.f4 * za(1).cube() + 3.0 * d.f3 * za(1) * za(2) + d.f2 * za(3));
        next[0] = g0.matrix();
        if (K >= 1) {
            Array g1 = yb(1) * d.f1;
            if (K >= 2) g1 += yb(2) * 2.0 * d.f2 * za(1);
            if (K >= 3) g1 += yb(3) * (3.0 * d.f3 * za(1).square() + 3.0 * d.f2 * za(2));
            next[1] = g1.matrix();
        }
        if (K >= 2) {
            Array g2 = yb(2) * d.f1;
            if (K >= 3) g2 += yb(3) * 3.0 * d.f2 * za(1);
            next[2] = g2.matrix();
        }
        if (K >= 3) next[3] = (yb(3) * d.f1).matrix();
        zbar = std::move(next);
    }
}

std::vector<double> SpinnGrid::param_gradient() const {
    std::vector<double> grad(model_->params.size(), 0.0);
    const std::size_t per_axis = model_->shape.axis_parameter_count();
    for (int a = 0; a < model_->shape.axes; ++a) backward_axis(a, grad.data() + per_axis * static_cast<std::size_t>(a));
    return grad;
}

std::vector<double> eval_grid(const SpinnModel& model, const std::vector<std::vector<double>>& coords, int channel) {
    return SpinnGrid(model, coords).field(channel, {0, 0, 0});
}

std::vector<double> eval_derivatives(const SpinnModel& model, const std::vector<std::vector<double>>& coords,
                                     Orders orders, int channel) {
    for (int o : orders) {
        if (o < 0 || o > kMaxDerivativeOrder) throw std::invalid_argument("derivative order must be in [0, 3]");
    }
    return SpinnGrid(model, coords, orders).field(channel, orders);
}

double param_gradient(const SpinnModel& model, const std::vector<std::vector<double>>& coords,
                      const std::vector<FieldRequest>& requests, const GridLoss& loss, std::vector<double>& grad) {
    Orders max_orders{0, 0, 0};
    for (const auto& r : requests) {
        for (std::size_t a = 0; a < 3; ++a) max_orders[a] = std::max(max_orders[a], r.orders[a]);
    }
    SpinnGrid grid(model, coords, max_orders);
    std::vector<std::vector<double>> fields;
    fields.reserve(requests.size());
    for (const auto& r : requests) fields.push_back(grid.field(r.channel, r.orders));
    std::vector<std::vector<double>> cot(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) cot[i].assign(fields[i].size(), 0.0);
    const double value = loss(fields, cot);
    for (std::size_t i = 0; i < requests.size(); ++i) grid.add_cotangent(requests[i].channel, requests[i].orders, cot[i]);
    grad = grid.param_gradient();
    return value;
}

void write_model(const std::filesystem::path& path, const SpinnModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const auto& s = model.shape;
    binary::write_magic(os, "SPNN");
    for (int v : {s.axes, s.rank, s.width, s.depth, s.modes, s.channels}) binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(v));
    for (double f : s.feature_scale) binary::write_le<double>(os, f);
    for (double p : model.params) binary::write_le<double>(os, p);
}

SpinnModel read_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    binary::expect_magic(is, "SPNN");
    SpinnModel m;
    auto& s = m.shape;
    for (int* v : {&s.axes, &s.rank, &s.width, &s.depth, &s.modes, &s.channels}) *v = static_cast<int>(binary::read_le<std::uint32_t>(is));
    s.feature_scale.resize(static_cast<std::size_t>(s.axes));
    for (auto& f : s.feature_scale) f = binary::read_le<double>(is);
    s.validate();
    m.params.resize(s.parameter_count());
    for (auto& p : m.params) p = binary::read_le<double>(is);
    return m;
}

}  // namespace kolmo
