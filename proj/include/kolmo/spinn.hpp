#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace kolmo {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Architecture of a separable neural field
///   f_c(x_1, ..., x_d) = sum_r prod_i MLP_i(x_i)[c * rank + r].
/// Every axis has its own MLP: Fourier features -> `depth` tanh layers of
/// `width` -> linear layer with rank * channels outputs.
struct SpinnShape {
    int axes = 2;
    int rank = 128;
    int width = 64;
    int depth = 3;
    int modes = 5;
    int channels = 2;
    /// Per-axis multiplier applied to the coordinate before the sin/cos
    /// features. 1 for the periodic spatial axes; pi / T maps a time window
    /// [0, T] onto [0, pi].
    std::vector<double> feature_scale;

    void validate() const;
    int feature_count() const { return 2 * modes; }
    int output_count() const { return rank * channels; }
    /// (fan_in, fan_out) of every layer of one axis network.
    std::vector<std::array<int, 2>> layer_dims() const;
    std::size_t axis_parameter_count() const;
    std::size_t parameter_count() const { return axis_parameter_count() * static_cast<std::size_t>(axes); }
};

/// Shape for a field over (x, y) with 2 velocity channels.
SpinnShape spatial_shape(int rank = 128, int width = 64, int depth = 3, int modes = 5, int channels = 2);
/// Shape for a field over (t, x, y) on the time window [0, window].
SpinnShape spacetime_shape(double window, int rank = 128, int width = 64, int depth = 3, int modes = 5,
                           int channels = 2);

struct SpinnModel {
    SpinnShape shape;
    std::vector<double> params;

    const double* axis_params(int axis) const { return params.data() + axis * shape.axis_parameter_count(); }
};

/// Glorot-normal weights (variance 2 / (fan_in + fan_out)), zero biases.
std::vector<double> glorot_init(const SpinnShape& shape, std::uint64_t seed);
SpinnModel make_model(const SpinnShape& shape, std::uint64_t seed);
/// Zeroes the output layer of one axis; the field is then identically zero
/// while gradients with respect to that layer stay informative.
void zero_output_layer(SpinnModel& model, int axis);

/// [sin(j s x), cos(j s x)] for j = 1..modes, sines first.
std::vector<double> fourier_encode(double x, int modes, double scale = 1.0);

using Orders = std::array<int, 3>;
constexpr int kMaxDerivativeOrder = 3;

/// Evaluation of a model on the tensor grid spanned by per-axis coordinate
/// lists, with per-axis input derivatives up to `max_orders`, and the reverse
/// pass accumulating parameter gradients from cotangents on grid fields.
/// Grid values are flattened with the first axis slowest.
class SpinnGrid {
public:
    SpinnGrid(const SpinnModel& model, std::vector<std::vector<double>> coords, Orders max_orders = {0, 0, 0});

    std::size_t points() const;
    /// d^{o_1} ... d^{o_d} f_channel on the grid.
    std::vector<double> field(int channel, Orders orders) const;
    /// target += scale * field(channel, orders).
    void accumulate_field(int channel, Orders orders, double scale, std::vector<double>& target) const;
    /// Registers dL/d(field(channel, orders)) = scale * cotangent.
    void add_cotangent(int channel, Orders orders, const std::vector<double>& cotangent, double scale = 1.0);
    /// dL/dparams for the cotangents registered so far.
    std::vector<double> param_gradient() const;

    const SpinnModel& model() const { return *model_; }

private:
    struct AxisPass {
        std::vector<std::vector<RowMatrix>> pre;  // [hidden layer][order]
        std::vector<std::vector<RowMatrix>> act;  // [0] = features, [l + 1] = hidden layer l
        std::vector<RowMatrix> out;               // [order] N x (rank * channels)
        std::vector<RowMatrix> out_bar;
    };
    void forward_axis(int axis);
    void backward_axis(int axis, double* grad) const;
    void check_orders(const Orders& orders) const;

    const SpinnModel* model_;
    std::vector<std::vector<double>> coords_;
    Orders max_orders_;
    std::vector<AxisPass> passes_;
};

std::vector<double> eval_grid(const SpinnModel& model, const std::vector<std::vector<double>>& coords,
                              int channel = 0);
std::vector<double> eval_derivatives(const SpinnModel& model, const std::vector<std::vector<double>>& coords,
                                     Orders orders, int channel = 0);
/// A loss over grid fields: receives the requested fields, returns the value
/// and writes dL/dfield into `cotangents` (same shapes).
struct FieldRequest {
    int channel = 0;
    Orders orders{0, 0, 0};
};
using GridLoss = std::function<double(const std::vector<std::vector<double>>& fields,
                                      std::vector<std::vector<double>>& cotangents)>;

/// Value and parameter gradient of `loss` evaluated on the model's grid fields.
double param_gradient(const SpinnModel& model, const std::vector<std::vector<double>>& coords,
                      const std::vector<FieldRequest>& requests, const GridLoss& loss, std::vector<double>& grad);

// Model file ("SPNN"): magic | axes, rank, width, depth, modes, channels as
// u32 | per-axis feature scale f64 | parameters f64. Little-endian.
void write_model(const std::filesystem::path& path, const SpinnModel& model);
SpinnModel read_model(const std::filesystem::path& path);

}  // namespace kolmo
