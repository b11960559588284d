#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmba/matrix.hpp"

namespace cmba {

enum class Activation : std::uint8_t { Identity = 0, Tanh = 1, Relu = 2, Softmax = 3 };

const char* activation_name(Activation a);

// Fixed-topology dense feed-forward network. weights[l] has shape
// layer_sizes[l+1] x layer_sizes[l]; the hidden activation applies to every
// layer except the last, which uses output_activation. Instances are plain
// values: immutable once built, freely copied and shared across workers.
struct DenseNet {
    std::vector<std::size_t> layer_sizes;
    Activation hidden_activation = Activation::Tanh;
    Activation output_activation = Activation::Identity;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return weights.size(); }
};

// Seeded construction. Weights and biases are uniform in
// [-1/sqrt(fan_in), +1/sqrt(fan_in)], except that a softmax output layer is
// zero-initialized so the head starts at the uniform distribution.
DenseNet make_dense_net(std::vector<std::size_t> layer_sizes,
                        Activation hidden_activation,
                        Activation output_activation,
                        std::uint64_t seed);

// Throws ConfigError/ShapeError if the parameter shapes do not chain with
// layer_sizes.
void validate_net(const DenseNet& net);

std::vector<double> forward(const DenseNet& net, std::span<const double> x);

// Cached intermediate values of one forward pass, for reuse by the backward
// passes below.
struct ForwardTrace {
    std::vector<std::vector<double>> layer_inputs; // input to each layer
    std::vector<std::vector<double>> preacts;      // pre-activation per layer
    std::vector<double> output;
};

ForwardTrace forward_trace(const DenseNet& net, std::span<const double> x);

// J^T * upstream where J is the Jacobian of forward at x (output activation
// included).
std::vector<double> input_gradient(const DenseNet& net, std::span<const double> x,
                                   std::span<const double> upstream);
std::vector<double> input_gradient(const DenseNet& net, const ForwardTrace& trace,
                                   std::span<const double> upstream);

struct ParamGradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

// Gradients of <upstream, forward(x)> w.r.t. every weight and bias; also
// fills *input_grad when non-null.
ParamGradients parameter_gradients(const DenseNet& net, const ForwardTrace& trace,
                                   std::span<const double> upstream,
                                   std::vector<double>* input_grad = nullptr);

struct TrainConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    std::size_t batch_size = 256;
    std::size_t epochs = 20;
    // fit_regression trains one model per grid entry and keeps the best by
    // held-out MSE.
    std::vector<double> lr_grid = {1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3};
    std::uint64_t seed = 0;
};

struct FitResult {
    DenseNet net;
    double train_loss = 0.0;  // final MSE on the training split
    double holdout_mse = 0.0; // MSE of the returned net on the held-out split
    double chosen_lr = 0.0;
    // (learning rate, held-out MSE) for every grid entry, in grid order.
    std::vector<std::pair<double, double>> lr_holdout;
};

// AdamW regression on (inputs -> targets), one row per sample. Rows are
// shuffled once with cfg.seed; the last 10% form the held-out split used for
// learning-rate selection. Batch order is fixed after that shuffle so the
// selection is deterministic. MSE is the mean over rows of the squared error
// norm. epochs == 0 returns the input net unchanged.
FitResult fit_regression(const DenseNet& net, const Matrix& inputs, const Matrix& targets,
                         const TrainConfig& cfg);

// Model container format (little-endian binary, version 1):
//
//   bytes 0..7   magic "CMBANET1"
//   u32          layer count M (number of entries in layer_sizes, >= 2)
//   u32 * M      layer sizes
//   u8           hidden activation  (0 identity, 1 tanh, 2 relu, 3 softmax)
//   u8           output activation
//   for each of the M-1 layers:
//     f64 * (out*in)  weights, row-major
//     f64 * out       biases
//
// Doubles are stored as raw IEEE-754 bytes, so a round-trip reproduces
// forward outputs bit-exactly. Truncated or malformed files raise ParseError
// with layer/offset context.
void save_net(const DenseNet& net, const std::string& path);
DenseNet load_net(const std::string& path);

} // namespace cmba
