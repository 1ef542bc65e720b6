#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rotex/filterbank.hpp"
#include "rotex/rotconv.hpp"
#include "rotex/tensor.hpp"

namespace rotex {

enum class Mode { kTrain, kEval };

// Full parameter set of the shallow network: the rotatable bank plus the
// linear classification head. Crop and input normalization travel with the
// parameters so evaluation reproduces the training-time preprocessing.
struct NetworkParams {
    FilterBank bank;
    std::size_t classes = 0;
    std::vector<double> fc_weights;  // classes x groups, row-major
    std::vector<double> fc_biases;   // classes
    std::size_t pool_rows = 2;
    std::size_t pool_cols = 2;
    std::size_t crop = 0;  // 0 = no crop
    double input_mean = 0.0;
    double input_std = 1.0;

    static NetworkParams random_init(std::size_t groups, std::size_t rotations, std::size_t side,
                                     std::size_t classes, std::size_t pool_rows,
                                     std::size_t pool_cols, double stddev, std::mt19937_64& rng);
    void validate() const;
};

Tensor relu(const Tensor& x);
// Gradient gate: passes grad only where the forward input was > 0.
Tensor relu_backward(const Tensor& grad, const Tensor& forward_input);

// Non-overlapping max-pool windows of size floor(h/G_r) x floor(w/G_c)
// anchored top-left; trailing rows/columns that do not fill a window are
// dropped. Winners are absolute row-major positions in the h x w map.
struct MaxPoolOut {
    Tensor pooled;                     // groups x G_r x G_c
    std::vector<std::uint32_t> winners;  // groups * G_r * G_c
};
MaxPoolOut spatial_max_pool(const Tensor& x, std::size_t grid_rows, std::size_t grid_cols);
Tensor spatial_max_pool_backward(const Tensor& grad, const std::vector<std::uint32_t>& winners,
                                 std::size_t map_rows, std::size_t map_cols);

std::vector<double> global_avg_pool(const Tensor& x);  // mean per group
Tensor global_avg_pool_backward(const std::vector<double>& grad, std::size_t grid_rows,
                                std::size_t grid_cols);

std::vector<double> fully_connected(const std::vector<double>& v, const NetworkParams& params);

std::vector<double> softmax(const std::vector<double>& scores);
double softmax_log_loss(const std::vector<double>& scores, std::size_t label);
// d loss / d scores = softmax(scores) - onehot(label)
std::vector<double> softmax_log_loss_backward(const std::vector<double>& scores, std::size_t label);

// Filter-level dropout: each rotation group is zeroed as a whole with
// probability rate and survivors are scaled by 1/(1-rate). One mask per
// weight-update iteration, shared across the batch.
struct DropoutMask {
    std::vector<std::uint8_t> keep;  // per group
    double scale = 1.0;
};
DropoutMask draw_dropout_mask(std::size_t groups, double rate, std::mt19937_64& rng);
void apply_dropout(Tensor& activations, const DropoutMask& mask);

struct ForwardCache {
    std::vector<Tensor> images;        // the batch as seen by the layer
    OrientationCache orientation;
    DropoutMask dropout;
    std::vector<Tensor> pre_relu;      // per image, groups x oh x ow (after dropout)
    std::vector<std::vector<std::uint32_t>> pool_winners;
    std::vector<std::vector<double>> pooled_means;  // per image, groups
    std::vector<std::vector<double>> scores;        // per image, classes
    std::vector<std::size_t> labels;
    std::size_t grid_rows = 0, grid_cols = 0;
    bool has_loss = false;
};

struct NetForward {
    double loss_sum = 0.0;  // sum of per-image losses; divide by batch for the mean
    std::vector<std::vector<double>> scores;
    ForwardCache cache;
};

struct NetGradients {
    std::vector<Tensor> canonical;
    std::vector<double> conv_biases;
    std::vector<double> fc_weights;
    std::vector<double> fc_biases;
};

struct ForwardOptions {
    Mode mode = Mode::kEval;
    double dropout_rate = 0.0;
    CorrMethod method = CorrMethod::kAuto;
    unsigned threads = 1;
    const DropoutMask* fixed_mask = nullptr;  // test hook: overrides the drawn mask
};

// Composes rotconv -> dropout -> relu -> spatial max-pool -> global average
// pool -> fully connected -> softmax loss. Labels may be empty, in which case
// only class scores are produced and the cache cannot drive a backward pass.
NetForward net_forward(const std::vector<Tensor>& images, const std::vector<std::size_t>& labels,
                       const NetworkParams& params, const RotatedBank& bank,
                       const ForwardOptions& opts, std::mt19937_64* rng = nullptr);

// Gradient of the summed (not averaged) batch loss for every parameter.
NetGradients net_backward(const ForwardCache& cache, const NetworkParams& params,
                          const RotatedBank& bank);

// Checkpoint container (magic ROTCKPT1) plus JSON sidecar at <path>.json.
void save_checkpoint(const NetworkParams& params, const std::string& path);
NetworkParams load_checkpoint(const std::string& path);

}  // namespace rotex
