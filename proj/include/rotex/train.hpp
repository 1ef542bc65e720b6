#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rotex/data.hpp"
#include "rotex/net.hpp"

namespace rotex {

struct TrainConfig {
    double learning_rate = 0.0001;
    double momentum = 0.9;
    double dropout_rate = 0.2;
    double weight_decay_phase2 = 0.1;
    std::size_t batch_size = 24;
    std::size_t max_epochs = 2000;
    std::size_t patience = 20;
    std::uint64_t seed = 0;
    std::size_t rotations = 32;   // R
    std::size_t groups = 16;      // M
    std::size_t side = 35;        // n
    std::size_t crop = 88;
    std::size_t pool_rows = 2;
    std::size_t pool_cols = 2;
    double init_stddev = 0.01;
    bool augment_rotations = false;  // random rotation angle per image per epoch
    unsigned threads = 1;
    CorrMethod method = CorrMethod::kAuto;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    int phase = 1;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> records;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
};

// velocity <- momentum * velocity - lr * (grad + decay * param)
// param <- param + velocity
// Callers pass decay = 0 for bias parameters.
void sgd_update(std::span<double> param, std::span<const double> grad, std::span<double> velocity,
                double lr, double momentum, double decay);

// Momentum state for every network parameter. Weight decay is applied to the
// canonical filters and fc weights, never to a bias.
class SgdOptimizer {
  public:
    explicit SgdOptimizer(const NetworkParams& params);
    void step(NetworkParams& params, const NetGradients& grads, double lr, double momentum,
              double decay);

  private:
    std::vector<std::vector<double>> filter_velocity_;
    std::vector<double> conv_bias_velocity_;
    std::vector<double> fc_weight_velocity_;
    std::vector<double> fc_bias_velocity_;
};

// Stratified random split; validation receives ceil(fraction * count) per
// class, at least 1. Errors if a class cannot keep a training sample.
void holdout_split(const DatasetSplit& dataset, double fraction, std::uint64_t seed,
                   DatasetSplit& train_out, DatasetSplit& val_out);

// Three-phase schedule: no decay until the epoch training loss halves, then
// exactly 100 epochs at weight_decay_phase2, then no decay until the
// validation loss stops improving for `patience` epochs (or max_epochs).
// Returns the parameters with the best validation loss seen at any epoch.
TrainHistory train(NetworkParams& params, const DatasetSplit& train_split,
                   const DatasetSplit& val_split, const TrainConfig& config);

double evaluate_accuracy(const NetworkParams& params, const RotatedBank& bank,
                         const DatasetSplit& split, const TrainConfig& config,
                         std::vector<std::size_t>* predictions = nullptr);

void save_history_csv(const TrainHistory& history, const std::string& path);

}  // namespace rotex
