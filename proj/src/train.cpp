#include "rotex/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rotex/errors.hpp"
#include "rotex/parallel.hpp"
#include "rotex/rotate.hpp"
#include "rotex/serialize.hpp"

namespace rotex {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (crop != 0 && crop < side) throw ConfigError("crop must be at least the filter side");
    if (rotations == 0 || groups == 0) throw ConfigError("need R >= 1 and M >= 1");
    if (side < 3 || side % 2 == 0) throw ConfigError("filter side must be odd and >= 3");
}

void sgd_update(std::span<double> param, std::span<const double> grad, std::span<double> velocity,
                double lr, double momentum, double decay) {
    if (param.size() != grad.size() || param.size() != velocity.size()) {
        throw ShapeError("sgd_update: parameter, gradient and velocity sizes differ");
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
        velocity[i] = momentum * velocity[i] - lr * (grad[i] + decay * param[i]);
        param[i] += velocity[i];
    }
}

SgdOptimizer::SgdOptimizer(const NetworkParams& params) {
    for (const Tensor& f : params.bank.canonical) {
        filter_velocity_.emplace_back(f.size(), 0.0);
    }
    conv_bias_velocity_.assign(params.bank.biases.size(), 0.0);
    fc_weight_velocity_.assign(params.fc_weights.size(), 0.0);
    fc_bias_velocity_.assign(params.fc_biases.size(), 0.0);
}

void SgdOptimizer::step(NetworkParams& params, const NetGradients& grads, double lr,
                        double momentum, double decay) {
    for (std::size_t i = 0; i < params.bank.canonical.size(); ++i) {
        sgd_update(params.bank.canonical[i].values(), grads.canonical[i].values(),
                   filter_velocity_[i], lr, momentum, decay);
    }
    // biases never see weight decay
    sgd_update(params.bank.biases, grads.conv_biases, conv_bias_velocity_, lr, momentum, 0.0);
    sgd_update(params.fc_weights, grads.fc_weights, fc_weight_velocity_, lr, momentum, decay);
    sgd_update(params.fc_biases, grads.fc_biases, fc_bias_velocity_, lr, momentum, 0.0);
}

void holdout_split(const DatasetSplit& dataset, double fraction, std::uint64_t seed,
                   DatasetSplit& train_out, DatasetSplit& val_out) {
    if (fraction <= 0.0 || fraction >= 1.0) throw ConfigError("holdout fraction must lie in (0, 1)");
    dataset.validate();
    train_out = DatasetSplit{};
    val_out = DatasetSplit{};
    train_out.class_count = val_out.class_count = dataset.class_count;

    std::vector<std::vector<std::size_t>> by_class(dataset.class_count);
    for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset.labels[i]].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<bool> in_val(dataset.size(), false);
    for (std::size_t cls = 0; cls < by_class.size(); ++cls) {
        auto& idx = by_class[cls];
        if (idx.empty()) throw ConfigError("holdout_split: class " + std::to_string(cls) + " is empty");
        std::size_t take = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(idx.size())));
        take = std::max<std::size_t>(take, 1);
        if (idx.size() - take < 1) {
            throw ConfigError("holdout_split: class " + std::to_string(cls) +
                              " would keep no training samples");
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < take; ++i) in_val[idx[i]] = true;
    }
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        DatasetSplit& target = in_val[i] ? val_out : train_out;
        target.images.push_back(dataset.images[i]);
        target.labels.push_back(dataset.labels[i]);
        target.names.push_back(dataset.names[i]);
    }
}

namespace {

struct Normalizer {
    double mean = 0.0;
    double stddev = 1.0;

    static Normalizer fit(const DatasetSplit& split) {
        double sum = 0.0, sum_sq = 0.0;
        std::size_t count = 0;
        for (const Tensor& img : split.images) {
            for (std::size_t i = 0; i < img.size(); ++i) {
                sum += img(i);
                sum_sq += img(i) * img(i);
            }
            count += img.size();
        }
        Normalizer n;
        n.mean = sum / static_cast<double>(count);
        double var = sum_sq / static_cast<double>(count) - n.mean * n.mean;
        n.stddev = std::sqrt(std::max(var, 1e-12));
        return n;
    }

    Tensor apply(const Tensor& img) const {
        Tensor out = img;
        for (std::size_t i = 0; i < out.size(); ++i) out(i) = (out(i) - mean) / stddev;
        return out;
    }
};

// Rotation augmentation and cropping for one epoch's batch member.
Tensor prepare_image(const Tensor& image, const TrainConfig& config, double angle,
                     const Normalizer& norm) {
    Tensor img = image;
    if (config.crop != 0) {
        img = augment_rotate_crop(img, angle, config.crop);
    } else if (angle != 0.0) {
        img = rotate_image(img, angle);
    }
    return norm.apply(img);
}

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

EvalResult evaluate(const NetworkParams& params, const RotatedBank& bank,
                    const DatasetSplit& split, const TrainConfig& config, const Normalizer& norm,
                    std::vector<std::size_t>* predictions) {
    ForwardOptions opts;
    opts.mode = Mode::kEval;
    opts.method = config.method;
    opts.threads = config.threads;

    EvalResult result;
    std::size_t correct = 0;
    if (predictions) predictions->clear();
    std::size_t chunk = std::max<std::size_t>(config.batch_size, 32);
    for (std::size_t start = 0; start < split.size(); start += chunk) {
        std::size_t stop = std::min(start + chunk, split.size());
        std::vector<Tensor> batch;
        std::vector<std::size_t> labels;
        batch.reserve(stop - start);
        for (std::size_t i = start; i < stop; ++i) {
            batch.push_back(prepare_image(split.images[i], config, 0.0, norm));
            labels.push_back(split.labels[i]);
        }
        NetForward fwd = net_forward(batch, labels, params, bank, opts);
        result.loss += fwd.loss_sum;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            std::size_t arg = static_cast<std::size_t>(
                std::max_element(fwd.scores[i].begin(), fwd.scores[i].end()) -
                fwd.scores[i].begin());
            if (predictions) predictions->push_back(arg);
            if (arg == labels[i]) ++correct;
        }
    }
    result.loss /= static_cast<double>(split.size());
    result.accuracy = static_cast<double>(correct) / static_cast<double>(split.size());
    return result;
}

}  // namespace

double evaluate_accuracy(const NetworkParams& params, const RotatedBank& bank,
                         const DatasetSplit& split, const TrainConfig& config,
                         std::vector<std::size_t>* predictions) {
    Normalizer norm{params.input_mean, params.input_std};
    return evaluate(params, bank, split, config, norm, predictions).accuracy;
}

TrainHistory train(NetworkParams& params, const DatasetSplit& train_split,
                   const DatasetSplit& val_split, const TrainConfig& config) {
    config.validate();
    params.validate();
    train_split.validate();
    val_split.validate();
    if (train_split.size() == 0 || val_split.size() == 0) {
        throw ConfigError("train: empty train or validation split");
    }

    Normalizer norm = Normalizer::fit(train_split);
    params.input_mean = norm.mean;
    params.input_std = norm.stddev;
    params.crop = config.crop;

    std::mt19937_64 rng(config.seed);
    SgdOptimizer optimizer(params);

    TrainHistory history;
    NetworkParams best_params = params;
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;

    int phase = 1;
    double first_epoch_loss = -1.0;
    std::size_t phase2_remaining = 0;
    std::size_t epochs_since_improve = 0;

    std::vector<std::size_t> order(train_split.size());
    std::iota(order.begin(), order.end(), 0);

    ForwardOptions train_opts;
    train_opts.mode = Mode::kTrain;
    train_opts.dropout_rate = config.dropout_rate;
    train_opts.method = config.method;
    train_opts.threads = config.threads;

    std::uniform_real_distribution<double> uniform_angle(0.0, 2.0 * M_PI);

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        double decay = phase == 2 ? config.weight_decay_phase2 : 0.0;
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::size_t stop = std::min(start + config.batch_size, order.size());
            std::vector<Tensor> batch;
            std::vector<std::size_t> labels;
            batch.reserve(stop - start);
            for (std::size_t k = start; k < stop; ++k) {
                double angle = config.augment_rotations ? uniform_angle(rng) : 0.0;
                batch.push_back(prepare_image(train_split.images[order[k]], config, angle, norm));
                labels.push_back(train_split.labels[order[k]]);
            }
            // rotated copies are re-derived from the canonical filters after
            // every update (weight tying)
            RotatedBank bank(params.bank, params.bank.rotations);
            NetForward fwd = net_forward(batch, labels, params, bank, train_opts, &rng);
            if (!std::isfinite(fwd.loss_sum)) {
                throw NumericError("training diverged at epoch " + std::to_string(epoch));
            }
            epoch_loss += fwd.loss_sum;
            seen += batch.size();

            NetGradients grads = net_backward(fwd.cache, params, bank);
            double inv_batch = 1.0 / static_cast<double>(batch.size());
            for (Tensor& g : grads.canonical)
                for (std::size_t i = 0; i < g.size(); ++i) g(i) *= inv_batch;
            for (double& g : grads.conv_biases) g *= inv_batch;
            for (double& g : grads.fc_weights) g *= inv_batch;
            for (double& g : grads.fc_biases) g *= inv_batch;
            optimizer.step(params, grads, config.learning_rate, config.momentum, decay);
        }
        epoch_loss /= static_cast<double>(seen);

        RotatedBank eval_bank(params.bank, params.bank.rotations);
        EvalResult val = evaluate(params, eval_bank, val_split, config, norm, nullptr);
        if (!std::isfinite(val.loss)) {
            throw NumericError("validation loss diverged at epoch " + std::to_string(epoch));
        }

        history.records.push_back({epoch, phase, epoch_loss, val.loss, val.accuracy});

        if (val.loss < best_val_loss) {
            best_val_loss = val.loss;
            best_params = params;
            best_epoch = epoch;
            epochs_since_improve = 0;
        } else {
            ++epochs_since_improve;
        }

        if (phase == 1) {
            if (first_epoch_loss < 0.0) first_epoch_loss = epoch_loss;
            if (epoch_loss <= 0.5 * first_epoch_loss) {
                phase = 2;
                phase2_remaining = 100;
            }
        } else if (phase == 2) {
            if (--phase2_remaining == 0) {
                phase = 3;
                epochs_since_improve = 0;
            }
        } else if (epochs_since_improve >= config.patience) {
            break;
        }
    }

    params = best_params;
    history.best_epoch = best_epoch;
    history.best_val_loss = best_val_loss;
    return history;
}

void save_history_csv(const TrainHistory& history, const std::string& path) {
    std::ostringstream out;
    out << "epoch,phase,train_loss,val_loss,val_acc\n";
    out.precision(12);
    for (const EpochRecord& r : history.records) {
        out << r.epoch << "," << r.phase << "," << r.train_loss << "," << r.val_loss << ","
            << r.val_accuracy << "\n";
    }
    write_text_file(path, out.str());
}

}  // namespace rotex
