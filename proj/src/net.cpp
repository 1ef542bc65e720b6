#include "rotex/net.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "rotex/errors.hpp"
#include "rotex/parallel.hpp"
#include "rotex/serialize.hpp"

namespace rotex {

NetworkParams NetworkParams::random_init(std::size_t groups, std::size_t rotations,
                                         std::size_t side, std::size_t classes,
                                         std::size_t pool_rows, std::size_t pool_cols,
                                         double stddev, std::mt19937_64& rng) {
    NetworkParams p;
    p.bank = FilterBank::random_init(groups, rotations, side, stddev, rng);
    p.classes = classes;
    std::normal_distribution<double> dist(0.0, stddev);
    p.fc_weights.resize(classes * groups);
    for (double& w : p.fc_weights) w = dist(rng);
    p.fc_biases.assign(classes, 0.0);
    p.pool_rows = pool_rows;
    p.pool_cols = pool_cols;
    p.validate();
    return p;
}

void NetworkParams::validate() const {
    bank.validate();
    if (classes < 2) throw ConfigError("network needs at least 2 classes");
    if (fc_weights.size() != classes * bank.groups || fc_biases.size() != classes) {
        throw ShapeError("network: fully connected parameter shapes inconsistent");
    }
    if (pool_rows == 0 || pool_cols == 0) throw ConfigError("network: pooling grid must be >= 1x1");
    for (double w : fc_weights) {
        if (!std::isfinite(w)) throw NumericError("network: non-finite fc weight");
    }
    for (double b : fc_biases) {
        if (!std::isfinite(b)) throw NumericError("network: non-finite fc bias");
    }
    if (!std::isfinite(input_mean) || !std::isfinite(input_std) || input_std <= 0.0) {
        throw NumericError("network: invalid input normalization");
    }
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out(i) = std::max(0.0, out(i));
    return out;
}

Tensor relu_backward(const Tensor& grad, const Tensor& forward_input) {
    if (!grad.same_shape(forward_input)) throw ShapeError("relu_backward: shape mismatch");
    Tensor out = grad;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (forward_input(i) <= 0.0) out(i) = 0.0;
    }
    return out;
}

MaxPoolOut spatial_max_pool(const Tensor& x, std::size_t grid_rows, std::size_t grid_cols) {
    x.require_rank(3, "spatial_max_pool");
    std::size_t m = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (grid_rows == 0 || grid_cols == 0 || grid_rows > h || grid_cols > w) {
        throw ConfigError("spatial_max_pool: grid " + std::to_string(grid_rows) + "x" +
                          std::to_string(grid_cols) + " does not fit a " + std::to_string(h) + "x" +
                          std::to_string(w) + " map");
    }
    std::size_t win_h = h / grid_rows, win_w = w / grid_cols;
    MaxPoolOut out;
    out.pooled = Tensor({m, grid_rows, grid_cols});
    out.winners.assign(m * grid_rows * grid_cols, 0);
    for (std::size_t g = 0; g < m; ++g) {
        for (std::size_t gr = 0; gr < grid_rows; ++gr) {
            for (std::size_t gc = 0; gc < grid_cols; ++gc) {
                std::size_t r0 = gr * win_h, c0 = gc * win_w;
                double best = x(g, r0, c0);
                std::size_t best_pos = r0 * w + c0;
                for (std::size_t r = r0; r < r0 + win_h; ++r) {
                    for (std::size_t c = c0; c < c0 + win_w; ++c) {
                        if (x(g, r, c) > best) {
                            best = x(g, r, c);
                            best_pos = r * w + c;
                        }
                    }
                }
                out.pooled(g, gr, gc) = best;
                out.winners[(g * grid_rows + gr) * grid_cols + gc] =
                    static_cast<std::uint32_t>(best_pos);
            }
        }
    }
    return out;
}

Tensor spatial_max_pool_backward(const Tensor& grad, const std::vector<std::uint32_t>& winners,
                                 std::size_t map_rows, std::size_t map_cols) {
    grad.require_rank(3, "spatial_max_pool_backward");
    std::size_t m = grad.dim(0);
    if (winners.size() != grad.size()) {
        throw StateError("spatial_max_pool_backward: winner count does not match gradient");
    }
    Tensor out({m, map_rows, map_cols});
    std::size_t per_group = grad.dim(1) * grad.dim(2);
    for (std::size_t g = 0; g < m; ++g) {
        for (std::size_t i = 0; i < per_group; ++i) {
            std::size_t pos = winners[g * per_group + i];
            out(g * map_rows * map_cols + pos) += grad(g * per_group + i);
        }
    }
    return out;
}

std::vector<double> global_avg_pool(const Tensor& x) {
    x.require_rank(3, "global_avg_pool");
    std::size_t m = x.dim(0), count = x.dim(1) * x.dim(2);
    std::vector<double> out(m, 0.0);
    for (std::size_t g = 0; g < m; ++g) {
        double acc = 0.0;
        for (std::size_t i = 0; i < count; ++i) acc += x(g * count + i);
        out[g] = acc / static_cast<double>(count);
    }
    return out;
}

Tensor global_avg_pool_backward(const std::vector<double>& grad, std::size_t grid_rows,
                                std::size_t grid_cols) {
    Tensor out({grad.size(), grid_rows, grid_cols});
    double inv = 1.0 / static_cast<double>(grid_rows * grid_cols);
    for (std::size_t g = 0; g < grad.size(); ++g) {
        for (std::size_t i = 0; i < grid_rows * grid_cols; ++i) {
            out(g * grid_rows * grid_cols + i) = grad[g] * inv;
        }
    }
    return out;
}

std::vector<double> fully_connected(const std::vector<double>& v, const NetworkParams& params) {
    if (v.size() != params.bank.groups) {
        throw ShapeError("fully_connected: feature length " + std::to_string(v.size()) +
                         " does not match group count " + std::to_string(params.bank.groups));
    }
    std::vector<double> scores(params.classes);
    for (std::size_t c = 0; c < params.classes; ++c) {
        double acc = params.fc_biases[c];
        const double* row = params.fc_weights.data() + c * v.size();
        for (std::size_t j = 0; j < v.size(); ++j) acc += row[j] * v[j];
        scores[c] = acc;
    }
    return scores;
}

std::vector<double> softmax(const std::vector<double>& scores) {
    double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    double z = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp(scores[i] - top);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

double softmax_log_loss(const std::vector<double>& scores, std::size_t label) {
    if (label >= scores.size()) {
        throw ConfigError("softmax_log_loss: label " + std::to_string(label) + " out of range");
    }
    double top = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double s : scores) z += std::exp(s - top);
    return std::log(z) - (scores[label] - top);
}

std::vector<double> softmax_log_loss_backward(const std::vector<double>& scores,
                                              std::size_t label) {
    if (label >= scores.size()) {
        throw ConfigError("softmax_log_loss: label " + std::to_string(label) + " out of range");
    }
    std::vector<double> g = softmax(scores);
    g[label] -= 1.0;
    return g;
}

DropoutMask draw_dropout_mask(std::size_t groups, double rate, std::mt19937_64& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
    DropoutMask mask;
    mask.keep.assign(groups, 1);
    mask.scale = 1.0 / (1.0 - rate);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (std::size_t g = 0; g < groups; ++g) {
        if (uniform(rng) < rate) mask.keep[g] = 0;
    }
    return mask;
}

void apply_dropout(Tensor& activations, const DropoutMask& mask) {
    activations.require_rank(3, "apply_dropout");
    if (activations.dim(0) != mask.keep.size()) {
        throw ShapeError("apply_dropout: mask does not match group count");
    }
    std::size_t per_group = activations.dim(1) * activations.dim(2);
    for (std::size_t g = 0; g < mask.keep.size(); ++g) {
        double factor = mask.keep[g] ? mask.scale : 0.0;
        for (std::size_t i = 0; i < per_group; ++i) activations(g * per_group + i) *= factor;
    }
}

NetForward net_forward(const std::vector<Tensor>& images, const std::vector<std::size_t>& labels,
                       const NetworkParams& params, const RotatedBank& bank,
                       const ForwardOptions& opts, std::mt19937_64* rng) {
    params.validate();
    if (!labels.empty() && labels.size() != images.size()) {
        throw ShapeError("net_forward: label count does not match batch size");
    }
    bool train = opts.mode == Mode::kTrain;

    RotConvOut conv = rotconv_forward(images, bank, opts.method, opts.threads);
    std::size_t m = params.bank.groups;

    DropoutMask mask;
    if (opts.fixed_mask) {
        mask = *opts.fixed_mask;
    } else if (train && opts.dropout_rate > 0.0) {
        if (!rng) throw StateError("net_forward: dropout in train mode needs an RNG");
        mask = draw_dropout_mask(m, opts.dropout_rate, *rng);
    } else {
        if (opts.dropout_rate < 0.0 || opts.dropout_rate >= 1.0) {
            throw ConfigError("dropout rate must lie in [0, 1)");
        }
        mask.keep.assign(m, 1);  // eval mode or rate 0: identity
        mask.scale = 1.0;
    }

    NetForward out;
    out.cache.images = images;
    out.cache.orientation = std::move(conv.cache);
    out.cache.dropout = mask;
    out.cache.labels = labels;
    out.cache.grid_rows = params.pool_rows;
    out.cache.grid_cols = params.pool_cols;
    out.cache.pre_relu.resize(images.size());
    out.cache.pool_winners.resize(images.size());
    out.cache.pooled_means.resize(images.size());
    out.cache.scores.resize(images.size());
    out.scores.resize(images.size());

    std::vector<double> losses(images.size(), 0.0);
    parallel_for(images.size(), opts.threads, [&](std::size_t b) {
        Tensor act = std::move(conv.groupmax[b]);
        apply_dropout(act, mask);
        out.cache.pre_relu[b] = act;
        Tensor rectified = relu(act);
        MaxPoolOut pooled = spatial_max_pool(rectified, params.pool_rows, params.pool_cols);
        out.cache.pool_winners[b] = std::move(pooled.winners);
        std::vector<double> v = global_avg_pool(pooled.pooled);
        out.cache.pooled_means[b] = v;
        std::vector<double> scores = fully_connected(v, params);
        if (!labels.empty()) losses[b] = softmax_log_loss(scores, labels[b]);
        out.cache.scores[b] = scores;
        out.scores[b] = std::move(scores);
    });
    if (!labels.empty()) {
        for (double l : losses) out.loss_sum += l;
        out.cache.has_loss = true;
    }
    return out;
}

NetGradients net_backward(const ForwardCache& cache, const NetworkParams& params,
                          const RotatedBank& bank) {
    if (!cache.has_loss || cache.images.empty()) {
        throw StateError("net_backward: cache does not come from a loss-bearing forward pass");
    }
    std::size_t m = params.bank.groups;
    std::size_t batch = cache.images.size();
    std::size_t oh = cache.orientation.out_rows, ow = cache.orientation.out_cols;

    NetGradients grads;
    grads.fc_weights.assign(params.fc_weights.size(), 0.0);
    grads.fc_biases.assign(params.classes, 0.0);

    std::vector<Tensor> conv_grads(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        std::vector<double> dscores =
            softmax_log_loss_backward(cache.scores[b], cache.labels[b]);
        const std::vector<double>& v = cache.pooled_means[b];
        std::vector<double> dv(m, 0.0);
        for (std::size_t c = 0; c < params.classes; ++c) {
            grads.fc_biases[c] += dscores[c];
            for (std::size_t j = 0; j < m; ++j) {
                grads.fc_weights[c * m + j] += dscores[c] * v[j];
                dv[j] += params.fc_weights[c * m + j] * dscores[c];
            }
        }
        Tensor dpool = global_avg_pool_backward(dv, cache.grid_rows, cache.grid_cols);
        Tensor dmap = spatial_max_pool_backward(dpool, cache.pool_winners[b], oh, ow);
        Tensor drelu = relu_backward(dmap, cache.pre_relu[b]);
        apply_dropout(drelu, cache.dropout);  // same mask and scale as forward
        conv_grads[b] = std::move(drelu);
    }

    RotConvGrads conv = rotconv_backward(conv_grads, cache.orientation, cache.images, bank);
    grads.canonical = std::move(conv.canonical);
    grads.conv_biases = std::move(conv.biases);
    return grads;
}

namespace {
constexpr char kCkptMagic[8] = {'R', 'O', 'T', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const NetworkParams& params, const std::string& path) {
    params.validate();
    BinaryWriter w(path);
    w.magic(kCkptMagic);
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(params.bank.groups));
    w.u32(static_cast<std::uint32_t>(params.bank.rotations));
    w.u32(static_cast<std::uint32_t>(params.bank.side));
    w.u32(static_cast<std::uint32_t>(params.classes));
    w.u32(static_cast<std::uint32_t>(params.pool_rows));
    w.u32(static_cast<std::uint32_t>(params.pool_cols));
    w.u32(static_cast<std::uint32_t>(params.crop));
    w.f64(params.input_mean);
    w.f64(params.input_std);
    for (const Tensor& f : params.bank.canonical) w.f64_block(f.values());
    w.f64_block(params.bank.biases);
    w.f64_block(params.fc_weights);
    w.f64_block(params.fc_biases);
    w.close();

    nlohmann::json meta = {{"magic", "ROTCKPT1"},
                           {"version", 1},
                           {"groups", params.bank.groups},
                           {"rotations", params.bank.rotations},
                           {"side", params.bank.side},
                           {"classes", params.classes},
                           {"pool_rows", params.pool_rows},
                           {"pool_cols", params.pool_cols},
                           {"crop", params.crop},
                           {"input_mean", params.input_mean},
                           {"input_std", params.input_std}};
    write_text_file(path + ".json", meta.dump(2) + "\n");
}

NetworkParams load_checkpoint(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kCkptMagic);
    std::uint32_t version = r.u32();
    if (version != 1) throw IngestError(path + ": unsupported checkpoint version");
    NetworkParams p;
    p.bank.groups = r.u32();
    p.bank.rotations = r.u32();
    p.bank.side = r.u32();
    p.classes = r.u32();
    p.pool_rows = r.u32();
    p.pool_cols = r.u32();
    p.crop = r.u32();
    p.input_mean = r.f64();
    p.input_std = r.f64();
    for (std::size_t i = 0; i < p.bank.groups; ++i) {
        p.bank.canonical.push_back(
            Tensor::from_values({p.bank.side, p.bank.side}, r.f64_block(p.bank.side * p.bank.side)));
    }
    p.bank.biases = r.f64_block(p.bank.groups);
    p.fc_weights = r.f64_block(p.classes * p.bank.groups);
    p.fc_biases = r.f64_block(p.classes);
    p.validate();
    return p;
}

}  // namespace rotex
