#include "rotex/rotconv.hpp"

#include <cstdlib>
#include <string>

#include "rotex/errors.hpp"
#include "rotex/parallel.hpp"

namespace rotex {

unsigned default_thread_count() {
    if (const char* env = std::getenv("ROTEX_THREADS")) {
        long v = std::atol(env);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

namespace {

void check_batch(const std::vector<Tensor>& images, std::size_t side) {
    if (images.empty()) throw ShapeError("rotconv: empty batch");
    for (const Tensor& img : images) {
        img.require_rank(2, "rotconv image");
        if (!img.same_shape(images.front())) {
            throw ShapeError("rotconv: images in a batch must share one shape");
        }
    }
    if (images.front().rows() < side || images.front().cols() < side) {
        throw ShapeError("rotconv: image " + std::to_string(images.front().rows()) + "x" +
                         std::to_string(images.front().cols()) + " smaller than filter side " +
                         std::to_string(side));
    }
}

// Max/argmax across per-angle response maps for one image.
void fold_responses(const std::vector<Tensor>& responses, double bias, std::size_t group,
                    Tensor& groupmax, std::uint16_t* winner) {
    std::size_t count = responses.front().size();
    for (std::size_t p = 0; p < count; ++p) {
        double best = responses[0](p);
        std::uint16_t best_a = 0;
        for (std::size_t a = 1; a < responses.size(); ++a) {
            double v = responses[a](p);
            if (v > best) {
                best = v;
                best_a = static_cast<std::uint16_t>(a);
            }
        }
        groupmax(group * count + p) = best + bias;
        winner[p] = best_a;
    }
}

}  // namespace

RotConvOut rotconv_forward(const std::vector<Tensor>& images, const RotatedBank& bank,
                           CorrMethod method, unsigned threads) {
    check_batch(images, bank.side());
    std::size_t h = images.front().rows(), w = images.front().cols();
    std::size_t oh = h - bank.side() + 1, ow = w - bank.side() + 1;
    std::size_t m = bank.groups(), r_eval = bank.rotations();

    bool use_fft = method == CorrMethod::kFft ||
                   (method == CorrMethod::kAuto && bank.side() * bank.side() >= 169);
    if (use_fft) bank.filter_spectrum(0, 0, h, w);  // build the cache before going parallel

    RotConvOut out;
    out.groupmax.resize(images.size());
    out.cache.batch = images.size();
    out.cache.groups = m;
    out.cache.out_rows = oh;
    out.cache.out_cols = ow;
    out.cache.r_eval = r_eval;
    out.cache.image_rows = h;
    out.cache.image_cols = w;
    out.cache.winner.assign(images.size() * m * oh * ow, 0);

    parallel_for(images.size(), threads, [&](std::size_t b) {
        const Tensor& img = images[b];
        Spectrum img_spec;
        if (use_fft) img_spec = fft2(img);
        Tensor groupmax({m, oh, ow});
        std::vector<Tensor> responses(r_eval);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t a = 0; a < r_eval; ++a) {
                responses[a] = use_fft
                                   ? xcorr2_valid_from_spectra(img_spec,
                                                               bank.filter_spectrum(i, a, h, w), oh, ow)
                                   : xcorr2_valid_direct(img, bank.filter(i, a));
            }
            std::uint16_t* winner = out.cache.winner.data() + ((b * m + i) * oh * ow);
            fold_responses(responses, bank.bias(i), i, groupmax, winner);
        }
        out.groupmax[b] = std::move(groupmax);
    });
    return out;
}

RotConvOut rotconv_forward(const std::vector<Tensor>& images, const FilterBank& bank,
                           std::size_t r_eval, CorrMethod method) {
    RotatedBank rotated(bank, r_eval);
    return rotconv_forward(images, rotated, method);
}

RotConvOut rotconv_forward_ops(const std::vector<Tensor>& images, const FilterBank& bank,
                               const std::vector<RotationOperator>& ops, CorrMethod method) {
    bank.validate();
    if (ops.empty()) throw ConfigError("rotconv: need at least one rotation operator");
    check_batch(images, bank.side);
    std::size_t h = images.front().rows(), w = images.front().cols();
    std::size_t oh = h - bank.side + 1, ow = w - bank.side + 1;

    RotConvOut out;
    out.cache.batch = images.size();
    out.cache.groups = bank.groups;
    out.cache.out_rows = oh;
    out.cache.out_cols = ow;
    out.cache.r_eval = ops.size();
    out.cache.image_rows = h;
    out.cache.image_cols = w;
    out.cache.winner.assign(images.size() * bank.groups * oh * ow, 0);

    for (std::size_t b = 0; b < images.size(); ++b) {
        Tensor groupmax({bank.groups, oh, ow});
        std::vector<Tensor> responses(ops.size());
        for (std::size_t i = 0; i < bank.groups; ++i) {
            for (std::size_t a = 0; a < ops.size(); ++a) {
                responses[a] = xcorr2_valid(images[b], rotate_filter(ops[a], bank.canonical[i]),
                                            method);
            }
            std::uint16_t* winner = out.cache.winner.data() + ((b * bank.groups + i) * oh * ow);
            fold_responses(responses, bank.biases[i], i, groupmax, winner);
        }
        out.groupmax.push_back(std::move(groupmax));
    }
    return out;
}

RotConvGrads rotconv_backward(const std::vector<Tensor>& grad_out, const OrientationCache& cache,
                              const std::vector<Tensor>& images, const RotatedBank& bank) {
    if (images.size() != cache.batch || grad_out.size() != cache.batch) {
        throw StateError("rotconv_backward: batch size does not match the forward cache");
    }
    if (bank.groups() != cache.groups || bank.rotations() != cache.r_eval) {
        throw StateError("rotconv_backward: bank does not match the forward cache");
    }
    std::size_t n = bank.side();
    std::size_t oh = cache.out_rows, ow = cache.out_cols;
    for (std::size_t b = 0; b < images.size(); ++b) {
        if (images[b].rows() != cache.image_rows || images[b].cols() != cache.image_cols) {
            throw StateError("rotconv_backward: image shape does not match the forward cache");
        }
        if (grad_out[b].rank() != 3 || grad_out[b].dim(0) != cache.groups ||
            grad_out[b].dim(1) != oh || grad_out[b].dim(2) != ow) {
            throw StateError("rotconv_backward: gradient shape does not match the forward cache");
        }
    }

    RotConvGrads grads;
    grads.canonical.assign(cache.groups, Tensor({n, n}));
    grads.biases.assign(cache.groups, 0.0);

    // Per (group, angle) gradients w.r.t. the rotated copies.
    std::vector<Tensor> rotated_grads(cache.groups * cache.r_eval, Tensor({n, n}));
    for (std::size_t b = 0; b < images.size(); ++b) {
        const Tensor& img = images[b];
        for (std::size_t i = 0; i < cache.groups; ++i) {
            for (std::size_t r = 0; r < oh; ++r) {
                for (std::size_t c = 0; c < ow; ++c) {
                    double g = grad_out[b](i, r, c);
                    if (g == 0.0) continue;
                    grads.biases[i] += g;
                    std::uint16_t a = cache.at(b, i, r, c);
                    Tensor& target = rotated_grads[i * cache.r_eval + a];
                    for (std::size_t u = 0; u < n; ++u) {
                        const double* img_row = img.data() + (r + u) * cache.image_cols + c;
                        double* tgt_row = target.data() + u * n;
                        for (std::size_t v = 0; v < n; ++v) tgt_row[v] += g * img_row[v];
                    }
                }
            }
        }
    }
    for (std::size_t i = 0; i < cache.groups; ++i) {
        for (std::size_t a = 0; a < cache.r_eval; ++a) {
            Tensor back = rotate_adjoint(bank.op(a), rotated_grads[i * cache.r_eval + a]);
            Tensor& acc = grads.canonical[i];
            for (std::size_t j = 0; j < acc.size(); ++j) acc(j) += back(j);
        }
    }
    return grads;
}

}  // namespace rotex
