#include "rotex/rotate.hpp"

#include <cmath>
#include <string>

#include "rotex/errors.hpp"

namespace rotex {

namespace {

constexpr double kSnapTol = 1e-9;

// Keys cubic convolution kernel, a = -0.5.
double cubic_weight(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

}  // namespace

BicubicTaps bicubic_taps(double src_r, double src_c, std::size_t height, std::size_t width) {
    BicubicTaps taps;
    double rr = std::round(src_r);
    double rc = std::round(src_c);
    bool snap = std::abs(src_r - rr) < kSnapTol && std::abs(src_c - rc) < kSnapTol;
    if (snap) {
        long ir = static_cast<long>(rr), ic = static_cast<long>(rc);
        if (ir >= 0 && ic >= 0 && ir < static_cast<long>(height) && ic < static_cast<long>(width)) {
            taps.rows[0] = static_cast<int>(ir);
            taps.cols[0] = static_cast<int>(ic);
            taps.w[0] = 1.0;
            taps.count = 1;
        } else {
            taps.clipped = true;
        }
        return taps;
    }
    long br = static_cast<long>(std::floor(src_r));
    long bc = static_cast<long>(std::floor(src_c));
    double fr = src_r - static_cast<double>(br);
    double fc = src_c - static_cast<double>(bc);
    double wr[4], wc[4];
    for (int m = -1; m <= 2; ++m) {
        wr[m + 1] = cubic_weight(static_cast<double>(m) - fr);
        wc[m + 1] = cubic_weight(static_cast<double>(m) - fc);
    }
    for (int m = -1; m <= 2; ++m) {
        for (int k = -1; k <= 2; ++k) {
            double w = wr[m + 1] * wc[k + 1];
            if (w == 0.0) continue;
            long r = br + m, c = bc + k;
            if (r < 0 || c < 0 || r >= static_cast<long>(height) || c >= static_cast<long>(width)) {
                taps.clipped = true;
                continue;
            }
            taps.rows[taps.count] = static_cast<int>(r);
            taps.cols[taps.count] = static_cast<int>(c);
            taps.w[taps.count] = w;
            ++taps.count;
        }
    }
    return taps;
}

RotationOperator make_rotation_operator(std::size_t n, double angle) {
    if (n < 3 || n % 2 == 0) {
        throw ConfigError("rotation operator requires odd filter side >= 3, got " +
                          std::to_string(n));
    }
    RotationOperator op;
    op.n_ = n;
    op.angle_ = angle;
    op.mask_.assign(n * n, 0);
    op.row_ptr_.assign(n * n + 1, 0);

    const double center = static_cast<double>(n - 1) / 2.0;
    const double radius2 = center * center;
    const double ca = std::cos(angle), sa = std::sin(angle);

    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            std::size_t out = r * n + c;
            double dr = static_cast<double>(r) - center;
            double dc = static_cast<double>(c) - center;
            if (dr * dr + dc * dc > radius2 + 1e-12) {
                op.row_ptr_[out + 1] = op.col_idx_.size();
                continue;
            }
            op.mask_[out] = 1;
            // rotate the output coordinate by -angle about the center
            double src_r = center + dr * ca + dc * sa;
            double src_c = center - dr * sa + dc * ca;
            BicubicTaps taps = bicubic_taps(src_r, src_c, n, n);
            for (int t = 0; t < taps.count; ++t) {
                op.col_idx_.push_back(static_cast<std::uint32_t>(taps.rows[t] * static_cast<int>(n) +
                                                                 taps.cols[t]));
                op.weights_.push_back(taps.w[t]);
            }
            op.row_ptr_[out + 1] = op.col_idx_.size();
        }
    }
    return op;
}

Tensor RotationOperator::apply(const Tensor& filter) const {
    filter.require_rank(2, "rotate_filter");
    if (filter.rows() != n_ || filter.cols() != n_) {
        throw ShapeError("rotate_filter: filter side does not match operator");
    }
    Tensor out({n_, n_});
    for (std::size_t o = 0; o < n_ * n_; ++o) {
        double acc = 0.0;
        for (std::size_t e = row_ptr_[o]; e < row_ptr_[o + 1]; ++e) {
            acc += weights_[e] * filter(col_idx_[e]);
        }
        out(o) = acc;
    }
    return out;
}

Tensor RotationOperator::apply_adjoint(const Tensor& g) const {
    g.require_rank(2, "rotate_adjoint");
    if (g.rows() != n_ || g.cols() != n_) {
        throw ShapeError("rotate_adjoint: input side does not match operator");
    }
    Tensor out({n_, n_});
    for (std::size_t o = 0; o < n_ * n_; ++o) {
        double go = g(o);
        if (go == 0.0) continue;
        for (std::size_t e = row_ptr_[o]; e < row_ptr_[o + 1]; ++e) {
            out(col_idx_[e]) += weights_[e] * go;
        }
    }
    return out;
}

Tensor rotate_filter(const RotationOperator& op, const Tensor& filter) { return op.apply(filter); }

Tensor rotate_adjoint(const RotationOperator& op, const Tensor& g) { return op.apply_adjoint(g); }

Tensor disc_mask(const Tensor& filter) {
    filter.require_rank(2, "disc_mask");
    if (filter.rows() != filter.cols() || filter.rows() % 2 == 0) {
        throw ShapeError("disc_mask: filter must be square with odd side");
    }
    std::size_t n = filter.rows();
    double center = static_cast<double>(n - 1) / 2.0;
    double radius2 = center * center;
    Tensor out({n, n});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            double dr = static_cast<double>(r) - center;
            double dc = static_cast<double>(c) - center;
            if (dr * dr + dc * dc <= radius2 + 1e-12) out(r, c) = filter(r, c);
        }
    }
    return out;
}

namespace {

// Shared resampling core; `strict` turns clipped taps into a ConfigError.
Tensor resample_rotated(const Tensor& image, double angle, std::size_t out_rows,
                        std::size_t out_cols, std::size_t r0, std::size_t c0, bool strict) {
    std::size_t h = image.rows(), w = image.cols();
    double cy = static_cast<double>(h - 1) / 2.0;
    double cx = static_cast<double>(w - 1) / 2.0;
    double ca = std::cos(angle), sa = std::sin(angle);
    Tensor out({out_rows, out_cols});
    for (std::size_t r = 0; r < out_rows; ++r) {
        for (std::size_t c = 0; c < out_cols; ++c) {
            double dr = static_cast<double>(r0 + r) - cy;
            double dc = static_cast<double>(c0 + c) - cx;
            double src_r = cy + dr * ca + dc * sa;
            double src_c = cx - dr * sa + dc * ca;
            BicubicTaps taps = bicubic_taps(src_r, src_c, h, w);
            if (strict && taps.clipped) {
                throw ConfigError("rotated crop draws on samples outside the image");
            }
            double acc = 0.0;
            for (int t = 0; t < taps.count; ++t) {
                acc += taps.w[t] * image(static_cast<std::size_t>(taps.rows[t]),
                                         static_cast<std::size_t>(taps.cols[t]));
            }
            out(r, c) = acc;
        }
    }
    return out;
}

}  // namespace

Tensor rotate_image(const Tensor& image, double angle) {
    image.require_rank(2, "rotate_image");
    return resample_rotated(image, angle, image.rows(), image.cols(), 0, 0, false);
}

Tensor augment_rotate_crop(const Tensor& image, double angle, std::size_t crop) {
    image.require_rank(2, "augment_rotate_crop");
    if (crop == 0 || crop > image.rows() || crop > image.cols()) {
        throw ConfigError("crop side " + std::to_string(crop) + " does not fit a " +
                          std::to_string(image.rows()) + "x" + std::to_string(image.cols()) +
                          " image");
    }
    std::size_t r0 = (image.rows() - crop) / 2;
    std::size_t c0 = (image.cols() - crop) / 2;
    return resample_rotated(image, angle, crop, crop, r0, c0, true);
}

}  // namespace rotex
