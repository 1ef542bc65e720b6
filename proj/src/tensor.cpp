#include "rotex/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rotex {

namespace {

std::size_t checked_count(const std::vector<std::size_t>& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
    std::size_t count = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw ShapeError("tensor dimensions must be positive");
        count *= d;
    }
    return count;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
    values_.assign(checked_count(shape_), fill);
}

Tensor Tensor::from_values(std::vector<std::size_t> shape, std::vector<double> values) {
    Tensor t;
    std::size_t count = checked_count(shape);
    if (count != values.size()) {
        throw ShapeError("value count " + std::to_string(values.size()) +
                         " does not match shape product " + std::to_string(count));
    }
    t.shape_ = std::move(shape);
    t.values_ = std::move(values);
    return t;
}

void Tensor::require_rank(std::size_t r, const char* what) const {
    if (rank() != r) {
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(r) + ", got " +
                         std::to_string(rank()));
    }
}

void Tensor::require_finite(const char* what) const {
    for (double v : values_) {
        if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite value");
    }
}

Tensor rot90(const Tensor& x, int k) {
    x.require_rank(2, "rot90");
    int q = ((k % 4) + 4) % 4;
    if (q == 0) return x;
    Tensor in = x;
    Tensor out;
    for (int step = 0; step < q; ++step) {
        std::size_t h = in.rows(), w = in.cols();
        out = Tensor({w, h});
        // out(r, c) = in(c, w - 1 - r)
        for (std::size_t r = 0; r < w; ++r)
            for (std::size_t c = 0; c < h; ++c) out(r, c) = in(c, w - 1 - r);
        in = out;
    }
    return in;
}

Tensor pad_to(const Tensor& x, std::size_t rows, std::size_t cols) {
    x.require_rank(2, "pad_to");
    if (rows < x.rows() || cols < x.cols()) throw ShapeError("pad_to: target smaller than input");
    Tensor out({rows, cols});
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = x(r, c);
    return out;
}

Tensor center_crop(const Tensor& x, std::size_t rows, std::size_t cols) {
    x.require_rank(2, "center_crop");
    if (rows > x.rows() || cols > x.cols()) throw ShapeError("center_crop: crop larger than input");
    std::size_t r0 = (x.rows() - rows) / 2;
    std::size_t c0 = (x.cols() - cols) / 2;
    Tensor out({rows, cols});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out(r, c) = x(r0 + r, c0 + c);
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a(i) - b(i)));
    return m;
}

}  // namespace rotex
