#pragma once

#include <cstdint>
#include <vector>

#include "rotex/filterbank.hpp"
#include "rotex/tensor.hpp"
#include "rotex/xcorr.hpp"

namespace rotex {

// Winning-angle index per (image, group, output position), recorded during the
// forward pass and consumed by the backward pass.
struct OrientationCache {
    std::size_t batch = 0;
    std::size_t groups = 0;
    std::size_t out_rows = 0;
    std::size_t out_cols = 0;
    std::size_t r_eval = 0;
    std::size_t image_rows = 0;
    std::size_t image_cols = 0;
    std::vector<std::uint16_t> winner;  // batch * groups * out_rows * out_cols

    std::uint16_t at(std::size_t image, std::size_t group, std::size_t r, std::size_t c) const {
        return winner[((image * groups + group) * out_rows + r) * out_cols + c];
    }
};

struct RotConvOut {
    std::vector<Tensor> groupmax;  // per image: groups x out_rows x out_cols
    OrientationCache cache;
};

struct RotConvGrads {
    std::vector<Tensor> canonical;  // M filters, n x n
    std::vector<double> biases;     // M
};

// Orientation max-pooled responses: for each group the max over all rotated
// copies of the canonical filter, plus the group bias. Ties go to the lowest
// angle index. All images in the batch must share one shape.
RotConvOut rotconv_forward(const std::vector<Tensor>& images, const RotatedBank& bank,
                           CorrMethod method = CorrMethod::kAuto, unsigned threads = 1);

// Convenience overload that materializes the rotations at r_eval first.
RotConvOut rotconv_forward(const std::vector<Tensor>& images, const FilterBank& bank,
                           std::size_t r_eval, CorrMethod method = CorrMethod::kAuto);

// Same layer over an explicit operator list (any angles, any order).
RotConvOut rotconv_forward_ops(const std::vector<Tensor>& images, const FilterBank& bank,
                               const std::vector<RotationOperator>& ops,
                               CorrMethod method = CorrMethod::kAuto);

// Routes each output gradient to the angle that won the forward max, then maps
// the per-angle correlation gradients back onto the canonical filters through
// the rotation adjoints. Accumulation order is fixed (batch, then position).
RotConvGrads rotconv_backward(const std::vector<Tensor>& grad_out, const OrientationCache& cache,
                              const std::vector<Tensor>& images, const RotatedBank& bank);

}  // namespace rotex
