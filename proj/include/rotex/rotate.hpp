#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rotex/tensor.hpp"

namespace rotex {

// Sparse linear map realizing bicubic rotation of an n x n filter by a fixed
// angle. Output pixels outside the inscribed disc have no entries; samples
// whose source falls outside the grid contribute nothing (no renormalization),
// so the map is linear and fixed once built.
class RotationOperator {
  public:
    RotationOperator() = default;

    std::size_t side() const { return n_; }
    double angle() const { return angle_; }
    bool inside_disc(std::size_t r, std::size_t c) const { return mask_[r * n_ + c] != 0; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }

    // CSR layout over output pixels (row-major).
    const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
    const std::vector<std::uint32_t>& col_idx() const { return col_idx_; }
    const std::vector<double>& weights() const { return weights_; }

    Tensor apply(const Tensor& filter) const;    // out = A f
    Tensor apply_adjoint(const Tensor& g) const; // out = A^T g

    friend RotationOperator make_rotation_operator(std::size_t n, double angle);

  private:
    std::size_t n_ = 0;
    double angle_ = 0.0;
    std::vector<std::uint8_t> mask_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> col_idx_;
    std::vector<double> weights_;
};

// Builds the operator for odd n >= 3. The source location of each output
// pixel is the output coordinate rotated by -angle about the filter center.
RotationOperator make_rotation_operator(std::size_t n, double angle);

Tensor rotate_filter(const RotationOperator& op, const Tensor& filter);
Tensor rotate_adjoint(const RotationOperator& op, const Tensor& g);

// Zero out everything outside the inscribed disc of an n x n filter.
Tensor disc_mask(const Tensor& filter);

// Bicubic rotation of a whole image about its center ((H-1)/2, (W-1)/2).
// Out-of-bounds source samples contribute zero. Any rectangular size.
Tensor rotate_image(const Tensor& image, double angle);

// Rotate then take the centered crop x crop window. Throws ConfigError when
// any crop pixel would draw on samples outside the source image.
Tensor augment_rotate_crop(const Tensor& image, double angle, std::size_t crop);

// Up to 16 bicubic taps (cubic convolution, a = -0.5) for one source point.
// Integer-aligned sources snap to a single unit tap. Out-of-bounds taps are
// dropped. Returns the number of taps written into rows/cols/w.
struct BicubicTaps {
    int rows[16];
    int cols[16];
    double w[16];
    int count = 0;
    bool clipped = false;  // true if any nonzero-weight tap fell out of bounds
};
BicubicTaps bicubic_taps(double src_r, double src_c, std::size_t height, std::size_t width);

}  // namespace rotex
