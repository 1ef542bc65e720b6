#pragma once

#include <cstddef>
#include <vector>

#include "rotex/errors.hpp"

namespace rotex {

// Dense real tensor, row-major. Rank is small (1..3 in practice).
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    static Tensor from_values(std::vector<std::size_t> shape, std::vector<double> values);

    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return values_.size(); }

    // 2-D accessors; throw on rank mismatch in the checked variants below.
    std::size_t rows() const { return dim(0); }
    std::size_t cols() const { return dim(1); }

    double& operator()(std::size_t i) { return values_[i]; }
    double operator()(std::size_t i) const { return values_[i]; }
    double& operator()(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }
    double& operator()(std::size_t d, std::size_t r, std::size_t c) {
        return values_[(d * shape_[1] + r) * shape_[2] + c];
    }
    double operator()(std::size_t d, std::size_t r, std::size_t c) const {
        return values_[(d * shape_[1] + r) * shape_[2] + c];
    }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    void require_rank(std::size_t r, const char* what) const;
    // Throws NumericError if any stored value is NaN or infinite.
    void require_finite(const char* what) const;

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

// 90-degree counter-clockwise turns (k quarter turns). Exact, no interpolation.
Tensor rot90(const Tensor& x, int k = 1);

// Zero-pad a 2-D tensor into the top-left corner of a rows x cols grid.
Tensor pad_to(const Tensor& x, std::size_t rows, std::size_t cols);

// Centered crop of a 2-D tensor.
Tensor center_crop(const Tensor& x, std::size_t rows, std::size_t cols);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace rotex
