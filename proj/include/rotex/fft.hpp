#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "rotex/tensor.hpp"

namespace rotex {

// 2-D complex spectrum, row-major, same index convention as Tensor.
class Spectrum {
  public:
    Spectrum() = default;
    Spectrum(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), values_(rows * cols, {0.0, 0.0}) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }

    std::complex<double>& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    const std::complex<double>& operator()(std::size_t r, std::size_t c) const {
        return values_[r * cols_ + c];
    }
    std::complex<double>& operator()(std::size_t i) { return values_[i]; }
    const std::complex<double>& operator()(std::size_t i) const { return values_[i]; }

    std::complex<double>* data() { return values_.data(); }
    const std::complex<double>* data() const { return values_.data(); }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<std::complex<double>> values_;
};

// Unnormalized forward DFT, e^{-2*pi*i} sign convention.
Spectrum fft2(const Tensor& x);

// Inverse of fft2 including the 1/(rows*cols) normalization; returns the real part.
Tensor ifft2(const Spectrum& s);

// Inverse transform keeping the complex result (used by tests).
Spectrum ifft2_complex(const Spectrum& s);

}  // namespace rotex
