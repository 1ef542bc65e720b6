#pragma once

#include "rotex/fft.hpp"
#include "rotex/tensor.hpp"

namespace rotex {

enum class CorrMethod { kAuto, kDirect, kFft };

// Valid cross-correlation (no kernel flip): out(r,c) = sum_{u,v} image(r+u, c+v) * kernel(u,v).
// Output is (H-n+1) x (W-m+1). Both methods agree to ~1e-12 in double precision.
Tensor xcorr2_valid(const Tensor& image, const Tensor& kernel, CorrMethod method = CorrMethod::kAuto);

Tensor xcorr2_valid_direct(const Tensor& image, const Tensor& kernel);
Tensor xcorr2_valid_fft(const Tensor& image, const Tensor& kernel);

// FFT path split in two so callers can reuse spectra across many kernels.
// kernel_spec must be the spectrum of the kernel zero-padded to the image size.
Tensor xcorr2_valid_from_spectra(const Spectrum& image_spec, const Spectrum& kernel_spec,
                                 std::size_t out_rows, std::size_t out_cols);

}  // namespace rotex
