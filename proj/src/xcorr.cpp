#include "rotex/xcorr.hpp"

#include <string>

#include "rotex/errors.hpp"

namespace rotex {

namespace {

void check_shapes(const Tensor& image, const Tensor& kernel) {
    image.require_rank(2, "xcorr2_valid image");
    kernel.require_rank(2, "xcorr2_valid kernel");
    if (kernel.rows() > image.rows() || kernel.cols() > image.cols()) {
        throw ShapeError("xcorr2_valid: kernel " + std::to_string(kernel.rows()) + "x" +
                         std::to_string(kernel.cols()) + " larger than image " +
                         std::to_string(image.rows()) + "x" + std::to_string(image.cols()));
    }
}

}  // namespace

Tensor xcorr2_valid_direct(const Tensor& image, const Tensor& kernel) {
    check_shapes(image, kernel);
    std::size_t oh = image.rows() - kernel.rows() + 1;
    std::size_t ow = image.cols() - kernel.cols() + 1;
    Tensor out({oh, ow});
    for (std::size_t r = 0; r < oh; ++r) {
        for (std::size_t c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (std::size_t u = 0; u < kernel.rows(); ++u) {
                const double* img_row = image.data() + (r + u) * image.cols() + c;
                const double* ker_row = kernel.data() + u * kernel.cols();
                for (std::size_t v = 0; v < kernel.cols(); ++v) acc += img_row[v] * ker_row[v];
            }
            out(r, c) = acc;
        }
    }
    return out;
}

Tensor xcorr2_valid_from_spectra(const Spectrum& image_spec, const Spectrum& kernel_spec,
                                 std::size_t out_rows, std::size_t out_cols) {
    if (image_spec.rows() != kernel_spec.rows() || image_spec.cols() != kernel_spec.cols()) {
        throw ShapeError("xcorr2_valid_from_spectra: spectra shapes differ");
    }
    Spectrum prod(image_spec.rows(), image_spec.cols());
    for (std::size_t i = 0; i < prod.size(); ++i) {
        prod(i) = image_spec(i) * std::conj(kernel_spec(i));
    }
    Tensor full = ifft2(prod);
    // For r <= H-n and c <= W-m the circular correlation never wraps, so the
    // top-left block equals the valid linear correlation.
    Tensor out({out_rows, out_cols});
    for (std::size_t r = 0; r < out_rows; ++r)
        for (std::size_t c = 0; c < out_cols; ++c) out(r, c) = full(r, c);
    return out;
}

Tensor xcorr2_valid_fft(const Tensor& image, const Tensor& kernel) {
    check_shapes(image, kernel);
    Spectrum img_spec = fft2(image);
    Spectrum ker_spec = fft2(pad_to(kernel, image.rows(), image.cols()));
    return xcorr2_valid_from_spectra(img_spec, ker_spec, image.rows() - kernel.rows() + 1,
                                     image.cols() - kernel.cols() + 1);
}

Tensor xcorr2_valid(const Tensor& image, const Tensor& kernel, CorrMethod method) {
    if (method == CorrMethod::kDirect) return xcorr2_valid_direct(image, kernel);
    if (method == CorrMethod::kFft) return xcorr2_valid_fft(image, kernel);
    check_shapes(image, kernel);
    // Direct wins for small kernels, FFT for the large texture filters.
    return kernel.size() >= 169 ? xcorr2_valid_fft(image, kernel)
                                : xcorr2_valid_direct(image, kernel);
}

}  // namespace rotex
