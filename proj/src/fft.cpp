#include "rotex/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "rotex/errors.hpp"

namespace rotex {

namespace {

// FFTW planning is not thread-safe; execution via the new-array interface is.
// Plans are cached per (rows, cols, sign) and created with FFTW_UNALIGNED so
// they may execute on any buffer.
class PlanCache {
  public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(std::size_t rows, std::size_t cols, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_tuple(rows, cols, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> dummy(rows * cols);
        fftw_plan plan = fftw_plan_dft_2d(
            static_cast<int>(rows), static_cast<int>(cols),
            reinterpret_cast<fftw_complex*>(dummy.data()),
            reinterpret_cast<fftw_complex*>(dummy.data()), sign,
            FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan) throw NumericError("fftw plan creation failed");
        plans_.emplace(key, plan);
        return plan;
    }

  private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

void execute(std::size_t rows, std::size_t cols, int sign, std::complex<double>* in,
             std::complex<double>* out) {
    fftw_plan plan = PlanCache::instance().get(rows, cols, sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in),
                     reinterpret_cast<fftw_complex*>(out));
}

}  // namespace

Spectrum fft2(const Tensor& x) {
    x.require_rank(2, "fft2");
    std::size_t rows = x.rows(), cols = x.cols();
    Spectrum in(rows, cols);
    for (std::size_t i = 0; i < x.size(); ++i) in(i) = {x(i), 0.0};
    Spectrum out(rows, cols);
    execute(rows, cols, FFTW_FORWARD, in.data(), out.data());
    return out;
}

Spectrum ifft2_complex(const Spectrum& s) {
    std::size_t rows = s.rows(), cols = s.cols();
    if (rows == 0 || cols == 0) throw ShapeError("ifft2: empty spectrum");
    Spectrum in = s;
    Spectrum out(rows, cols);
    execute(rows, cols, FFTW_BACKWARD, in.data(), out.data());
    double scale = 1.0 / static_cast<double>(rows * cols);
    for (std::size_t i = 0; i < out.size(); ++i) out(i) *= scale;
    return out;
}

Tensor ifft2(const Spectrum& s) {
    Spectrum c = ifft2_complex(s);
    Tensor out({s.rows(), s.cols()});
    for (std::size_t i = 0; i < c.size(); ++i) out(i) = c(i).real();
    return out;
}

}  // namespace rotex
