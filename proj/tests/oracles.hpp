// Independent reference implementations used to derive expected test values.
// Everything here is deliberately written from the definitions (double loops,
// O(N^4) transforms, cyclic Jacobi) and never calls the library code paths it
// is meant to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "rotex/tensor.hpp"

namespace oracles {

inline rotex::Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                   double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    rotex::Tensor t({rows, cols});
    for (std::size_t i = 0; i < t.size(); ++i) t(i) = dist(rng);
    return t;
}

// Direct double-sum DFT, forward sign e^{-2 pi i}.
inline std::vector<std::complex<double>> direct_dft2(const rotex::Tensor& x) {
    std::size_t h = x.rows(), w = x.cols();
    std::vector<std::complex<double>> out(h * w);
    for (std::size_t u = 0; u < h; ++u) {
        for (std::size_t v = 0; v < w; ++v) {
            std::complex<double> acc{0.0, 0.0};
            for (std::size_t r = 0; r < h; ++r) {
                for (std::size_t c = 0; c < w; ++c) {
                    double phase = -2.0 * M_PI *
                                   (static_cast<double>(u * r) / static_cast<double>(h) +
                                    static_cast<double>(v * c) / static_cast<double>(w));
                    acc += x(r, c) * std::complex<double>(std::cos(phase), std::sin(phase));
                }
            }
            out[u * w + v] = acc;
        }
    }
    return out;
}

// Sliding-window valid cross-correlation straight from the definition.
inline rotex::Tensor sliding_xcorr(const rotex::Tensor& image, const rotex::Tensor& kernel) {
    std::size_t oh = image.rows() - kernel.rows() + 1;
    std::size_t ow = image.cols() - kernel.cols() + 1;
    rotex::Tensor out({oh, ow});
    for (std::size_t r = 0; r < oh; ++r) {
        for (std::size_t c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (std::size_t u = 0; u < kernel.rows(); ++u)
                for (std::size_t v = 0; v < kernel.cols(); ++v)
                    acc += image(r + u, c + v) * kernel(u, v);
            out(r, c) = acc;
        }
    }
    return out;
}

// Standalone bicubic resampler (Keys kernel, a = -0.5) for filter rotation:
// for each output pixel inside the inscribed disc, samples the input at the
// back-rotated location. Out-of-bounds taps contribute zero.
inline rotex::Tensor bicubic_rotate_reference(const rotex::Tensor& f, double angle) {
    std::size_t n = f.rows();
    double center = static_cast<double>(n - 1) / 2.0;
    double radius2 = center * center;
    double ca = std::cos(angle), sa = std::sin(angle);
    auto keys = [](double t) {
        constexpr double a = -0.5;
        t = std::abs(t);
        if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
        if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
        return 0.0;
    };
    rotex::Tensor out({n, n});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            double dr = static_cast<double>(r) - center;
            double dc = static_cast<double>(c) - center;
            if (dr * dr + dc * dc > radius2 + 1e-12) continue;
            double src_r = center + dr * ca + dc * sa;
            double src_c = center - dr * sa + dc * ca;
            long br = static_cast<long>(std::floor(src_r));
            long bc = static_cast<long>(std::floor(src_c));
            double fr = src_r - static_cast<double>(br);
            double fc = src_c - static_cast<double>(bc);
            double acc = 0.0;
            for (int m = -1; m <= 2; ++m) {
                for (int k = -1; k <= 2; ++k) {
                    long rr = br + m, cc = bc + k;
                    if (rr < 0 || cc < 0 || rr >= static_cast<long>(n) || cc >= static_cast<long>(n))
                        continue;
                    acc += f(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) *
                           keys(static_cast<double>(m) - fr) * keys(static_cast<double>(k) - fc);
                }
            }
            out(r, c) = acc;
        }
    }
    return out;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns eigenvalues
// descending plus matching eigenvectors (columns).
struct JacobiResult {
    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> eigenvectors;
};

inline JacobiResult jacobi_eigen(std::vector<std::vector<double>> a) {
    std::size_t n = a.size();
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double cs = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * cs;
                for (std::size_t i = 0; i < n; ++i) {
                    double aip = a[i][p], aiq = a[i][q];
                    a[i][p] = cs * aip - sn * aiq;
                    a[i][q] = sn * aip + cs * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double api = a[p][i], aqi = a[q][i];
                    a[p][i] = cs * api - sn * aqi;
                    a[q][i] = sn * api + cs * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double vip = v[i][p], viq = v[i][q];
                    v[i][p] = cs * vip - sn * viq;
                    v[i][q] = sn * vip + cs * viq;
                }
            }
        }
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
    JacobiResult out;
    for (std::size_t j : order) {
        out.eigenvalues.push_back(a[j][j]);
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = v[i][j];
        out.eigenvectors.push_back(col);
    }
    return out;
}

// Separable Gaussian blur with reflected borders (test fixture smoothing).
inline rotex::Tensor gaussian_smooth(const rotex::Tensor& x, double sigma) {
    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;
    long h = static_cast<long>(x.rows()), w = static_cast<long>(x.cols());
    auto reflect = [](long i, long n) {
        while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
        return i;
    };
    rotex::Tensor tmp({x.rows(), x.cols()}), out({x.rows(), x.cols()});
    for (long r = 0; r < h; ++r)
        for (long c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * x(static_cast<std::size_t>(r),
                                              static_cast<std::size_t>(reflect(c + i, w)));
            tmp(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
        }
    for (long r = 0; r < h; ++r)
        for (long c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp(static_cast<std::size_t>(reflect(r + i, h)),
                                                static_cast<std::size_t>(c));
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
        }
    return out;
}

// Zero everything outside the inscribed disc of a square image.
inline rotex::Tensor disc_support(const rotex::Tensor& x) {
    std::size_t n = x.rows();
    double center = static_cast<double>(n - 1) / 2.0;
    double radius2 = center * center;
    rotex::Tensor out = x;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            double dr = static_cast<double>(r) - center, dc = static_cast<double>(c) - center;
            if (dr * dr + dc * dc > radius2) out(r, c) = 0.0;
        }
    return out;
}

inline double rel_l1_change(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::abs(a[i] - b[i]);
        den += std::abs(a[i]);
    }
    return den > 0.0 ? num / den : num;
}

}  // namespace oracles
