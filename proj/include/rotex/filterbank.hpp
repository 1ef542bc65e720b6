#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "rotex/fft.hpp"
#include "rotex/rotate.hpp"
#include "rotex/tensor.hpp"

namespace rotex {

// M canonical filters plus one bias per rotation group. Rotated copies are
// never stored as parameters; they are materialized on demand (weight tying).
struct FilterBank {
    std::size_t groups = 0;        // M
    std::size_t rotations = 1;     // R used at training time
    std::size_t side = 0;          // n, odd
    std::vector<Tensor> canonical; // M filters, n x n
    std::vector<double> biases;    // M

    static FilterBank random_init(std::size_t groups, std::size_t rotations, std::size_t side,
                                  double stddev, std::mt19937_64& rng);
    void validate() const;
};

// Rotated copies of every canonical filter for a fixed orientation count,
// plus their padded spectra for one image size. Rebuilt from the canonical
// filters after every parameter update.
class RotatedBank {
  public:
    RotatedBank(const FilterBank& bank, std::size_t r_eval);

    std::size_t groups() const { return groups_; }
    std::size_t rotations() const { return r_eval_; }
    std::size_t side() const { return side_; }
    double bias(std::size_t group) const { return biases_[group]; }
    double angle(std::size_t a) const;

    const RotationOperator& op(std::size_t a) const { return ops_[a]; }
    const Tensor& filter(std::size_t group, std::size_t a) const {
        return filters_[group * r_eval_ + a];
    }

    // Spectrum of filter(group, a) zero-padded to rows x cols; cached per size.
    const Spectrum& filter_spectrum(std::size_t group, std::size_t a, std::size_t rows,
                                    std::size_t cols) const;

  private:
    std::size_t groups_, r_eval_, side_;
    std::vector<double> biases_;
    std::vector<RotationOperator> ops_;      // R_eval operators (shared across groups)
    std::vector<Tensor> filters_;            // groups x R_eval, row-major
    mutable std::size_t spec_rows_ = 0, spec_cols_ = 0;
    mutable std::vector<Spectrum> spectra_;  // same layout as filters_
};

// Shared cache of rotation operators keyed by (n, R); building a 35x35
// operator set is cheap but not free, and the operators are immutable.
const std::vector<RotationOperator>& rotation_operator_set(std::size_t n, std::size_t r_eval);

// Flat binary container (magic ROTBANK1) plus a JSON sidecar at <path>.json.
void save_filter_bank(const FilterBank& bank, const std::string& path);
FilterBank load_filter_bank(const std::string& path);

}  // namespace rotex
