#pragma once

#include <string>
#include <vector>

#include "rotex/data.hpp"
#include "rotex/filterbank.hpp"
#include "rotex/net.hpp"

namespace rotex {

enum class FeatureBlock { kLocal, kGlobal, kBoth };

// Total cross power spectral density: sum over all frequency bins of
// |F(x) * F(y)|. A smaller y is zero-padded to the size of x first.
double cpsd(const Tensor& x, const Tensor& y);
double cpsd_from_spectra(const Spectrum& x_spec, const Spectrum& y_spec);

// Per-group mean, population std, max, min over the spatial max-pool outputs,
// blockwise: [mean(1..M), std(1..M), max(1..M), min(1..M)].
std::vector<double> local_descriptors(const Tensor& image, const RotatedBank& bank,
                                      std::size_t grid_rows, std::size_t grid_cols,
                                      CorrMethod method = CorrMethod::kAuto);

// Per-group mean, population std, max, min of the cross power spectral
// density across the R_eval orientations, same blockwise layout.
std::vector<double> global_descriptors(const Tensor& image, const RotatedBank& bank);

// Local block followed by the global block; length 8*M.
std::vector<double> extract_features(const Tensor& image, const RotatedBank& bank,
                                     std::size_t grid_rows, std::size_t grid_cols,
                                     CorrMethod method = CorrMethod::kAuto);

struct FeatureMatrix {
    std::size_t dim = 0;
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> labels;
    std::vector<std::string> names;

    std::size_t size() const { return rows.size(); }
};

// Extracts one FeatureVector per image; deterministic, always eval mode.
FeatureMatrix extract_feature_matrix(const DatasetSplit& split, const FilterBank& bank,
                                     std::size_t r_eval, std::size_t grid_rows,
                                     std::size_t grid_cols, FeatureBlock block,
                                     double input_mean = 0.0, double input_std = 1.0,
                                     CorrMethod method = CorrMethod::kAuto, unsigned threads = 1);

// CSV: header then one row per image (path, label, values). Binary: magic
// ROTFEAT1, row count, dim, labels, then f64 values row-major.
void save_features_csv(const FeatureMatrix& features, const std::string& path);
void save_features_binary(const FeatureMatrix& features, const std::string& path);
FeatureMatrix load_features_binary(const std::string& path);
FeatureMatrix load_features_csv(const std::string& path);

}  // namespace rotex
