#include "rotex/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rotex/errors.hpp"
#include "rotex/parallel.hpp"
#include "rotex/serialize.hpp"
#include "rotex/xcorr.hpp"

namespace rotex {

double cpsd_from_spectra(const Spectrum& x_spec, const Spectrum& y_spec) {
    if (x_spec.rows() != y_spec.rows() || x_spec.cols() != y_spec.cols()) {
        throw ShapeError("cpsd: spectra shapes differ");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < x_spec.size(); ++i) s += std::abs(x_spec(i) * y_spec(i));
    return s;
}

double cpsd(const Tensor& x, const Tensor& y) {
    x.require_rank(2, "cpsd x");
    y.require_rank(2, "cpsd y");
    if (y.rows() > x.rows() || y.cols() > x.cols()) {
        throw ShapeError("cpsd: y does not fit inside x after zero-padding");
    }
    const Tensor& padded = (y.rows() == x.rows() && y.cols() == x.cols())
                               ? y
                               : pad_to(y, x.rows(), x.cols());
    return cpsd_from_spectra(fft2(x), fft2(padded));
}

namespace {

// mean / population std / max / min blocks over per-group sample sets
void append_stats_blockwise(const std::vector<std::vector<double>>& per_group,
                            std::vector<double>& out) {
    std::size_t m = per_group.size();
    std::size_t base = out.size();
    out.resize(base + 4 * m);
    for (std::size_t g = 0; g < m; ++g) {
        const std::vector<double>& v = per_group[g];
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size());
        out[base + g] = mean;
        out[base + m + g] = std::sqrt(std::max(var, 0.0));
        out[base + 2 * m + g] = *std::max_element(v.begin(), v.end());
        out[base + 3 * m + g] = *std::min_element(v.begin(), v.end());
    }
}

}  // namespace

std::vector<double> local_descriptors(const Tensor& image, const RotatedBank& bank,
                                      std::size_t grid_rows, std::size_t grid_cols,
                                      CorrMethod method) {
    std::vector<Tensor> batch{image};
    RotConvOut conv = rotconv_forward(batch, bank, method);
    Tensor rectified = relu(conv.groupmax[0]);
    MaxPoolOut pooled = spatial_max_pool(rectified, grid_rows, grid_cols);

    std::size_t m = bank.groups();
    std::size_t windows = grid_rows * grid_cols;
    std::vector<std::vector<double>> per_group(m);
    for (std::size_t g = 0; g < m; ++g) {
        per_group[g].resize(windows);
        for (std::size_t i = 0; i < windows; ++i) per_group[g][i] = pooled.pooled(g * windows + i);
    }
    std::vector<double> out;
    append_stats_blockwise(per_group, out);
    return out;
}

std::vector<double> global_descriptors(const Tensor& image, const RotatedBank& bank) {
    image.require_rank(2, "global_descriptors");
    if (image.rows() < bank.side() || image.cols() < bank.side()) {
        throw ShapeError("global_descriptors: image smaller than filter");
    }
    Spectrum img_spec = fft2(image);
    std::size_t m = bank.groups(), r_eval = bank.rotations();
    std::vector<std::vector<double>> per_group(m);
    for (std::size_t g = 0; g < m; ++g) {
        per_group[g].resize(r_eval);
        for (std::size_t a = 0; a < r_eval; ++a) {
            per_group[g][a] = cpsd_from_spectra(
                img_spec, bank.filter_spectrum(g, a, image.rows(), image.cols()));
        }
    }
    std::vector<double> out;
    append_stats_blockwise(per_group, out);
    return out;
}

std::vector<double> extract_features(const Tensor& image, const RotatedBank& bank,
                                     std::size_t grid_rows, std::size_t grid_cols,
                                     CorrMethod method) {
    std::vector<double> out = local_descriptors(image, bank, grid_rows, grid_cols, method);
    std::vector<double> global = global_descriptors(image, bank);
    out.insert(out.end(), global.begin(), global.end());
    return out;
}

FeatureMatrix extract_feature_matrix(const DatasetSplit& split, const FilterBank& bank,
                                     std::size_t r_eval, std::size_t grid_rows,
                                     std::size_t grid_cols, FeatureBlock block, double input_mean,
                                     double input_std, CorrMethod method, unsigned threads) {
    split.validate();
    if (split.size() == 0) throw ConfigError("extract_feature_matrix: empty split");
    if (input_std <= 0.0) throw ConfigError("extract_feature_matrix: input std must be positive");
    RotatedBank rotated(bank, r_eval);
    bool uniform = true;
    for (const Tensor& img : split.images) uniform &= img.same_shape(split.images.front());
    if (uniform) {
        // build the spectra cache up front so worker threads only read it
        rotated.filter_spectrum(0, 0, split.images.front().rows(), split.images.front().cols());
    } else {
        threads = 1;  // the per-size spectra cache is not shareable across sizes
    }

    FeatureMatrix out;
    out.labels = split.labels;
    out.names = split.names;
    out.rows.resize(split.size());
    parallel_for(split.size(), threads, [&](std::size_t i) {
        Tensor img = split.images[i];
        for (std::size_t j = 0; j < img.size(); ++j) img(j) = (img(j) - input_mean) / input_std;
        std::vector<double> row;
        switch (block) {
            case FeatureBlock::kLocal:
                row = local_descriptors(img, rotated, grid_rows, grid_cols, method);
                break;
            case FeatureBlock::kGlobal:
                row = global_descriptors(img, rotated);
                break;
            case FeatureBlock::kBoth:
                row = extract_features(img, rotated, grid_rows, grid_cols, method);
                break;
        }
        out.rows[i] = std::move(row);
    });
    out.dim = out.rows.front().size();
    return out;
}

void save_features_csv(const FeatureMatrix& features, const std::string& path) {
    std::ostringstream out;
    out << "path,label";
    for (std::size_t d = 0; d < features.dim; ++d) out << ",f" << d;
    out << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < features.size(); ++i) {
        out << features.names[i] << "," << features.labels[i];
        for (double v : features.rows[i]) out << "," << v;
        out << "\n";
    }
    write_text_file(path, out.str());
}

namespace {
constexpr char kFeatMagic[8] = {'R', 'O', 'T', 'F', 'E', 'A', 'T', '1'};
}

void save_features_binary(const FeatureMatrix& features, const std::string& path) {
    BinaryWriter w(path);
    w.magic(kFeatMagic);
    w.u64(features.size());
    w.u64(features.dim);
    for (std::size_t label : features.labels) w.u64(label);
    for (const auto& row : features.rows) w.f64_block(row);
    w.close();
}

FeatureMatrix load_features_binary(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kFeatMagic);
    FeatureMatrix out;
    std::size_t count = r.u64();
    out.dim = r.u64();
    out.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) out.labels[i] = r.u64();
    for (std::size_t i = 0; i < count; ++i) {
        out.rows.push_back(r.f64_block(out.dim));
        out.names.push_back("row" + std::to_string(i));
    }
    return out;
}

FeatureMatrix load_features_csv(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw IngestError(path + ": empty feature file");
    FeatureMatrix out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string cell;
        if (!std::getline(fields, cell, ',')) {
            throw IngestError(path + ":" + std::to_string(line_no) + ": malformed row");
        }
        out.names.push_back(cell);
        if (!std::getline(fields, cell, ',')) {
            throw IngestError(path + ":" + std::to_string(line_no) + ": missing label");
        }
        out.labels.push_back(std::stoul(cell));
        std::vector<double> row;
        while (std::getline(fields, cell, ',')) row.push_back(std::stod(cell));
        if (out.dim == 0) out.dim = row.size();
        if (row.size() != out.dim) {
            throw IngestError(path + ":" + std::to_string(line_no) + ": inconsistent row length");
        }
        out.rows.push_back(std::move(row));
    }
    if (out.rows.empty()) throw IngestError(path + ": no feature rows");
    return out;
}

}  // namespace rotex
