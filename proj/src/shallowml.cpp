#include "rotex/shallowml.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "rotex/errors.hpp"
#include "rotex/serialize.hpp"

namespace rotex {

namespace {

using EMatrix = Eigen::MatrixXd;
using EVector = Eigen::VectorXd;

EMatrix to_eigen(const DataMatrix& m) {
    EMatrix out(m.rows, m.cols);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m.at(r, c);
    return out;
}

DataMatrix from_eigen(const EMatrix& m) {
    DataMatrix out;
    out.rows = static_cast<std::size_t>(m.rows());
    out.cols = static_cast<std::size_t>(m.cols());
    out.values.resize(out.rows * out.cols);
    for (std::size_t r = 0; r < out.rows; ++r)
        for (std::size_t c = 0; c < out.cols; ++c) out.at(r, c) = m(r, c);
    return out;
}

}  // namespace

DataMatrix DataMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    DataMatrix out;
    if (rows.empty()) throw ShapeError("DataMatrix: no rows");
    out.rows = rows.size();
    out.cols = rows.front().size();
    out.values.reserve(out.rows * out.cols);
    for (const auto& row : rows) {
        if (row.size() != out.cols) throw ShapeError("DataMatrix: ragged rows");
        out.values.insert(out.values.end(), row.begin(), row.end());
    }
    return out;
}

PcaModel pca_fit(const DataMatrix& x, std::size_t k) {
    if (x.rows < 2) throw ConfigError("pca_fit: need at least 2 samples");
    if (k == 0 || k > std::min(x.rows - 1, x.cols)) {
        throw ConfigError("pca_fit: k must lie in [1, min(N-1, D)], got " + std::to_string(k));
    }
    EMatrix data = to_eigen(x);
    EVector mean = data.colwise().mean();
    EMatrix centered = data.rowwise() - mean.transpose();
    EMatrix cov = (centered.transpose() * centered) / static_cast<double>(x.rows);

    Eigen::SelfAdjointEigenSolver<EMatrix> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("pca_fit: eigendecomposition failed");

    // Eigen returns ascending order; take the top k, largest first.
    PcaModel model;
    model.mean.assign(mean.data(), mean.data() + mean.size());
    model.components.rows = k;
    model.components.cols = x.cols;
    model.components.values.resize(k * x.cols);
    model.eigenvalues.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        Eigen::Index src = static_cast<Eigen::Index>(x.cols - 1 - j);
        EVector comp = solver.eigenvectors().col(src);
        // deterministic sign: the largest-magnitude entry is positive
        Eigen::Index arg = 0;
        comp.cwiseAbs().maxCoeff(&arg);
        if (comp(arg) < 0.0) comp = -comp;
        for (std::size_t d = 0; d < x.cols; ++d) model.components.at(j, d) = comp(d);
        model.eigenvalues[j] = std::max(solver.eigenvalues()(src), 0.0);
    }
    return model;
}

std::vector<double> pca_transform(const PcaModel& model, const std::vector<double>& x) {
    if (x.size() != model.input_dim()) {
        throw ShapeError("pca_transform: input dimension " + std::to_string(x.size()) +
                         " does not match model dimension " + std::to_string(model.input_dim()));
    }
    std::vector<double> out(model.output_dim(), 0.0);
    for (std::size_t j = 0; j < model.output_dim(); ++j) {
        double acc = 0.0;
        for (std::size_t d = 0; d < x.size(); ++d) {
            acc += model.components.at(j, d) * (x[d] - model.mean[d]);
        }
        out[j] = acc;
    }
    return out;
}

DataMatrix pca_transform_all(const PcaModel& model, const DataMatrix& x) {
    DataMatrix out;
    out.rows = x.rows;
    out.cols = model.output_dim();
    out.values.reserve(out.rows * out.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
        std::vector<double> row(x.values.begin() + r * x.cols, x.values.begin() + (r + 1) * x.cols);
        std::vector<double> z = pca_transform(model, row);
        out.values.insert(out.values.end(), z.begin(), z.end());
    }
    return out;
}

LdaModel lda_fit(const DataMatrix& z, const std::vector<std::size_t>& labels, double ridge) {
    if (z.rows != labels.size()) throw ShapeError("lda_fit: label count does not match rows");
    if (z.rows == 0) throw ConfigError("lda_fit: empty data");
    std::size_t classes = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::size_t> counts(classes, 0);
    for (std::size_t l : labels) ++counts[l];
    for (std::size_t c = 0; c < classes; ++c) {
        if (counts[c] < 2) {
            throw ConfigError("lda_fit: class " + std::to_string(c) +
                              " needs at least 2 samples, has " + std::to_string(counts[c]));
        }
    }
    if (z.rows <= classes) throw ConfigError("lda_fit: need more samples than classes");

    std::size_t k = z.cols;
    EMatrix data = to_eigen(z);
    EMatrix means = EMatrix::Zero(classes, k);
    for (std::size_t i = 0; i < z.rows; ++i) means.row(labels[i]) += data.row(i);
    for (std::size_t c = 0; c < classes; ++c) means.row(c) /= static_cast<double>(counts[c]);

    EMatrix cov = EMatrix::Zero(k, k);
    for (std::size_t i = 0; i < z.rows; ++i) {
        EVector d = (data.row(i) - means.row(labels[i])).transpose();
        cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(z.rows - classes);  // pooled estimator
    double shift = ridge * cov.trace() / static_cast<double>(k);
    cov += shift * EMatrix::Identity(k, k);

    Eigen::LLT<EMatrix> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NumericError(
            "lda_fit: pooled covariance is singular even after regularization; "
            "reduce the feature dimension (stronger PCA) or add samples");
    }

    LdaModel model;
    model.class_means = from_eigen(means);
    model.covariance = from_eigen(cov);
    model.log_priors.resize(classes);
    EMatrix solved = llt.solve(means.transpose());  // k x C
    model.solved_means = from_eigen(solved);
    model.constants.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        double prior = static_cast<double>(counts[c]) / static_cast<double>(z.rows);
        model.log_priors[c] = std::log(prior);
        double quad = means.row(c).dot(solved.col(c));
        model.constants[c] = -0.5 * quad + model.log_priors[c];
    }
    return model;
}

std::size_t lda_predict(const LdaModel& model, const std::vector<double>& z) {
    if (z.size() != model.solved_means.rows) {
        throw ShapeError("lda_predict: dimension mismatch");
    }
    std::size_t classes = model.class_means.rows;
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes; ++c) {
        double score = model.constants[c];
        for (std::size_t j = 0; j < z.size(); ++j) score += z[j] * model.solved_means.at(j, c);
        if (score > best_score) {  // ties keep the lowest class index
            best_score = score;
            best = c;
        }
    }
    return best;
}

std::size_t knn1_cityblock(const DataMatrix& train, const std::vector<std::size_t>& labels,
                           const std::vector<double>& query) {
    if (train.rows == 0) throw ConfigError("knn1: empty training set");
    if (train.rows != labels.size()) throw ShapeError("knn1: label count does not match rows");
    if (query.size() != train.cols) throw ShapeError("knn1: query dimension mismatch");
    std::size_t best_row = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < train.rows; ++r) {
        double dist = 0.0;
        const double* row = train.values.data() + r * train.cols;
        for (std::size_t j = 0; j < train.cols; ++j) dist += std::abs(row[j] - query[j]);
        if (dist < best_dist) {
            best_dist = dist;
            best_row = r;
        }
    }
    return labels[best_row];
}

namespace {
constexpr char kPcaMagic[8] = {'R', 'O', 'T', 'P', 'C', 'A', '0', '1'};
constexpr char kLdaMagic[8] = {'R', 'O', 'T', 'L', 'D', 'A', '0', '1'};
}  // namespace

void save_pca(const PcaModel& model, const std::string& path) {
    BinaryWriter w(path);
    w.magic(kPcaMagic);
    w.u64(model.output_dim());
    w.u64(model.input_dim());
    w.f64_block(model.mean);
    w.f64_block(model.components.values);
    w.f64_block(model.eigenvalues);
    w.close();
    nlohmann::json meta = {{"magic", "ROTPCA01"},
                           {"components", model.output_dim()},
                           {"dimension", model.input_dim()}};
    write_text_file(path + ".json", meta.dump(2) + "\n");
}

PcaModel load_pca(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kPcaMagic);
    PcaModel model;
    std::size_t k = r.u64();
    std::size_t d = r.u64();
    model.mean = r.f64_block(d);
    model.components.rows = k;
    model.components.cols = d;
    model.components.values = r.f64_block(k * d);
    model.eigenvalues = r.f64_block(k);
    return model;
}

void save_lda(const LdaModel& model, const std::string& path) {
    BinaryWriter w(path);
    w.magic(kLdaMagic);
    w.u64(model.class_means.rows);
    w.u64(model.class_means.cols);
    w.f64_block(model.class_means.values);
    w.f64_block(model.covariance.values);
    w.f64_block(model.log_priors);
    w.f64_block(model.solved_means.values);
    w.f64_block(model.constants);
    w.close();
    nlohmann::json meta = {{"magic", "ROTLDA01"},
                           {"classes", model.class_means.rows},
                           {"dimension", model.class_means.cols}};
    write_text_file(path + ".json", meta.dump(2) + "\n");
}

LdaModel load_lda(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kLdaMagic);
    LdaModel model;
    std::size_t classes = r.u64();
    std::size_t k = r.u64();
    model.class_means.rows = classes;
    model.class_means.cols = k;
    model.class_means.values = r.f64_block(classes * k);
    model.covariance.rows = model.covariance.cols = k;
    model.covariance.values = r.f64_block(k * k);
    model.log_priors = r.f64_block(classes);
    model.solved_means.rows = k;
    model.solved_means.cols = classes;
    model.solved_means.values = r.f64_block(k * classes);
    model.constants = r.f64_block(classes);
    return model;
}

}  // namespace rotex
