#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rotex {

// Row-major dense matrix used at the classifier boundary.
struct DataMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    static DataMatrix from_rows(const std::vector<std::vector<double>>& rows);
};

struct PcaModel {
    std::vector<double> mean;        // D
    DataMatrix components;           // k x D, orthonormal rows, descending eigenvalue order
    std::vector<double> eigenvalues; // k, nonnegative

    std::size_t input_dim() const { return mean.size(); }
    std::size_t output_dim() const { return components.rows; }
};

// Top-k eigenvectors of the population covariance of X. Sign convention: the
// largest-magnitude entry of every component is positive.
PcaModel pca_fit(const DataMatrix& x, std::size_t k);
std::vector<double> pca_transform(const PcaModel& model, const std::vector<double>& x);
DataMatrix pca_transform_all(const PcaModel& model, const DataMatrix& x);

struct LdaModel {
    DataMatrix class_means;          // C x k
    DataMatrix covariance;           // k x k pooled within-class, after ridge
    std::vector<double> log_priors;  // C
    // cached solve of covariance^-1 * means^T, one column per class
    DataMatrix solved_means;         // k x C
    std::vector<double> constants;   // C: -1/2 mu^T Sigma^-1 mu + log prior
};

// Pooled-covariance LDA with ridge regularization lambda*trace/k*I.
LdaModel lda_fit(const DataMatrix& z, const std::vector<std::size_t>& labels,
                 double ridge = 1e-6);
std::size_t lda_predict(const LdaModel& model, const std::vector<double>& z);

// Label of the training row minimizing the L1 (cityblock) distance; ties go
// to the lowest row index.
std::size_t knn1_cityblock(const DataMatrix& train, const std::vector<std::size_t>& labels,
                           const std::vector<double>& query);

void save_pca(const PcaModel& model, const std::string& path);
PcaModel load_pca(const std::string& path);
void save_lda(const LdaModel& model, const std::string& path);
LdaModel load_lda(const std::string& path);

}  // namespace rotex
