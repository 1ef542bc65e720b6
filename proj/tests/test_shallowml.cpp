#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "rotex/errors.hpp"
#include "rotex/shallowml.hpp"

using namespace rotex;

namespace {

DataMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    DataMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.values.resize(rows * cols);
    for (double& v : m.values) v = dist(rng);
    return m;
}

std::vector<double> row_of(const DataMatrix& m, std::size_t r) {
    return std::vector<double>(m.values.begin() + r * m.cols, m.values.begin() + (r + 1) * m.cols);
}

}  // namespace

TEST_CASE("rank-1 data has a single nonzero eigenvalue") {
    std::mt19937_64 rng(111);
    std::uniform_real_distribution<double> t_dist(-2.0, 2.0);
    DataMatrix x;
    x.rows = 20;
    x.cols = 3;
    double dir[3] = {1.0, -2.0, 0.5};
    for (std::size_t i = 0; i < 20; ++i) {
        double t = t_dist(rng);
        for (double d : dir) x.values.push_back(3.0 + t * d);
    }
    PcaModel model = pca_fit(x, 3);
    CHECK(model.eigenvalues[0] > 1e-3);
    CHECK(model.eigenvalues[1] <= 1e-12);
    CHECK(model.eigenvalues[2] <= 1e-12);
}

TEST_CASE("rank-k data reconstructs exactly") {
    std::mt19937_64 rng(112);
    // data spanned by 2 directions inside 5-D
    DataMatrix basis = random_matrix(2, 5, rng);
    DataMatrix coeff = random_matrix(40, 2, rng);
    DataMatrix x;
    x.rows = 40;
    x.cols = 5;
    x.values.assign(200, 0.0);
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t d = 0; d < 5; ++d)
            for (std::size_t j = 0; j < 2; ++j)
                x.at(i, d) += coeff.at(i, j) * basis.at(j, d);
    PcaModel model = pca_fit(x, 2);
    for (std::size_t i = 0; i < 5; ++i) {
        std::vector<double> z = pca_transform(model, row_of(x, i));
        // reconstruct: mean + components^T z
        for (std::size_t d = 0; d < 5; ++d) {
            double rec = model.mean[d];
            for (std::size_t j = 0; j < 2; ++j) rec += model.components.at(j, d) * z[j];
            CHECK(rec == doctest::Approx(x.at(i, d)).epsilon(1e-10));
        }
    }
}

TEST_CASE("eigenpairs match an independent Jacobi decomposition") {
    std::mt19937_64 rng(113);
    DataMatrix x = random_matrix(50, 10, rng);
    PcaModel model = pca_fit(x, 10);

    // population covariance, then cyclic Jacobi
    std::vector<double> mean(10, 0.0);
    for (std::size_t i = 0; i < 50; ++i)
        for (std::size_t d = 0; d < 10; ++d) mean[d] += x.at(i, d) / 50.0;
    std::vector<std::vector<double>> cov(10, std::vector<double>(10, 0.0));
    for (std::size_t i = 0; i < 50; ++i)
        for (std::size_t a = 0; a < 10; ++a)
            for (std::size_t b = 0; b < 10; ++b)
                cov[a][b] += (x.at(i, a) - mean[a]) * (x.at(i, b) - mean[b]) / 50.0;
    oracles::JacobiResult ref = oracles::jacobi_eigen(cov);

    for (std::size_t j = 0; j < 10; ++j) {
        CHECK(model.eigenvalues[j] == doctest::Approx(ref.eigenvalues[j]).epsilon(1e-9));
        // eigenvectors match up to sign
        double dot = 0.0;
        for (std::size_t d = 0; d < 10; ++d) dot += model.components.at(j, d) * ref.eigenvectors[j][d];
        CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("components are orthonormal") {
    std::mt19937_64 rng(114);
    DataMatrix x = random_matrix(30, 8, rng);
    PcaModel model = pca_fit(x, 5);
    for (std::size_t a = 0; a < 5; ++a) {
        for (std::size_t b = 0; b < 5; ++b) {
            double dot = 0.0;
            for (std::size_t d = 0; d < 8; ++d) dot += model.components.at(a, d) * model.components.at(b, d);
            CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) <= 1e-10);
        }
    }
    // eigenvalues descending
    for (std::size_t j = 1; j < 5; ++j) CHECK(model.eigenvalues[j - 1] >= model.eigenvalues[j]);
}

TEST_CASE("transform maps the mean to zero and a component to a unit vector") {
    std::mt19937_64 rng(115);
    DataMatrix x = random_matrix(30, 6, rng);
    PcaModel model = pca_fit(x, 3);
    std::vector<double> z = pca_transform(model, model.mean);
    for (double v : z) CHECK(std::abs(v) <= 1e-12);

    std::vector<double> shifted = model.mean;
    for (std::size_t d = 0; d < 6; ++d) shifted[d] += model.components.at(0, d);
    z = pca_transform(model, shifted);
    CHECK(z[0] == doctest::Approx(1.0).epsilon(1e-10));
    for (std::size_t j = 1; j < 3; ++j) CHECK(std::abs(z[j]) <= 1e-10);

    // batch transform equals per-row transform
    DataMatrix all = pca_transform_all(model, x);
    for (std::size_t i = 0; i < 5; ++i) {
        std::vector<double> one = pca_transform(model, row_of(x, i));
        for (std::size_t j = 0; j < 3; ++j) CHECK(all.at(i, j) == doctest::Approx(one[j]));
    }
}

TEST_CASE("distances inside the retained subspace are preserved") {
    std::mt19937_64 rng(116);
    DataMatrix basis = random_matrix(3, 8, rng);
    DataMatrix coeff = random_matrix(30, 3, rng);
    DataMatrix x;
    x.rows = 30;
    x.cols = 8;
    x.values.assign(240, 0.0);
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t d = 0; d < 8; ++d)
            for (std::size_t j = 0; j < 3; ++j) x.at(i, d) += coeff.at(i, j) * basis.at(j, d);
    PcaModel model = pca_fit(x, 3);
    for (std::size_t i = 1; i < 6; ++i) {
        std::vector<double> a = row_of(x, 0), b = row_of(x, i);
        double d_orig = 0.0;
        for (std::size_t d = 0; d < 8; ++d) d_orig += (a[d] - b[d]) * (a[d] - b[d]);
        std::vector<double> za = pca_transform(model, a), zb = pca_transform(model, b);
        double d_proj = 0.0;
        for (std::size_t j = 0; j < 3; ++j) d_proj += (za[j] - zb[j]) * (za[j] - zb[j]);
        CHECK(std::sqrt(d_proj) == doctest::Approx(std::sqrt(d_orig)).epsilon(1e-10));
    }
}

TEST_CASE("k out of range is rejected") {
    std::mt19937_64 rng(117);
    DataMatrix x = random_matrix(10, 5, rng);
    CHECK_THROWS_AS(pca_fit(x, 0), ConfigError);
    CHECK_THROWS_AS(pca_fit(x, 6), ConfigError);       // > D
    DataMatrix two = random_matrix(2, 5, rng);
    CHECK_THROWS_AS(pca_fit(two, 2), ConfigError);     // > N-1
    CHECK_THROWS_AS(pca_transform(pca_fit(x, 2), {1.0}), ShapeError);
}

TEST_CASE("symmetric two-class LDA puts the boundary at the bisector") {
    // well-conditioned symmetric clusters around +/- mu
    std::mt19937_64 rng(118);
    std::normal_distribution<double> noise(0.0, 0.05);
    DataMatrix z;
    z.cols = 2;
    std::vector<std::size_t> labels;
    for (int i = 0; i < 50; ++i) {
        z.values.push_back(1.0 + noise(rng));
        z.values.push_back(0.5 + noise(rng));
        labels.push_back(0);
        z.values.push_back(-1.0 + noise(rng));
        z.values.push_back(-0.5 + noise(rng));
        labels.push_back(1);
    }
    z.rows = 100;
    LdaModel model = lda_fit(z, labels);
    CHECK(lda_predict(model, {0.9, 0.4}) == 0);
    CHECK(lda_predict(model, {-0.9, -0.4}) == 1);
}

TEST_CASE("well-separated gaussians are classified perfectly") {
    std::mt19937_64 rng(119);
    std::normal_distribution<double> noise(0.0, 0.1);
    const std::size_t classes = 5, per_class = 30, dim = 4;
    DataMatrix z;
    z.rows = classes * per_class;
    z.cols = dim;
    std::vector<std::size_t> labels;
    std::vector<std::vector<double>> centers;
    std::uniform_real_distribution<double> center_dist(-10.0, 10.0);
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<double> center(dim);
        for (double& v : center) v = center_dist(rng);
        // margin >> spread: centers at scale 10, noise 0.1
        centers.push_back(center);
    }
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            for (std::size_t d = 0; d < dim; ++d) z.values.push_back(centers[c][d] + noise(rng));
            labels.push_back(c);
        }
    }
    LdaModel model = lda_fit(z, labels);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < z.rows; ++i) {
        if (lda_predict(model, row_of(z, i)) == labels[i]) ++correct;
    }
    CHECK(correct == z.rows);
}

TEST_CASE("duplicating every sample leaves predictions unchanged") {
    std::mt19937_64 rng(120);
    std::normal_distribution<double> noise(0.0, 0.5);
    DataMatrix z;
    z.cols = 3;
    std::vector<std::size_t> labels;
    for (int i = 0; i < 40; ++i) {
        std::size_t cls = static_cast<std::size_t>(i % 2);
        for (std::size_t d = 0; d < 3; ++d) {
            z.values.push_back((cls == 0 ? 1.5 : -1.5) + noise(rng));
        }
        labels.push_back(cls);
    }
    z.rows = 40;

    DataMatrix doubled = z;
    doubled.rows = 80;
    doubled.values.insert(doubled.values.end(), z.values.begin(), z.values.end());
    std::vector<std::size_t> doubled_labels = labels;
    doubled_labels.insert(doubled_labels.end(), labels.begin(), labels.end());

    LdaModel a = lda_fit(z, labels);
    LdaModel b = lda_fit(doubled, doubled_labels);
    // class means and priors are exactly invariant
    for (std::size_t i = 0; i < a.class_means.values.size(); ++i) {
        CHECK(a.class_means.values[i] == doctest::Approx(b.class_means.values[i]).epsilon(1e-12));
    }
    CHECK(a.log_priors[0] == doctest::Approx(b.log_priors[0]).epsilon(1e-12));
    // balanced priors: the decision rule is invariant to the pooled-covariance rescale
    std::uniform_real_distribution<double> q_dist(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> q{q_dist(rng), q_dist(rng), q_dist(rng)};
        CHECK(lda_predict(a, q) == lda_predict(b, q));
    }
}

TEST_CASE("lda is invariant to a common translation") {
    std::mt19937_64 rng(121);
    std::normal_distribution<double> noise(0.0, 0.3);
    DataMatrix z;
    z.cols = 2;
    std::vector<std::size_t> labels;
    for (int i = 0; i < 60; ++i) {
        std::size_t cls = static_cast<std::size_t>(i % 3);
        z.values.push_back(static_cast<double>(cls) * 2.0 + noise(rng));
        z.values.push_back(-static_cast<double>(cls) + noise(rng));
        labels.push_back(cls);
    }
    z.rows = 60;
    LdaModel base = lda_fit(z, labels);

    DataMatrix shifted = z;
    const double offset[2] = {17.0, -4.0};
    for (std::size_t i = 0; i < shifted.rows; ++i)
        for (std::size_t d = 0; d < 2; ++d) shifted.at(i, d) += offset[d];
    LdaModel moved = lda_fit(shifted, labels);

    std::uniform_real_distribution<double> q_dist(-2.0, 6.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> q{q_dist(rng), q_dist(rng)};
        std::vector<double> q_shifted{q[0] + offset[0], q[1] + offset[1]};
        CHECK(lda_predict(base, q) == lda_predict(moved, q_shifted));
    }
}

TEST_CASE("lda rejects degenerate inputs") {
    DataMatrix z;
    z.rows = 3;
    z.cols = 2;
    z.values = {0, 0, 1, 1, 2, 2};
    CHECK_THROWS_AS(lda_fit(z, {0, 0, 1}), ConfigError);  // class 1 has a single sample
}

TEST_CASE("knn1 trivial cases") {
    DataMatrix train;
    train.rows = 2;
    train.cols = 2;
    train.values = {0.0, 0.0, 3.0, 3.0};
    std::vector<std::size_t> labels{7, 9};
    CHECK(knn1_cityblock(train, labels, {0.0, 0.0}) == 7);  // exact hit
    CHECK(knn1_cityblock(train, labels, {1.0, 0.0}) == 7);  // distances 1 vs 5
    CHECK_THROWS_AS(knn1_cityblock(train, labels, {1.0}), ShapeError);
}

TEST_CASE("knn1 matches an exhaustive re-implementation") {
    std::mt19937_64 rng(122);
    DataMatrix train = random_matrix(200, 6, rng);
    std::vector<std::size_t> labels(200);
    for (std::size_t i = 0; i < 200; ++i) labels[i] = i % 7;
    for (int q = 0; q < 50; ++q) {
        std::vector<double> query(6);
        std::normal_distribution<double> dist(0.0, 1.0);
        for (double& v : query) v = dist(rng);
        // independent double loop
        std::size_t best_row = 0;
        double best = 1e300;
        for (std::size_t r = 0; r < 200; ++r) {
            double d = 0.0;
            for (std::size_t j = 0; j < 6; ++j) d += std::abs(train.at(r, j) - query[j]);
            if (d < best) {
                best = d;
                best_row = r;
            }
        }
        CHECK(knn1_cityblock(train, labels, query) == labels[best_row]);
    }
}

TEST_CASE("knn1 is invariant to a common positive rescale") {
    std::mt19937_64 rng(123);
    DataMatrix train = random_matrix(50, 4, rng);
    std::vector<std::size_t> labels(50);
    for (std::size_t i = 0; i < 50; ++i) labels[i] = i % 3;
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int q = 0; q < 20; ++q) {
        std::vector<double> query(4);
        for (double& v : query) v = dist(rng);
        std::size_t base = knn1_cityblock(train, labels, query);
        DataMatrix scaled = train;
        for (double& v : scaled.values) v *= 37.5;
        std::vector<double> scaled_query = query;
        for (double& v : scaled_query) v *= 37.5;
        CHECK(knn1_cityblock(scaled, labels, scaled_query) == base);
    }
}

TEST_CASE("pca and lda models round-trip through serialization") {
    std::mt19937_64 rng(124);
    DataMatrix x = random_matrix(30, 6, rng);
    PcaModel pca = pca_fit(x, 4);
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "rotex_ml_test";
    std::filesystem::create_directories(dir);
    std::string pca_path = (dir / "pca.bin").string();
    save_pca(pca, pca_path);
    PcaModel pca2 = load_pca(pca_path);
    CHECK(pca2.mean == pca.mean);
    CHECK(pca2.components.values == pca.components.values);
    CHECK(pca2.eigenvalues == pca.eigenvalues);

    std::vector<std::size_t> labels(30);
    for (std::size_t i = 0; i < 30; ++i) labels[i] = i % 2;
    LdaModel lda = lda_fit(pca_transform_all(pca, x), labels);
    std::string lda_path = (dir / "lda.bin").string();
    save_lda(lda, lda_path);
    LdaModel lda2 = load_lda(lda_path);
    CHECK(lda2.class_means.values == lda.class_means.values);
    CHECK(lda2.solved_means.values == lda.solved_means.values);
    CHECK(lda2.constants == lda.constants);
    std::vector<double> q(4, 0.3);
    CHECK(lda_predict(lda2, q) == lda_predict(lda, q));
}
