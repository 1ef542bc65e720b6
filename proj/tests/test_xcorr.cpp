#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rotex/errors.hpp"
#include "rotex/xcorr.hpp"

using namespace rotex;

TEST_CASE("self-correlation at zero lag") {
    std::mt19937_64 rng(21);
    Tensor k = oracles::random_tensor(5, 5, rng);
    double expected = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) expected += k(i) * k(i);
    for (auto method : {CorrMethod::kDirect, CorrMethod::kFft}) {
        Tensor out = xcorr2_valid(k, k, method);
        REQUIRE(out.rows() == 1);
        REQUIRE(out.cols() == 1);
        CHECK(out(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("impulse kernel extracts the center crop") {
    std::mt19937_64 rng(22);
    Tensor img = oracles::random_tensor(10, 12, rng);
    Tensor k({3, 3});
    k(1, 1) = 1.0;
    Tensor out = xcorr2_valid(img, k, CorrMethod::kDirect);
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c)
            CHECK(out(r, c) == doctest::Approx(img(r + 1, c + 1)));
}

TEST_CASE("fft path equals direct path and the sliding-window oracle") {
    std::mt19937_64 rng(23);
    for (auto [h, w, n] : {std::tuple<std::size_t, std::size_t, std::size_t>{16, 16, 5},
                           {30, 17, 9},
                           {64, 64, 15},
                           {128, 128, 35}}) {
        Tensor img = oracles::random_tensor(h, w, rng);
        Tensor k = oracles::random_tensor(n, n, rng);
        Tensor direct = xcorr2_valid(img, k, CorrMethod::kDirect);
        Tensor fft = xcorr2_valid(img, k, CorrMethod::kFft);
        Tensor oracle = oracles::sliding_xcorr(img, k);
        CHECK(max_abs_diff(direct, fft) <= 1e-10);
        CHECK(max_abs_diff(direct, oracle) <= 1e-12);
    }
}

TEST_CASE("kernel larger than image is a shape error") {
    Tensor img({4, 4});
    Tensor k({5, 5});
    CHECK_THROWS_AS(xcorr2_valid(img, k), ShapeError);
    CHECK_THROWS_AS(xcorr2_valid(img, Tensor({4, 6})), ShapeError);
}
