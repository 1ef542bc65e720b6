#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rotex/errors.hpp"
#include "rotex/tensor.hpp"

using namespace rotex;

TEST_CASE("shape and value count must agree") {
    CHECK_NOTHROW(Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6}));
    CHECK_THROWS_AS(Tensor::from_values({2, 3}, {1, 2, 3}), ShapeError);
    CHECK_THROWS_AS(Tensor(std::vector<std::size_t>{0, 3}), ShapeError);
    CHECK_THROWS_AS(Tensor(std::vector<std::size_t>{}), ShapeError);
}

TEST_CASE("row-major indexing") {
    Tensor t = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t(0, 0) == 1);
    CHECK(t(0, 2) == 3);
    CHECK(t(1, 0) == 4);
    Tensor t3 = Tensor::from_values({2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(t3(1, 0, 1) == 5);
}

TEST_CASE("rot90 quarter turns") {
    Tensor t = Tensor::from_values({2, 2}, {1, 2, 3, 4});
    Tensor once = rot90(t, 1);
    // out(r, c) = in(c, n-1-r)
    CHECK(once(0, 0) == 2);
    CHECK(once(0, 1) == 4);
    CHECK(once(1, 0) == 1);
    CHECK(once(1, 1) == 3);
    CHECK(max_abs_diff(rot90(t, 4), t) == 0.0);
    CHECK(max_abs_diff(rot90(rot90(t, 1), -1), t) == 0.0);
}

TEST_CASE("rot90 rectangular") {
    Tensor t = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor r = rot90(t, 1);
    REQUIRE(r.rows() == 3);
    REQUIRE(r.cols() == 2);
    CHECK(r(0, 0) == 3);
    CHECK(r(2, 1) == 4);
}

TEST_CASE("pad and crop") {
    Tensor t = Tensor::from_values({2, 2}, {1, 2, 3, 4});
    Tensor p = pad_to(t, 4, 5);
    CHECK(p(0, 0) == 1);
    CHECK(p(1, 1) == 4);
    CHECK(p(3, 4) == 0);
    CHECK_THROWS_AS(pad_to(t, 1, 5), ShapeError);

    Tensor big = Tensor::from_values({4, 4}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15});
    Tensor c = center_crop(big, 2, 2);
    CHECK(c(0, 0) == 5);
    CHECK(c(1, 1) == 10);
    CHECK_THROWS_AS(center_crop(big, 5, 2), ShapeError);
}

TEST_CASE("finiteness guard") {
    Tensor t = Tensor::from_values({1, 2}, {1.0, 2.0});
    CHECK_NOTHROW(t.require_finite("test"));
    t(1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(t.require_finite("test"), NumericError);
}
