#include <stdexcept>
#include <cmath>
#include <random>

#include "doctest.h"
#include "nh2st/matrix.hpp"

using namespace nh2st;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double s = 1.0) {
    std::uniform_real_distribution<double> d(-s, s);
    Matrix m(r, c);
    for (double& v : m.data()) v = d(rng);
    return m;
}

}  // namespace

TEST_CASE("matmul identity") {
    std::mt19937_64 rng(1);
    const Matrix x = random_matrix(3, 5, rng);
    CHECK(matmul(Matrix::identity(3), x) == x);
}

TEST_CASE("matmul hand-computed 2x2 by 2x1") {
    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    const Matrix b = Matrix::from_rows({{0}, {1}});
    const Matrix c = matmul(a, b);
    CHECK(c.rows() == 2);
    CHECK(c.cols() == 1);
    CHECK(c(0, 0) == 2.0);
    CHECK(c(1, 0) == 4.0);
}

TEST_CASE("matmul transpose identity (AB)^T = B^T A^T") {
    std::mt19937_64 rng(2);
    const Matrix a = random_matrix(3, 4, rng);
    const Matrix b = random_matrix(4, 2, rng);
    const Matrix lhs = transpose(matmul(a, b));
    const Matrix rhs = matmul(transpose(b), transpose(a));
    REQUIRE(lhs.same_shape(rhs));
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-13));
}

TEST_CASE("matmul shape mismatch rejected") {
    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("parallel kernel is bitwise identical to the serial reference") {
    std::mt19937_64 rng(3);
    for (auto [r, k, c] : {std::array<std::size_t, 3>{1, 1, 1},
                           {5, 7, 3},
                           {64, 64, 64},
                           {130, 40, 90}}) {
        const Matrix a = random_matrix(r, k, rng);
        const Matrix b = random_matrix(k, c, rng);
        CHECK(matmul(a, b) == matmul_reference(a, b));
    }
}

TEST_CASE("softmax of a constant vector is uniform") {
    const double c = 3.7;
    const std::vector<double> v{c, c, c};
    const auto p = softmax(v);
    for (double x : p) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("softmax closed form [0, ln 3]") {
    const std::vector<double> v{0.0, std::log(3.0)};
    const auto p = softmax(v);
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("softmax entries are strictly inside (0,1) for moderate inputs") {
    std::mt19937_64 rng(40);
    std::uniform_real_distribution<double> d(-30.0, 30.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(8);
        for (double& x : v) x = d(rng);
        for (double x : softmax(v)) {
            CHECK(x > 0.0);
            CHECK(x < 1.0);
        }
    }
}

TEST_CASE("softmax shift invariance and unit sum up to magnitude 1e3") {
    // Spreads beyond ~745 underflow the smallest exponentials to zero;
    // the unit sum is what survives at this range.
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(-1e3, 1e3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(8);
        for (double& x : v) x = d(rng);
        const auto p = softmax(v);
        double sum = 0.0;
        for (double x : p) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
            sum += x;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);

        const double c = d(rng);
        std::vector<double> shifted = v;
        for (double& x : shifted) x += c;
        const auto q = softmax(shifted);
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-12);
    }
}

TEST_CASE("softmax rejects empty input") {
    CHECK_THROWS_AS(softmax(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("cosine similarity closed forms") {
    const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0}, c{1.0, 1.0};
    CHECK(cosine_sim(a, a) == 1.0);
    CHECK(cosine_sim(a, b) == 0.0);
    CHECK(std::abs(cosine_sim(a, c) - 0.7071067811865475) <= 1e-12);
}

TEST_CASE("cosine similarity of a zero vector is 0 by convention") {
    const std::vector<double> z{0.0, 0.0}, a{1.0, 2.0};
    CHECK(cosine_sim(z, a) == 0.0);
    CHECK(cosine_sim(a, z) == 0.0);
}

TEST_CASE("cosine similarity stays within [-1, 1]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-10.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(6), b(6);
        for (double& x : a) x = d(rng);
        for (double& x : b) x = d(rng);
        const double s = cosine_sim(a, b);
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
    }
}
