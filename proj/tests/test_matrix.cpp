#include <cmath>

#include <stdexcept>

#include "doctest.h"
#include "fedlora/matrix.hpp"
#include "fedlora/rng.hpp"

using namespace fedlora;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.normal();
    return m;
}

Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

// Independent oracle: naive triple loop, j-innermost in a different order
// than the implementation.
Matrix matmul_oracle(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, b.cols);
    for (std::size_t j = 0; j < b.cols; ++j) {
        for (std::size_t i = 0; i < a.rows; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += a.at(i, k) * b.at(k, j);
            out.at(i, j) = acc;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("matmul identity") {
    Rng rng(7);
    const Matrix m = random_matrix(3, 5, rng);
    CHECK(matmul(identity(3), m) == m);
}

TEST_CASE("matmul forced arithmetic") {
    const Matrix a(2, 2, {1, 2, 3, 4});
    const Matrix b(2, 1, {0, 1});
    const Matrix expected(2, 1, {2, 4});
    CHECK(matmul(a, b) == expected);
}

TEST_CASE("matmul matches triple-loop oracle") {
    Rng rng(11);
    const Matrix a = random_matrix(5, 7, rng);
    const Matrix b = random_matrix(7, 3, rng);
    const Matrix expected = matmul_oracle(a, b);
    CHECK(max_abs_diff(matmul(a, b), expected) <= 1e-12);
    CHECK(max_abs_diff(matmul_serial(a, b), expected) <= 1e-12);
}

TEST_CASE("matmul parallel path agrees with serial reference") {
    Rng rng(12);
    const Matrix a = random_matrix(90, 80, rng);
    const Matrix b = random_matrix(80, 70, rng);
    CHECK(max_abs_diff(matmul(a, b), matmul_serial(a, b)) <= 1e-12);
}

TEST_CASE("matmul dimension mismatch names both shapes") {
    const Matrix a(2, 3);
    const Matrix b(2, 2);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), std::invalid_argument);
}

TEST_CASE("matmul associativity on random triples") {
    Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix a = random_matrix(4, 6, rng);
        const Matrix b = random_matrix(6, 5, rng);
        const Matrix c = random_matrix(5, 3, rng);
        const Matrix left = matmul(matmul(a, b), c);
        const Matrix right = matmul(a, matmul(b, c));
        CHECK(max_abs_diff(left, right) <= 1e-9 * (1.0 + frobenius_norm(left)));
    }
}

TEST_CASE("frobenius norm basics") {
    CHECK(frobenius_norm(Matrix(3, 4)) == 0.0);
    CHECK(frobenius_norm(Matrix(1, 2, {3, 4})) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("frobenius norm matches summation oracle") {
    Rng rng(17);
    const Matrix m = random_matrix(4, 4, rng);
    double sum = 0.0;
    for (double v : m.data) sum += v * v;
    CHECK(frobenius_norm(m) == doctest::Approx(std::sqrt(sum)).epsilon(1e-12));
}

TEST_CASE("frobenius norm absolute homogeneity") {
    Rng rng(19);
    const Matrix m = random_matrix(6, 3, rng);
    for (double c : {-2.5, 0.0, 0.3, 7.0}) {
        CHECK(frobenius_norm(c * m) ==
              doctest::Approx(std::abs(c) * frobenius_norm(m)).epsilon(1e-12));
    }
}
