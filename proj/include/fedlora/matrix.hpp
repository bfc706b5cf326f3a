#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fedlora {

// Dense row-major matrix of 64-bit reals. Small by design; the hot loops
// live in matmul() which parallelizes with OpenMP above a size threshold.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values);

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
    std::string shape_str() const;

    bool operator==(const Matrix& other) const = default;
};

// Throws std::runtime_error if any entry is NaN or Inf.
void ensure_finite(const Matrix& m, const char* where);

// OpenMP-parallel product (parallel only when the problem is large enough
// to pay for the fork). Serial reference below is kept for tests and the
// benchmark target.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_serial(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& m);

Matrix transpose(const Matrix& m);

// y += alpha * x
void axpy(double alpha, const Matrix& x, Matrix& y);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& m);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace fedlora
