#include "fedlora/matrix.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace fedlora {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols) {
        throw std::invalid_argument("Matrix: data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str());
    }
}

std::string Matrix::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

void ensure_finite(const Matrix& m, const char* where) {
    for (double v : m.data) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string(where) + ": non-finite entry in " +
                                     m.shape_str() + " matrix");
        }
    }
}

namespace {

void check_matmul_shapes(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: inner dimensions disagree, " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b);
    Matrix out(a.rows, b.cols);
    const std::int64_t n_rows = static_cast<std::int64_t>(a.rows);
    const bool big = a.rows * a.cols * b.cols >= 1u << 16;
#pragma omp parallel for schedule(static) if (big)
    for (std::int64_t i = 0; i < n_rows; ++i) {
        const double* arow = &a.data[static_cast<std::size_t>(i) * a.cols];
        double* orow = &out.data[static_cast<std::size_t>(i) * out.cols];
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = &b.data[k * b.cols];
            for (std::size_t j = 0; j < b.cols; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    ensure_finite(out, "matmul");
    return out;
}

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b);
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) {
                acc += a.at(i, k) * b.at(k, j);
            }
            out.at(i, j) = acc;
        }
    }
    ensure_finite(out, "matmul_serial");
    return out;
}

double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (double v : m.data) acc += v * v;
    return std::sqrt(acc);
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            out.at(j, i) = m.at(i, j);
        }
    }
    return out;
}

void axpy(double alpha, const Matrix& x, Matrix& y) {
    if (!x.same_shape(y)) {
        throw std::invalid_argument("axpy: shape mismatch, " + x.shape_str() + " vs " +
                                    y.shape_str());
    }
    for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] += alpha * x.data[i];
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    Matrix out = a;
    axpy(1.0, b, out);
    return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    Matrix out = a;
    axpy(-1.0, b, out);
    return out;
}

Matrix operator*(double s, const Matrix& m) {
    Matrix out = m;
    for (double& v : out.data) v *= s;
    return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("max_abs_diff: shape mismatch, " + a.shape_str() + " vs " +
                                    b.shape_str());
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    }
    return m;
}

}  // namespace fedlora
