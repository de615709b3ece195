#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace nh2st {

/// Dense row-major matrix of 64-bit reals. Row vectors are 1xN matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix row_vector(std::span<const double> values);
    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool all_finite() const;

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Product kernel; dispatches to an OpenMP row-parallel loop for large
/// shapes. Bitwise identical to matmul_reference for all inputs (the
/// per-entry accumulation order over the inner dimension is the same).
Matrix matmul(const Matrix& a, const Matrix& b);

/// Plain serial triple loop, kept as the baseline the parallel kernel is
/// tested and benchmarked against.
Matrix matmul_reference(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
Matrix relu(const Matrix& a);
/// Adds a 1xC bias row to every row of a.
Matrix add_row_broadcast(const Matrix& a, const Matrix& bias);
/// 1xC column sums.
Matrix col_sums(const Matrix& a);
/// 1xC mean over rows.
Matrix mean_rows(const Matrix& a);
double sum_sq(const Matrix& a);
/// Rows scaled to unit Euclidean norm; all-zero rows stay zero.
Matrix l2_normalize_rows(const Matrix& a);

/// Numerically stable softmax (max subtraction). Empty input rejected.
std::vector<double> softmax(std::span<const double> v);
Matrix row_softmax(const Matrix& logits);

/// Cosine similarity clamped to [-1, 1]; zero-norm inputs give 0.
double cosine_sim(std::span<const double> a, std::span<const double> b);

}  // namespace nh2st
