#include "nh2st/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nh2st {

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
}

}  // namespace

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t r = 0;
    for (const auto& row : rows) {
        if (row.size() != m.cols()) throw std::invalid_argument("from_rows: ragged rows");
        std::size_t c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
    Matrix m(1, values.size());
    std::copy(values.begin(), values.end(), m.data().begin());
    return m;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix matmul_reference(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) shape_error("matmul", a, b);
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    }
    return c;
}

namespace {

// ikj order: better locality on b, same per-entry summation order over k
// as the reference kernel.
void matmul_rows(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
    const std::size_t n = b.cols(), kk = a.cols();
    double* crow = c.row(i).data();
    for (std::size_t k = 0; k < kk; ++k) {
        const double aik = a(i, k);
        const double* brow = b.row(k).data();
        for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) shape_error("matmul", a, b);
    Matrix c(a.rows(), b.cols());
#ifdef _OPENMP
    const bool par = a.rows() >= 4 && a.rows() * a.cols() * b.cols() >= (1u << 18) &&
                     omp_get_max_threads() > 1;
#pragma omp parallel for schedule(static) if (par)
    for (long long i = 0; i < static_cast<long long>(a.rows()); ++i)
        matmul_rows(a, b, c, static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < a.rows(); ++i) matmul_rows(a, b, c, i);
#endif
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) shape_error("add", a, b);
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) shape_error("sub", a, b);
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) shape_error("hadamard", a, b);
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
    return c;
}

Matrix scale(const Matrix& a, double c) {
    Matrix m = a;
    for (double& v : m.data()) v *= c;
    return m;
}

Matrix relu(const Matrix& a) {
    Matrix m = a;
    for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
    return m;
}

Matrix add_row_broadcast(const Matrix& a, const Matrix& bias) {
    if (bias.rows() != 1 || bias.cols() != a.cols()) shape_error("add_row_broadcast", a, bias);
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) += bias(0, j);
    return c;
}

Matrix col_sums(const Matrix& a) {
    Matrix s(1, a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s(0, j) += a(i, j);
    return s;
}

Matrix mean_rows(const Matrix& a) {
    if (a.rows() == 0) throw std::invalid_argument("mean_rows: empty matrix");
    Matrix s = col_sums(a);
    for (double& v : s.data()) v /= static_cast<double>(a.rows());
    return s;
}

double sum_sq(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return s;
}

Matrix l2_normalize_rows(const Matrix& a) {
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) ss += a(i, j) * a(i, j);
        if (ss == 0.0) continue;
        const double inv = 1.0 / std::sqrt(ss);
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) *= inv;
    }
    return c;
}

std::vector<double> softmax(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("softmax: empty input");
    const double m = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

Matrix row_softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto p = softmax(logits.row(i));
        std::copy(p.begin(), p.end(), out.row(i).begin());
    }
    return out;
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine_sim: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace nh2st
