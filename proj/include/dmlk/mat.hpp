#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dmlk/errors.hpp"

namespace dmlk {

using Vector = std::vector<double>;

// Dense row-major matrix. Deliberately minimal: the project needs storage,
// products and a Cholesky factor, not a general linear-algebra library.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    const double* row(int i) const { return data_.data() + static_cast<std::size_t>(i) * cols_; }
    double* row(int i) { return data_.data() + static_cast<std::size_t>(i) * cols_; }

    const std::vector<double>& data() const { return data_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

inline double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline double dot(const Vector& a, const Vector& b) {
    return dot(a.data(), b.data(), static_cast<int>(a.size()));
}

inline double mean(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample variance with the 1/(n-1) divisor.
inline double sample_variance(const Vector& v) {
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(n - 1);
}

inline double sample_sd(const Vector& v) { return std::sqrt(sample_variance(v)); }

// y = M x
inline Vector matvec(const Matrix& m, const Vector& x) {
    Vector y(static_cast<std::size_t>(m.rows()), 0.0);
    for (int i = 0; i < m.rows(); ++i) y[static_cast<std::size_t>(i)] = dot(m.row(i), x.data(), m.cols());
    return y;
}

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) {
    for (double x : m.data())
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace dmlk
