#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "dmlk/errors.hpp"
#include "dmlk/mat.hpp"
#include "dmlk/rng.hpp"

namespace dmlk {

// Symmetric positive-definite covariance matrix. Construction checks symmetry
// to 1e-12 absolute; positive definiteness surfaces later as a Cholesky
// failure, which is an error rather than silent regularization.
class CovarianceMatrix {
public:
    explicit CovarianceMatrix(Matrix m) : m_(std::move(m)) {
        if (m_.rows() < 1 || m_.rows() != m_.cols())
            throw ValidationError("covariance matrix must be square with p >= 1");
        for (int i = 0; i < m_.rows(); ++i)
            for (int j = 0; j < i; ++j)
                if (std::abs(m_(i, j) - m_(j, i)) > 1e-12)
                    throw ValidationError("covariance matrix not symmetric at (" + std::to_string(i) +
                                          "," + std::to_string(j) + ")");
    }

    int p() const { return m_.rows(); }
    double operator()(int i, int j) const { return m_(i, j); }
    const Matrix& entries() const { return m_; }

private:
    Matrix m_;
};

// Toeplitz correlation structure: entry (j, k) = rho^|j-k|, unit diagonal.
inline CovarianceMatrix toeplitz_sigma(int p, double rho) {
    if (p < 1) throw ValidationError("toeplitz_sigma: p must be >= 1");
    if (rho < 0.0 || rho >= 1.0)
        throw ValidationError("toeplitz_sigma: rho must lie in [0, 1), matrix is not positive definite otherwise");
    Matrix m(p, p);
    for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k) m(j, k) = std::pow(rho, std::abs(j - k));
    return CovarianceMatrix(std::move(m));
}

// Lower-triangular Cholesky factor, no pivoting. A non-positive pivot is a
// hard error naming the failing index: the generated designs are positive
// definite by construction, so a failure means a caller bug.
inline Matrix chol_lower(const CovarianceMatrix& sigma) {
    const int p = sigma.p();
    Matrix l(p, p);
    for (int j = 0; j < p; ++j) {
        double d = sigma(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= 0.0)
            throw NumericError("chol_lower: matrix not positive definite, pivot " + std::to_string(j) +
                               " = " + std::to_string(d));
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < p; ++i) {
            double s = sigma(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

// n independent rows from N(0, sigma): each row is L z with z standard normal.
inline Matrix sample_mvn(int n, const CovarianceMatrix& sigma, SeededStream& stream) {
    if (n < 1) throw ValidationError("sample_mvn: n must be >= 1");
    const Matrix l = chol_lower(sigma);
    const int p = sigma.p();
    Matrix x(n, p);
    Vector z(static_cast<std::size_t>(p));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) z[static_cast<std::size_t>(j)] = stream.normal();
        double* row = x.row(i);
        for (int j = 0; j < p; ++j) row[j] = dot(l.row(j), z.data(), j + 1);
    }
    return x;
}

inline Vector sample_std_normal(int n, SeededStream& stream) {
    if (n < 1) throw ValidationError("sample_std_normal: n must be >= 1");
    Vector v(static_cast<std::size_t>(n));
    for (auto& x : v) x = stream.normal();
    return v;
}

}  // namespace dmlk
