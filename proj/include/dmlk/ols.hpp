#pragma once

#include <cmath>

#include "dmlk/errors.hpp"
#include "dmlk/mat.hpp"

namespace dmlk {

// Linear predictor on the original covariate scale. Shared by the OLS and
// lasso learners.
struct LinearModel {
    Vector coef;
    double intercept = 0.0;

    double predict_row(const double* row) const {
        return intercept + dot(coef.data(), row, static_cast<int>(coef.size()));
    }
};

namespace detail {

// Cholesky solve of the SPD system a b = rhs, in place. Returns false if a
// pivot is not positive.
inline bool solve_spd(Matrix a, Vector rhs, Vector& out) {
    const int p = a.rows();
    for (int j = 0; j < p; ++j) {
        double d = a(j, j);
        for (int k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (d <= 0.0) return false;
        a(j, j) = std::sqrt(d);
        for (int i = j + 1; i < p; ++i) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / a(j, j);
        }
    }
    // forward then backward substitution
    for (int i = 0; i < p; ++i) {
        double s = rhs[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) s -= a(i, k) * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = s / a(i, i);
    }
    out.assign(static_cast<std::size_t>(p), 0.0);
    for (int i = p - 1; i >= 0; --i) {
        double s = rhs[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < p; ++k) s -= a(k, i) * out[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(i)] = s / a(i, i);
    }
    return true;
}

}  // namespace detail

// Least squares with intercept, normal equations on centered data. On a
// Cholesky pivot failure (collinear or duplicated columns) the diagonal gets a
// ridge jitter of 1e-10 * trace / p and the solve is retried once.
inline LinearModel fit_ols(const Matrix& x, const Vector& y) {
    const int n = x.rows();
    const int p = x.cols();
    if (n < 2) throw ValidationError("fit_ols: need at least 2 observations");

    Vector xmean(static_cast<std::size_t>(p), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) xmean[static_cast<std::size_t>(j)] += x(i, j);
    for (auto& m : xmean) m /= n;
    const double ymean = mean(y);

    Matrix a(p, p);
    Vector c(static_cast<std::size_t>(p), 0.0);
    for (int i = 0; i < n; ++i) {
        const double* row = x.row(i);
        const double yc = y[static_cast<std::size_t>(i)] - ymean;
        for (int j = 0; j < p; ++j) {
            const double xj = row[j] - xmean[static_cast<std::size_t>(j)];
            c[static_cast<std::size_t>(j)] += xj * yc;
            for (int k = 0; k <= j; ++k) a(j, k) += xj * (row[k] - xmean[static_cast<std::size_t>(k)]);
        }
    }
    for (int j = 0; j < p; ++j)
        for (int k = j + 1; k < p; ++k) a(j, k) = a(k, j);

    LinearModel model;
    if (p == 0) {
        model.intercept = ymean;
        return model;
    }
    if (!detail::solve_spd(a, c, model.coef)) {
        double trace = 0.0;
        for (int j = 0; j < p; ++j) trace += a(j, j);
        const double jitter = 1e-10 * trace / p;
        if (trace <= 0.0) {
            // every column constant: nothing to fit beyond the mean
            model.coef.assign(static_cast<std::size_t>(p), 0.0);
            model.intercept = ymean;
            return model;
        }
        for (int j = 0; j < p; ++j) a(j, j) += jitter;
        if (!detail::solve_spd(a, c, model.coef))
            throw NumericError("fit_ols: normal equations singular even after ridge jitter");
    }
    double dotmean = 0.0;
    for (int j = 0; j < p; ++j) dotmean += model.coef[static_cast<std::size_t>(j)] * xmean[static_cast<std::size_t>(j)];
    model.intercept = ymean - dotmean;
    return model;
}

}  // namespace dmlk
