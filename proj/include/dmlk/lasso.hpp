#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dmlk/errors.hpp"
#include "dmlk/folds.hpp"
#include "dmlk/mat.hpp"
#include "dmlk/ols.hpp"
#include "dmlk/rng.hpp"

namespace dmlk {

struct LassoParams {
    // Explicit grid (descending, positive). When empty the pathwise default is
    // used: n_lambdas log-spaced values from lambda_max down to
    // lambda_min_ratio * lambda_max, with lambda_max = max_j |x_j' y_c| / n on
    // the standardized design.
    Vector lambda_grid;
    int n_lambdas = 100;
    double lambda_min_ratio = 1e-3;
    int cv_folds = 5;
    // Convergence inside path fitting follows the usual pathwise rule: a pass
    // converges when max_j (dbeta_j)^2 <= tol * Var(y_c). The standalone
    // coordinate_descent entry point applies tol to the coefficient change
    // directly, which is the strict reading used by its stationarity contract.
    double tol = 1e-7;
    int max_iter = 10000;  // pass cap per lambda
    // Path fitting stops extending once the active set reaches this fraction
    // of the sample; beyond that point a p > n fit is saturated and smaller
    // penalties only chase degenerate directions. Remaining grid points reuse
    // the last solved coefficients.
    double saturation_fraction = 0.9;
};

namespace lasso_detail {

// Column-major standardized design. Centering and scaling use the 1/n
// convention so unit columns satisfy x_j'x_j / n = 1. Zero-variance columns
// get scale 0 and are excluded from the active set.
struct StandardizedDesign {
    int n = 0, p = 0;
    std::vector<Vector> cols;
    Vector mean, scale;
};

inline StandardizedDesign standardize(const Matrix& x) {
    StandardizedDesign d;
    d.n = x.rows();
    d.p = x.cols();
    d.mean.assign(static_cast<std::size_t>(d.p), 0.0);
    d.scale.assign(static_cast<std::size_t>(d.p), 0.0);
    d.cols.assign(static_cast<std::size_t>(d.p), Vector(static_cast<std::size_t>(d.n), 0.0));
    for (int j = 0; j < d.p; ++j) {
        double m = 0.0;
        for (int i = 0; i < d.n; ++i) m += x(i, j);
        m /= d.n;
        double v = 0.0;
        for (int i = 0; i < d.n; ++i) {
            const double c = x(i, j) - m;
            v += c * c;
        }
        v /= d.n;
        d.mean[static_cast<std::size_t>(j)] = m;
        if (v > 0.0) {
            const double s = std::sqrt(v);
            d.scale[static_cast<std::size_t>(j)] = s;
            auto& col = d.cols[static_cast<std::size_t>(j)];
            for (int i = 0; i < d.n; ++i) col[static_cast<std::size_t>(i)] = (x(i, j) - m) / s;
        }
    }
    return d;
}

inline double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

// Cyclic coordinate descent state over a fixed standardized design. Two
// engines share the interface: the residual engine keeps r = y - X beta and
// prices a coordinate through one O(n) dot product; the gram engine caches
// X'X / n and X'y / n up front so coordinate updates cost O(p), which wins
// whenever p is small relative to n (the low-dimensional designs).
class Solver {
public:
    Solver(const std::vector<Vector>& cols, Vector sq_norm, const Vector& y_c, bool use_gram)
        : cols_(cols), sq_(std::move(sq_norm)), n_(static_cast<int>(y_c.size())),
          p_(static_cast<int>(cols.size())), use_gram_(use_gram), beta_(cols.size(), 0.0) {
        if (use_gram_) {
            gram_.assign(static_cast<std::size_t>(p_) * p_, 0.0);
            xty_.assign(static_cast<std::size_t>(p_), 0.0);
            grad_.assign(static_cast<std::size_t>(p_), 0.0);
            for (int a = 0; a < p_; ++a) {
                if (sq_[static_cast<std::size_t>(a)] <= 0.0) continue;
                xty_[static_cast<std::size_t>(a)] = dot(cols_[static_cast<std::size_t>(a)], y_c) / n_;
                for (int b = 0; b <= a; ++b) {
                    if (sq_[static_cast<std::size_t>(b)] <= 0.0) continue;
                    const double g = dot(cols_[static_cast<std::size_t>(a)], cols_[static_cast<std::size_t>(b)]) / n_;
                    gram_[static_cast<std::size_t>(a) * p_ + b] = g;
                    gram_[static_cast<std::size_t>(b) * p_ + a] = g;
                }
            }
        } else {
            r_ = y_c;
        }
    }

    const Vector& beta() const { return beta_; }

    void set_warm(const Vector& warm, const Vector& y_c) {
        beta_ = warm;
        if (use_gram_) {
            for (int j = 0; j < p_; ++j) {
                double s = 0.0;
                for (int k = 0; k < p_; ++k) s += gram_[static_cast<std::size_t>(j) * p_ + k] * beta_[static_cast<std::size_t>(k)];
                grad_[static_cast<std::size_t>(j)] = s;
            }
        } else {
            r_ = y_c;
            for (int j = 0; j < p_; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                if (beta_[ju] != 0.0)
                    for (int i = 0; i < n_; ++i) r_[static_cast<std::size_t>(i)] -= cols_[ju][static_cast<std::size_t>(i)] * beta_[ju];
            }
        }
    }

    // one coordinate pass over idx; returns the largest |change|
    template <typename Iter>
    double sweep(Iter begin, Iter end, double lambda) {
        double max_delta = 0.0;
        for (Iter it = begin; it != end; ++it) {
            const int j = *it;
            const auto ju = static_cast<std::size_t>(j);
            const double sq = sq_[ju];
            if (sq <= 0.0) continue;
            const double partial = use_gram_
                                       ? xty_[ju] - grad_[ju] + sq * beta_[ju]
                                       : dot(cols_[ju], r_) / n_ + sq * beta_[ju];
            const double next = soft_threshold(partial, lambda) / sq;
            const double delta = next - beta_[ju];
            if (delta != 0.0) {
                if (use_gram_) {
                    const double* gj = gram_.data() + static_cast<std::size_t>(j) * p_;
                    for (int k = 0; k < p_; ++k) grad_[static_cast<std::size_t>(k)] += gj[k] * delta;
                } else {
                    const double* cj = cols_[ju].data();
                    for (int i = 0; i < n_; ++i) r_[static_cast<std::size_t>(i)] -= cj[i] * delta;
                }
                beta_[ju] = next;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        return max_delta;
    }

    double kkt_violation(double lambda) const {
        double worst = 0.0;
        for (int j = 0; j < p_; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            if (sq_[ju] <= 0.0) continue;
            const double grad = use_gram_ ? xty_[ju] - grad_[ju] : dot(cols_[ju], r_) / n_;
            const double viol = (beta_[ju] != 0.0) ? std::abs(grad - lambda * (beta_[ju] > 0 ? 1.0 : -1.0))
                                                   : std::max(0.0, std::abs(grad) - lambda);
            worst = std::max(worst, viol);
        }
        return worst;
    }

    // penalized objective (1/2n)||y - X beta||^2 + lambda ||beta||_1; the gram
    // engine reconstructs the quadratic form from its caches
    double objective(double lambda, const Vector& y_c) const {
        double sse = 0.0;
        if (use_gram_) {
            double yty = 0.0;
            for (double v : y_c) yty += v * v;
            double quad = 0.0, lin = 0.0;
            for (int j = 0; j < p_; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                quad += beta_[ju] * grad_[ju];
                lin += beta_[ju] * xty_[ju];
            }
            sse = yty / n_ - 2.0 * lin + quad;
        } else {
            for (double v : r_) sse += v * v;
            sse /= n_;
        }
        double l1 = 0.0;
        for (double b : beta_) l1 += std::abs(b);
        return 0.5 * sse + lambda * l1;
    }

    int active_count() const {
        int c = 0;
        for (double b : beta_)
            if (b != 0.0) ++c;
        return c;
    }

    // Converges the current lambda: full pass, then working-set passes until
    // stable, then a full verification pass that must move nothing beyond the
    // threshold. delta_threshold is an absolute bound on |dbeta| per pass.
    void solve(double lambda, double delta_threshold, int max_iter, std::vector<double>* objective_trace,
               const Vector* y_c_for_trace) {
        std::vector<int> all(static_cast<std::size_t>(p_));
        for (int j = 0; j < p_; ++j) all[static_cast<std::size_t>(j)] = j;
        int passes = 0;
        auto budget = [&] {
            if (++passes > max_iter)
                throw ConvergenceError("lasso coordinate descent: pass cap " + std::to_string(max_iter) +
                                           " reached (max stationarity violation " +
                                           std::to_string(kkt_violation(lambda)) + ")",
                                       beta_, kkt_violation(lambda));
        };
        auto trace = [&] {
            if (objective_trace && y_c_for_trace) objective_trace->push_back(objective(lambda, *y_c_for_trace));
        };
        for (;;) {
            budget();
            double delta = sweep(all.begin(), all.end(), lambda);
            trace();
            std::vector<int> working;
            for (int j = 0; j < p_; ++j)
                if (beta_[static_cast<std::size_t>(j)] != 0.0) working.push_back(j);
            while (delta > delta_threshold) {
                budget();
                delta = sweep(working.begin(), working.end(), lambda);
                trace();
            }
            budget();
            const double full_delta = sweep(all.begin(), all.end(), lambda);
            trace();
            if (full_delta <= delta_threshold) return;
        }
    }

private:
    const std::vector<Vector>& cols_;
    Vector sq_;
    int n_ = 0;
    int p_ = 0;
    bool use_gram_ = false;
    Vector beta_;
    Vector r_;      // residual engine
    Vector gram_;   // gram engine: X'X / n
    Vector xty_;    // X'y / n
    Vector grad_;   // (X'X / n) beta
};

inline Vector column_sq_norms(const std::vector<Vector>& cols, const Vector& scale, int n) {
    Vector sq(cols.size(), 0.0);
    for (std::size_t j = 0; j < cols.size(); ++j)
        if (scale.empty() || scale[j] > 0.0) sq[j] = dot(cols[j], cols[j]) / n;
    return sq;
}

inline bool prefer_gram(int n, int p) { return p <= 64 && p < n; }

}  // namespace lasso_detail

// One lasso solve on an already standardized design (unit-variance columns,
// centered response). Convergence is strict: a pass must change no coefficient
// by more than tol, which pins the stationarity conditions to the same scale.
// Returns coefficients on the standardized scale.
inline Vector coordinate_descent(const Matrix& x_std, const Vector& y_c, double lambda, Vector warm, double tol,
                                 int max_iter, std::vector<double>* objective_trace = nullptr) {
    const int n = x_std.rows();
    const int p = x_std.cols();
    if (static_cast<int>(y_c.size()) != n) throw ValidationError("coordinate_descent: response length mismatch");
    if (lambda < 0.0) throw ValidationError("coordinate_descent: lambda must be >= 0");
    if (warm.empty()) warm.assign(static_cast<std::size_t>(p), 0.0);
    if (static_cast<int>(warm.size()) != p) throw ValidationError("coordinate_descent: warm start length mismatch");

    std::vector<Vector> cols(static_cast<std::size_t>(p), Vector(static_cast<std::size_t>(n)));
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = x_std(i, j);
    lasso_detail::Solver solver(cols, lasso_detail::column_sq_norms(cols, {}, n), y_c,
                                lasso_detail::prefer_gram(n, p));
    solver.set_warm(warm, y_c);
    solver.solve(lambda, tol, max_iter, objective_trace, &y_c);
    return solver.beta();
}

struct CvCurve {
    double lambda = 0.0;  // chosen value
    Vector grid;          // descending
    Vector cv_mse;        // mean held-out squared error per grid point
};

namespace lasso_detail {

inline Vector build_grid(const LassoParams& params, double lambda_max) {
    if (!params.lambda_grid.empty()) {
        for (std::size_t i = 0; i < params.lambda_grid.size(); ++i) {
            if (params.lambda_grid[i] <= 0.0) throw ValidationError("lasso lambda grid must be positive");
            if (i > 0 && params.lambda_grid[i] >= params.lambda_grid[i - 1])
                throw ValidationError("lasso lambda grid must be strictly descending");
        }
        return params.lambda_grid;
    }
    Vector grid(static_cast<std::size_t>(params.n_lambdas));
    if (params.n_lambdas == 1) {
        grid[0] = lambda_max;
        return grid;
    }
    const double log_max = std::log(lambda_max);
    const double log_min = std::log(lambda_max * params.lambda_min_ratio);
    for (int i = 0; i < params.n_lambdas; ++i)
        grid[static_cast<std::size_t>(i)] =
            std::exp(log_max + (log_min - log_max) * static_cast<double>(i) / (params.n_lambdas - 1));
    return grid;
}

// Fits the descending path with warm starts and calls visit(g, beta_std)
// after each grid point. Once the active set saturates (p > n fits at tiny
// penalties), the remaining grid points reuse the last solved coefficients.
template <typename Visit>
inline void path(const StandardizedDesign& d, const Vector& y_c, const Vector& grid, const LassoParams& params,
                 Visit&& visit) {
    Solver solver(d.cols, column_sq_norms(d.cols, d.scale, d.n), y_c, prefer_gram(d.n, d.p));
    solver.set_warm(Vector(static_cast<std::size_t>(d.p), 0.0), y_c);
    const double var_y = [&] {
        double s = 0.0;
        for (double v : y_c) s += v * v;
        return s / static_cast<double>(d.n);
    }();
    const double delta_threshold = std::sqrt(params.tol * std::max(var_y, 1e-300));
    const int saturation = std::max(1, static_cast<int>(params.saturation_fraction * d.n));
    bool saturated = false;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (!saturated) {
            solver.solve(grid[g], delta_threshold, params.max_iter, nullptr, nullptr);
            if (d.p >= d.n && solver.active_count() >= saturation) saturated = true;
        }
        visit(g, solver.beta());
    }
}

}  // namespace lasso_detail

// Cross-validated penalty selection: K random folds, one descending path per
// fold with warm starts, held-out squared error accumulated per grid point.
// The minimizer wins; exact ties go to the larger penalty.
inline CvCurve cv_select_lambda(const LassoParams& params, const Matrix& x, const Vector& y, SeededStream& stream) {
    const int n = x.rows();
    if (params.cv_folds < 2) throw ValidationError("cv_select_lambda: cv_folds must be >= 2");
    if (n < params.cv_folds) throw ValidationError("cv_select_lambda: need n >= cv_folds");

    const auto full = lasso_detail::standardize(x);
    const double ymean = mean(y);
    double lambda_max = 0.0;
    for (int j = 0; j < full.p; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (full.scale[ju] <= 0.0) continue;
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += full.cols[ju][static_cast<std::size_t>(i)] * (y[static_cast<std::size_t>(i)] - ymean);
        lambda_max = std::max(lambda_max, std::abs(s) / n);
    }

    CvCurve curve;
    if (lambda_max <= 0.0) {
        // constant response or no varying column: every penalty is equivalent
        curve.grid = params.lambda_grid.empty() ? Vector{0.0} : params.lambda_grid;
        curve.cv_mse.assign(curve.grid.size(), 0.0);
        curve.lambda = curve.grid.front();
        return curve;
    }
    curve.grid = lasso_detail::build_grid(params, lambda_max);
    curve.cv_mse.assign(curve.grid.size(), 0.0);

    const FoldMap folds = make_folds(n, params.cv_folds, stream);
    for (int k = 0; k < folds.k; ++k) {
        std::vector<int> train, test;
        for (int i = 0; i < n; ++i) (folds.assignment[static_cast<std::size_t>(i)] == k ? test : train).push_back(i);

        Matrix xtr(static_cast<int>(train.size()), x.cols());
        Vector ytr(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            for (int j = 0; j < x.cols(); ++j) xtr(static_cast<int>(i), j) = x(train[i], j);
            ytr[i] = y[static_cast<std::size_t>(train[i])];
        }
        const auto d = lasso_detail::standardize(xtr);
        const double ytr_mean = mean(ytr);
        Vector ytr_c(ytr.size());
        for (std::size_t i = 0; i < ytr.size(); ++i) ytr_c[i] = ytr[i] - ytr_mean;

        lasso_detail::path(d, ytr_c, curve.grid, params, [&](std::size_t g, const Vector& beta) {
            double sse = 0.0;
            for (int i : test) {
                double pred = ytr_mean;
                for (int j = 0; j < d.p; ++j) {
                    const auto ju = static_cast<std::size_t>(j);
                    if (beta[ju] != 0.0 && d.scale[ju] > 0.0)
                        pred += beta[ju] * (x(i, j) - d.mean[ju]) / d.scale[ju];
                }
                const double e = y[static_cast<std::size_t>(i)] - pred;
                sse += e * e;
            }
            curve.cv_mse[g] += sse;
        });
    }
    for (auto& m : curve.cv_mse) m /= n;

    std::size_t best = 0;
    for (std::size_t g = 1; g < curve.grid.size(); ++g)
        if (curve.cv_mse[g] < curve.cv_mse[best]) best = g;  // strict: ties keep the larger lambda
    curve.lambda = curve.grid[best];
    return curve;
}

// Cross-validated lasso fit reported on the original scale.
inline LinearModel fit_lasso(const LassoParams& params, const Matrix& x, const Vector& y, SeededStream& stream) {
    const auto curve = cv_select_lambda(params, x, y, stream);
    const auto d = lasso_detail::standardize(x);
    const double ymean = mean(y);

    LinearModel model;
    model.coef.assign(static_cast<std::size_t>(x.cols()), 0.0);
    model.intercept = ymean;
    // {0} is the marker grid for a constant response or all-constant design;
    // either way the intercept-only model is the solution
    if (curve.grid.size() == 1 && curve.grid.front() == 0.0) return model;

    Vector y_c(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y_c[i] = y[i] - ymean;

    // refit on all data, walking the path down to the chosen penalty
    Vector chosen;
    Vector subgrid;
    for (double l : curve.grid) {
        subgrid.push_back(l);
        if (l == curve.lambda) break;
    }
    lasso_detail::path(d, y_c, subgrid, params, [&](std::size_t g, const Vector& beta) {
        if (g + 1 == subgrid.size()) chosen = beta;
    });

    double shift = 0.0;
    for (int j = 0; j < x.cols(); ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (d.scale[ju] > 0.0 && chosen[ju] != 0.0) {
            model.coef[ju] = chosen[ju] / d.scale[ju];
            shift += model.coef[ju] * d.mean[ju];
        }
    }
    model.intercept = ymean - shift;
    return model;
}

}  // namespace dmlk
