#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "dmlk/dgp.hpp"
#include "dmlk/errors.hpp"
#include "dmlk/folds.hpp"
#include "dmlk/learners.hpp"
#include "dmlk/mat.hpp"
#include "dmlk/normal.hpp"
#include "dmlk/rng.hpp"

namespace dmlk {

// Out-of-fold residuals: u_hat = D - m_hat(X), v_hat = Y - g_hat(X), with both
// models trained on the folds not containing the observation.
struct Residuals {
    Vector u_hat;
    Vector v_hat;
};

// Generic cross-fitting over any model factory. make_model(fold, role,
// x_train, target_train) must return a callable double(const double* row);
// role 0 is the treatment regression, role 1 the outcome regression. Tests
// inject fixed predictors through this hook.
template <typename MakeModel>
Residuals crossfit_residuals_generic(const Dataset& ds, const FoldMap& folds, MakeModel&& make_model) {
    const int n = ds.n();
    if (folds.n() != n) throw ValidationError("crossfit: fold map does not cover the dataset");
    Residuals res;
    res.u_hat.assign(static_cast<std::size_t>(n), 0.0);
    res.v_hat.assign(static_cast<std::size_t>(n), 0.0);

    for (int k = 0; k < folds.k; ++k) {
        std::vector<int> train, test;
        for (int i = 0; i < n; ++i) (folds.assignment[static_cast<std::size_t>(i)] == k ? test : train).push_back(i);
        if (test.empty()) continue;

        Matrix x_train(static_cast<int>(train.size()), ds.p());
        Vector d_train(train.size()), y_train(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            const int r = train[i];
            for (int j = 0; j < ds.p(); ++j) x_train(static_cast<int>(i), j) = ds.x(r, j);
            d_train[i] = ds.d[static_cast<std::size_t>(r)];
            y_train[i] = ds.y[static_cast<std::size_t>(r)];
        }
        auto m_hat = make_model(k, 0, x_train, d_train);
        auto g_hat = make_model(k, 1, x_train, y_train);
        for (int i : test) {
            const auto iu = static_cast<std::size_t>(i);
            res.u_hat[iu] = ds.d[iu] - m_hat(ds.x.row(i));
            res.v_hat[iu] = ds.y[iu] - g_hat(ds.x.row(i));
        }
    }
    return res;
}

// Cross-fitting with a learner spec. The stream forks once per (fold, role),
// so different learners on the same data stay comparable draw-for-draw.
inline Residuals crossfit_residuals(const Dataset& ds, const LearnerSpec& spec, const FoldMap& folds,
                                    const SeededStream& stream) {
    return crossfit_residuals_generic(ds, folds, [&](int fold, int role, const Matrix& x_train, const Vector& t_train) {
        FittedRegressor model;
        try {
            model = fit(spec, x_train, t_train, stream.fork(static_cast<std::uint64_t>(1 + fold),
                                                            static_cast<std::uint64_t>(role)));
        } catch (const std::exception& e) {
            throw NumericError("crossfit: " + std::string(role == 0 ? "treatment" : "outcome") +
                               " learner failed on fold " + std::to_string(fold) + ": " + e.what());
        }
        return [model = std::move(model)](const double* row) { return model.predict_row(row); };
    });
}

// Partialling-out point estimate, the root of the empirical orthogonal score.
inline double estimate_theta(const Vector& u_hat, const Vector& v_hat) {
    const double suu = dot(u_hat, u_hat);
    if (!(suu > 0.0)) throw NumericError("degenerate score: sum of squared treatment residuals is zero");
    return dot(u_hat, v_hat) / suu;
}

// Empirical score Jacobian -(1/n) sum u^2 and its condition number n / sum u^2.
// kappa * |j_hat| = 1 by construction.
inline std::pair<double, double> jacobian_and_kappa(const Vector& u_hat) {
    const double suu = dot(u_hat, u_hat);
    if (!(suu > 0.0)) throw NumericError("degenerate score: sum of squared treatment residuals is zero");
    const double n = static_cast<double>(u_hat.size());
    return {-suu / n, n / suu};
}

// Plug-in standard error (kappa / sqrt(n)) * sqrt((1/n) sum u_i^2 eps_i^2).
inline double se_dml(const Vector& u_hat, const Vector& eps_hat, double kappa, int n) {
    if (n < 2) throw ValidationError("se_dml: need n >= 2");
    double s = 0.0;
    for (std::size_t i = 0; i < u_hat.size(); ++i) {
        const double ue = u_hat[i] * eps_hat[i];
        s += ue * ue;
    }
    return kappa / std::sqrt(static_cast<double>(n)) * std::sqrt(s / n);
}

// Two-sided normal interval theta_hat +- z_{1-alpha/2} se.
inline std::pair<double, double> confidence_interval(double theta_hat, double se, double alpha) {
    if (se < 0.0) throw ValidationError("confidence_interval: se must be >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("confidence_interval: alpha must lie in (0, 1)");
    const double z = normal_quantile(1.0 - alpha / 2.0);
    return {theta_hat - z * se, theta_hat + z * se};
}

enum class RegimeLabel { WellConditioned, ModeratelyIll, SeverelyIll };

inline const char* regime_token(RegimeLabel label) {
    switch (label) {
        case RegimeLabel::WellConditioned: return "well";
        case RegimeLabel::ModeratelyIll: return "moderate";
        default: return "severe";
    }
}

inline const char* regime_display(RegimeLabel label) {
    switch (label) {
        case RegimeLabel::WellConditioned: return "kappa < 1";
        case RegimeLabel::ModeratelyIll: return "1 <= kappa < 2";
        default: return "kappa >= 2";
    }
}

struct Regime {
    RegimeLabel label = RegimeLabel::WellConditioned;
    double kappa = 0.0;
};

// Thresholds: below 1 well-conditioned, [1, 2) moderately ill-conditioned,
// 2 and above severely ill-conditioned. Boundary values take the more severe
// class.
inline Regime classify_regime(double kappa) {
    if (!(kappa > 0.0)) throw ValidationError("classify_regime: kappa must be positive");
    if (kappa < 1.0) return {RegimeLabel::WellConditioned, kappa};
    if (kappa < 2.0) return {RegimeLabel::ModeratelyIll, kappa};
    return {RegimeLabel::SeverelyIll, kappa};
}

// One cross-fitted DML fit. Invariants, all by construction:
//   kappa * |j_hat| = 1, eps_hat = v_hat - theta_hat u_hat elementwise,
//   sum u (v - theta u) = 0 up to rounding, ci symmetric around theta_hat.
struct DmlFit {
    double theta_hat = 0.0;
    double j_hat = 0.0;
    double kappa = 0.0;
    double se = 0.0;
    double alpha = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    Vector u_hat;
    Vector v_hat;
    Vector eps_hat;
    FoldMap fold_map;
    LearnerSpec learner;
};

// Full pipeline: folds, cross-fitted residuals, point estimate, conditioning
// diagnostics, plug-in interval. A degenerate score (constant residualized
// treatment) is a hard error; no quantity downstream of kappa is defined.
inline DmlFit run_dml(const Dataset& ds, const LearnerSpec& spec, int k_folds, double alpha,
                      const SeededStream& stream) {
    const int n = ds.n();
    if (n < 2 * k_folds)
        throw ValidationError("run_dml: need n >= 2 k_folds (n = " + std::to_string(n) + ", k = " +
                              std::to_string(k_folds) + ")");

    DmlFit fit;
    fit.learner = spec;
    fit.alpha = alpha;
    fit.fold_map = make_folds(n, k_folds, stream.fork(0, 0));
    Residuals res = crossfit_residuals(ds, spec, fit.fold_map, stream);
    fit.u_hat = std::move(res.u_hat);
    fit.v_hat = std::move(res.v_hat);

    fit.theta_hat = estimate_theta(fit.u_hat, fit.v_hat);
    const auto [j_hat, kappa] = jacobian_and_kappa(fit.u_hat);
    fit.j_hat = j_hat;
    fit.kappa = kappa;

    fit.eps_hat.resize(fit.u_hat.size());
    for (std::size_t i = 0; i < fit.u_hat.size(); ++i) fit.eps_hat[i] = fit.v_hat[i] - fit.theta_hat * fit.u_hat[i];

    fit.se = se_dml(fit.u_hat, fit.eps_hat, fit.kappa, n);
    const auto [lo, hi] = confidence_interval(fit.theta_hat, fit.se, alpha);
    fit.ci_lo = lo;
    fit.ci_hi = hi;
    return fit;
}

// Error decomposition theta_hat - theta0 = kappa (s_n + b_n) + r_n, where s_n
// is the centered score average at the true nuisances, b_n the shift from
// plugging in the fitted nuisances, and r_n the remainder. The empirical score
// is affine in theta, so r_n vanishes up to rounding on every fit.
struct LinearizationParts {
    double s_n = 0.0;
    double b_n = 0.0;
    double r_n = 0.0;
    double kappa = 0.0;
};

inline LinearizationParts decompose_linearization(const Dataset& ds, const DmlFit& fit) {
    if (!ds.oracle) throw ValidationError("decompose_linearization: dataset has no ground-truth nuisances");
    const Oracle& oracle = *ds.oracle;
    const int n = ds.n();

    LinearizationParts parts;
    parts.kappa = fit.kappa;
    double s = 0.0;
    double score_at_theta0 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        const double u0 = ds.d[iu] - oracle.true_m[iu];
        const double v0 = ds.y[iu] - oracle.true_l[iu];
        s += u0 * (v0 - oracle.theta0 * u0);
        score_at_theta0 += fit.u_hat[iu] * (fit.v_hat[iu] - oracle.theta0 * fit.u_hat[iu]);
    }
    parts.s_n = s / n;
    parts.b_n = score_at_theta0 / n - parts.s_n;
    parts.r_n = (fit.theta_hat - oracle.theta0) - fit.kappa * (parts.s_n + parts.b_n);
    return parts;
}

}  // namespace dmlk
