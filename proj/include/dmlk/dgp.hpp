#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "dmlk/errors.hpp"
#include "dmlk/mat.hpp"
#include "dmlk/rng.hpp"
#include "dmlk/stochastics.hpp"

namespace dmlk {

enum class Design { LowDim, HighDim };

inline const char* design_name(Design d) { return d == Design::LowDim ? "lowdim" : "highdim"; }

// Full generative design for one synthetic partially linear regression:
//   X ~ N(0, Sigma(rho)),  D = X'beta_d + U,  Y = D theta0 + g0(X) + eps,
// with U ~ N(0, sigma_u2), eps ~ N(0, 1) and g0(x) = sum_j gamma_j sin(pi x_j).
struct DgpSpec {
    Design design = Design::LowDim;
    int p = 0;
    double rho = 0.0;
    Vector beta_d;      // treatment coefficients, length p
    Vector gamma;       // outcome nuisance coefficients, length p
    double theta0 = 1.0;
    double r2_target = 0.0;
    double sigma_u2 = 0.0;  // treatment noise variance implied by r2_target
};

// Treatment noise variance that hits the target first-stage R^2:
//   R2 = b'Sb / (b'Sb + s2)  =>  s2 = b'Sb (1 - R2) / R2.
inline double calibrate_sigma_u(const Vector& beta, const CovarianceMatrix& sigma, double r2_target) {
    if (!(r2_target > 0.0 && r2_target < 1.0))
        throw ValidationError("calibrate_sigma_u: r2_target must lie in (0, 1)");
    if (static_cast<int>(beta.size()) != sigma.p())
        throw ValidationError("calibrate_sigma_u: beta length does not match sigma dimension");
    double q = 0.0;
    for (int j = 0; j < sigma.p(); ++j)
        for (int k = 0; k < sigma.p(); ++k) q += beta[j] * beta[k] * sigma(j, k);
    if (!(q > 0.0)) throw ValidationError("calibrate_sigma_u: degenerate design, beta' Sigma beta must be positive");
    return q * (1.0 - r2_target) / r2_target;
}

namespace detail {

// Decaying treatment pattern beta_j = 0.7^(j-1). Both designs share it; the
// high-dimensional design is the same generator with p pushed past n.
inline Vector decay_beta(int p) {
    Vector b(static_cast<std::size_t>(p));
    double w = 1.0;
    for (int j = 0; j < p; ++j, w *= 0.7) b[static_cast<std::size_t>(j)] = w;
    return b;
}

// Outcome nuisance weights (1, 1/2, 1/4, 1/8, 1/16, 0, ...), truncated or
// zero-extended to length p.
inline Vector nuisance_gamma(int p) {
    Vector g(static_cast<std::size_t>(p), 0.0);
    double w = 1.0;
    for (int j = 0; j < p && j < 5; ++j, w *= 0.5) g[static_cast<std::size_t>(j)] = w;
    return g;
}

}  // namespace detail

inline DgpSpec make_spec(Design design, int p, double rho, double r2_target) {
    if (design == Design::LowDim && p != 10)
        throw ValidationError("make_spec: the low-dimensional design fixes p = 10, got p = " + std::to_string(p));
    if (p < 1) throw ValidationError("make_spec: p must be >= 1");
    DgpSpec spec;
    spec.design = design;
    spec.p = p;
    spec.rho = rho;
    spec.beta_d = detail::decay_beta(p);
    spec.gamma = detail::nuisance_gamma(p);
    spec.theta0 = 1.0;
    spec.r2_target = r2_target;
    spec.sigma_u2 = calibrate_sigma_u(spec.beta_d, toeplitz_sigma(p, rho), r2_target);
    return spec;
}

// Per-row synthetic ground truth. eps is stored as y - theta0 d - g0(x)
// recomputed with the same expressions the generator used, so the identity
// holds bit-for-bit.
struct Oracle {
    double theta0 = 0.0;
    Vector beta_d;
    Vector true_m;  // E[D | X] = X beta_d
    Vector true_l;  // E[Y | X] = theta0 X beta_d + g0(X)
    Vector eps;
};

struct Dataset {
    Vector y;
    Vector d;
    Matrix x;
    std::optional<Oracle> oracle;

    int n() const { return x.rows(); }
    int p() const { return x.cols(); }
};

// g0 evaluated on one row, summed in ascending column order. Generation and
// verification must both call this so rounding agrees exactly.
inline double outcome_nuisance(const Vector& gamma, const double* row) {
    constexpr double kPi = 3.141592653589793238462643383279502884;
    double g = 0.0;
    for (std::size_t j = 0; j < gamma.size(); ++j)
        if (gamma[j] != 0.0) g += gamma[j] * std::sin(kPi * row[j]);
    return g;
}

// Draw order is fixed: the covariate matrix first, then treatment noise, then
// outcome noise. Oracle fields are always populated.
inline Dataset gen_sample(const DgpSpec& spec, int n, SeededStream& stream) {
    if (n < 2) throw ValidationError("gen_sample: n must be >= 2");
    Dataset ds;
    ds.x = sample_mvn(n, toeplitz_sigma(spec.p, spec.rho), stream);

    Oracle oracle;
    oracle.theta0 = spec.theta0;
    oracle.beta_d = spec.beta_d;
    oracle.true_m.resize(static_cast<std::size_t>(n));
    oracle.true_l.resize(static_cast<std::size_t>(n));
    oracle.eps.resize(static_cast<std::size_t>(n));
    ds.d.resize(static_cast<std::size_t>(n));
    ds.y.resize(static_cast<std::size_t>(n));

    const double sigma_u = std::sqrt(spec.sigma_u2);
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        oracle.true_m[k] = dot(ds.x.row(i), spec.beta_d.data(), spec.p);
        ds.d[k] = oracle.true_m[k] + sigma_u * stream.normal();
    }
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double g = outcome_nuisance(spec.gamma, ds.x.row(i));
        ds.y[k] = ds.d[k] * spec.theta0 + g + stream.normal();
        oracle.true_l[k] = oracle.true_m[k] * spec.theta0 + g;
        oracle.eps[k] = ds.y[k] - ds.d[k] * spec.theta0 - g;
    }
    ds.oracle = std::move(oracle);
    return ds;
}

// Realized first-stage R^2, Var(X beta_d) / Var(D) with 1/(n-1) divisors.
// Needs the stored ground truth, so it is a synthetic-data diagnostic only.
inline double realized_r2(const Dataset& ds) {
    if (!ds.oracle) throw ValidationError("realized_r2: dataset has no ground-truth fields, unsupported for real data");
    const double num = sample_variance(ds.oracle->true_m);
    const double den = sample_variance(ds.d);
    if (den == 0.0) throw NumericError("realized_r2: treatment has zero sample variance");
    return num / den;
}

}  // namespace dmlk
