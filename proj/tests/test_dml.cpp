#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "dmlk/dml.hpp"

using namespace dmlk;

namespace {

Dataset small_sample(double r2, int n, std::uint64_t seed) {
    const DgpSpec spec = make_spec(Design::LowDim, 10, 0.5, r2);
    SeededStream stream(seed);
    return gen_sample(spec, n, stream);
}

}  // namespace

TEST_CASE("fold sizes are balanced and deterministic") {
    const FoldMap f10 = make_folds(10, 5, SeededStream(1));
    auto sizes = f10.fold_sizes();
    for (int s : sizes) REQUIRE(s == 2);

    const FoldMap f11 = make_folds(11, 5, SeededStream(2));
    sizes = f11.fold_sizes();
    std::sort(sizes.begin(), sizes.end());
    REQUIRE(sizes == std::vector<int>{2, 2, 2, 2, 3});

    REQUIRE_THROWS_AS(make_folds(4, 5, SeededStream(3)), ValidationError);
    REQUIRE_THROWS_AS(make_folds(10, 1, SeededStream(3)), ValidationError);

    const FoldMap a = make_folds(100, 5, SeededStream(4));
    const FoldMap b = make_folds(100, 5, SeededStream(4));
    REQUIRE(a.assignment == b.assignment);
}

TEST_CASE("cross-fitting with injected perfect nuisances recovers the truth") {
    const Dataset ds = small_sample(0.75, 100, 10);
    const FoldMap folds = make_folds(100, 5, SeededStream(11));

    const Residuals res = crossfit_residuals_generic(ds, folds, [&](int, int role, const Matrix&, const Vector&) {
        // fixed predictors evaluating the stored ground truth by row lookup
        return [&ds, role](const double* row) {
            const int i = static_cast<int>(row - ds.x.row(0)) / ds.p();
            const auto iu = static_cast<std::size_t>(i);
            return role == 0 ? ds.oracle->true_m[iu] : ds.oracle->true_l[iu];
        };
    });
    for (int i = 0; i < ds.n(); ++i) {
        const auto iu = static_cast<std::size_t>(i);
        REQUIRE(res.u_hat[iu] == ds.d[iu] - ds.oracle->true_m[iu]);
        REQUIRE(res.v_hat[iu] == ds.y[iu] - ds.oracle->true_l[iu]);
    }
}

TEST_CASE("constant-zero predictors leave the raw observations") {
    const Dataset ds = small_sample(0.9, 60, 12);
    const FoldMap folds = make_folds(60, 5, SeededStream(13));
    const Residuals res = crossfit_residuals_generic(
        ds, folds, [](int, int, const Matrix&, const Vector&) { return [](const double*) { return 0.0; }; });
    REQUIRE(res.u_hat == ds.d);
    REQUIRE(res.v_hat == ds.y);
}

TEST_CASE("out-of-fold training differs from leaky full-sample training") {
    const Dataset ds = small_sample(0.75, 120, 14);
    const FoldMap folds = make_folds(120, 5, SeededStream(15));
    LearnerSpec lin;
    lin.kind = LearnerKind::LIN;

    const Residuals proper = crossfit_residuals(ds, lin, folds, SeededStream(16));

    // leaky variant: every fold model is trained on the full sample
    const LinearModel m_all = fit_ols(ds.x, ds.d);
    const LinearModel g_all = fit_ols(ds.x, ds.y);
    const Residuals leaky = crossfit_residuals_generic(ds, folds, [&](int, int role, const Matrix&, const Vector&) {
        const LinearModel& m = (role == 0) ? m_all : g_all;
        return [&m](const double* row) { return m.predict_row(row); };
    });
    double max_diff = 0.0;
    for (std::size_t i = 0; i < proper.u_hat.size(); ++i)
        max_diff = std::max(max_diff, std::abs(proper.u_hat[i] - leaky.u_hat[i]));
    REQUIRE(max_diff > 0.0);
}

TEST_CASE("partialling-out point estimate") {
    REQUIRE(estimate_theta({1.0, -2.0, 0.5}, {2.0, -4.0, 1.0}) == Catch::Approx(2.0).margin(1e-15));
    REQUIRE(estimate_theta({1.0, 1.0}, {1.0, 3.0}) == Catch::Approx(2.0).margin(1e-15));
    REQUIRE(estimate_theta({1.0, 2.0, 3.0}, {2.0, 3.0, 10.0}) == Catch::Approx(38.0 / 14.0).margin(1e-15));
    REQUIRE_THROWS_AS(estimate_theta({0.0, 0.0}, {1.0, 2.0}), NumericError);
}

TEST_CASE("jacobian and condition number") {
    auto [j1, k1] = jacobian_and_kappa({1.0, -1.0, 1.0, -1.0});
    REQUIRE(j1 == -1.0);
    REQUIRE(k1 == 1.0);

    auto [j2, k2] = jacobian_and_kappa({2.0, 2.0});
    REQUIRE(j2 == -4.0);
    REQUIRE(k2 == 0.25);

    // scaling u by c scales kappa by 1/c^2
    const Vector u = {0.3, -1.2, 0.8, 2.0};
    Vector u3 = u;
    for (auto& v : u3) v *= 3.0;
    auto [ja, ka] = jacobian_and_kappa(u);
    auto [jb, kb] = jacobian_and_kappa(u3);
    REQUIRE(kb == Catch::Approx(ka / 9.0).epsilon(1e-14));
    REQUIRE(ka * std::abs(ja) == Catch::Approx(1.0).margin(1e-14));

    REQUIRE_THROWS_AS(jacobian_and_kappa(Vector(4, 0.0)), NumericError);
}

TEST_CASE("plug-in standard error") {
    REQUIRE(se_dml(Vector(4, 1.0), Vector(4, 1.0), 1.0, 4) == Catch::Approx(0.5).margin(1e-15));
    REQUIRE(se_dml({1.0, 2.0}, {0.0, 0.0}, 0.4, 2) == 0.0);
    REQUIRE(se_dml({1.0, 2.0}, {1.0, 1.0}, 0.4, 2) == Catch::Approx(0.2 * std::sqrt(5.0)).epsilon(1e-14));
}

TEST_CASE("confidence interval uses the normal quantile") {
    const auto degenerate = confidence_interval(1.0, 0.0, 0.5);
    REQUIRE(degenerate.first == 1.0);
    REQUIRE(degenerate.second == 1.0);

    const auto ci = confidence_interval(0.0, 1.0, 0.05);
    REQUIRE(ci.first == Catch::Approx(-1.959964).margin(1e-6));
    REQUIRE(ci.second == Catch::Approx(1.959964).margin(1e-6));

    // the 1.96 convention at two decimal places
    const auto ci2 = confidence_interval(2.0, 0.5, 0.05);
    REQUIRE(ci2.first == Catch::Approx(1.02).margin(1e-3));
    REQUIRE(ci2.second == Catch::Approx(2.98).margin(1e-3));

    REQUIRE_THROWS_AS(confidence_interval(0.0, -1.0, 0.05), ValidationError);
    REQUIRE_THROWS_AS(confidence_interval(0.0, 1.0, 1.5), ValidationError);
}

TEST_CASE("normal quantile agrees with tabulated values") {
    REQUIRE(normal_quantile(0.975) == Catch::Approx(1.959963984540054).margin(1e-8));
    REQUIRE(normal_quantile(0.5) == 0.0);
    REQUIRE(normal_quantile(0.025) == Catch::Approx(-1.959963984540054).margin(1e-8));
    REQUIRE(normal_quantile(0.995) == Catch::Approx(2.5758293035489004).margin(1e-8));
    REQUIRE_THROWS_AS(normal_quantile(0.0), ValidationError);
}

TEST_CASE("regime thresholds follow the published bands") {
    REQUIRE(classify_regime(0.710).label == RegimeLabel::WellConditioned);
    REQUIRE(classify_regime(1.6087).label == RegimeLabel::ModeratelyIll);
    REQUIRE(classify_regime(7.600).label == RegimeLabel::SeverelyIll);
    // closed lower bounds: boundary values take the more severe class
    REQUIRE(classify_regime(1.0).label == RegimeLabel::ModeratelyIll);
    REQUIRE(classify_regime(2.0).label == RegimeLabel::SeverelyIll);
    REQUIRE_THROWS_AS(classify_regime(0.0), ValidationError);
    REQUIRE_THROWS_AS(classify_regime(-1.0), ValidationError);
}

TEST_CASE("noiseless linear truth is recovered exactly by partialling out") {
    // Y = theta0 D + x'gamma with no outcome noise and a linear nuisance:
    // the outcome residualization is then theta0 times the treatment one
    const int n = 200, p = 5;
    const double theta0 = 2.0;
    SeededStream stream(60);
    const Matrix x = sample_mvn(n, toeplitz_sigma(p, 0.4), stream);
    Dataset ds;
    ds.x = x;
    ds.d.resize(n);
    ds.y.resize(n);
    const Vector beta = {1.0, 0.5, 0.0, -0.3, 0.2};
    const Vector glin = {0.5, -1.0, 0.25, 0.0, 1.0};
    for (int i = 0; i < n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        ds.d[iu] = dot(x.row(i), beta.data(), p) + stream.normal();
        ds.y[iu] = theta0 * ds.d[iu] + dot(x.row(i), glin.data(), p);
    }
    LearnerSpec lin;
    lin.kind = LearnerKind::LIN;
    const DmlFit fit = run_dml(ds, lin, 5, 0.05, SeededStream(61));
    REQUIRE(fit.theta_hat == Catch::Approx(theta0).margin(1e-6));
}

TEST_CASE("constant treatment is a degenerate score") {
    Dataset ds = small_sample(0.75, 60, 62);
    ds.d.assign(ds.d.size(), 5.0);
    LearnerSpec lin;
    lin.kind = LearnerKind::LIN;
    REQUIRE_THROWS_AS(run_dml(ds, lin, 5, 0.05, SeededStream(63)), NumericError);
}

TEST_CASE("fit invariants hold on a generated sample") {
    const Dataset ds = small_sample(0.9, 150, 64);
    for (LearnerKind kind : {LearnerKind::LIN, LearnerKind::LAS, LearnerKind::RF}) {
        LearnerSpec spec;
        spec.kind = kind;
        spec.rf.n_trees = 50;
        const DmlFit fit = run_dml(ds, spec, 5, 0.05, SeededStream(65));

        REQUIRE(fit.kappa * std::abs(fit.j_hat) == Catch::Approx(1.0).margin(1e-14));
        double score = 0.0, suu = 0.0;
        for (std::size_t i = 0; i < fit.u_hat.size(); ++i) {
            score += fit.u_hat[i] * (fit.v_hat[i] - fit.theta_hat * fit.u_hat[i]);
            suu += fit.u_hat[i] * fit.u_hat[i];
        }
        REQUIRE(std::abs(score) <= 1e-8 * suu);
        for (std::size_t i = 0; i < fit.u_hat.size(); ++i)
            REQUIRE(fit.eps_hat[i] == fit.v_hat[i] - fit.theta_hat * fit.u_hat[i]);
        REQUIRE(fit.ci_lo <= fit.theta_hat);
        REQUIRE(fit.theta_hat <= fit.ci_hi);
    }
}

TEST_CASE("equivariance under scaling with least-squares nuisances") {
    const Dataset ds = small_sample(0.75, 200, 66);
    LearnerSpec lin;
    lin.kind = LearnerKind::LIN;
    const DmlFit base = run_dml(ds, lin, 5, 0.05, SeededStream(67));

    const double c = 3.0;
    Dataset scaled_d = ds;
    for (auto& v : scaled_d.d) v *= c;
    const DmlFit fit_d = run_dml(scaled_d, lin, 5, 0.05, SeededStream(67));
    REQUIRE(fit_d.theta_hat == Catch::Approx(base.theta_hat / c).epsilon(1e-9));
    REQUIRE(fit_d.kappa == Catch::Approx(base.kappa / (c * c)).epsilon(1e-9));

    Dataset scaled_y = ds;
    for (auto& v : scaled_y.y) v *= c;
    const DmlFit fit_y = run_dml(scaled_y, lin, 5, 0.05, SeededStream(67));
    REQUIRE(fit_y.theta_hat == Catch::Approx(c * base.theta_hat).epsilon(1e-9));
    REQUIRE(fit_y.se == Catch::Approx(c * base.se).epsilon(1e-9));

    // the coverage indicator of the true effect is scale-invariant
    const double theta0 = ds.oracle->theta0;
    const bool covered_base = base.ci_lo <= theta0 && theta0 <= base.ci_hi;
    const bool covered_d = fit_d.ci_lo <= theta0 / c && theta0 / c <= fit_d.ci_hi;
    const bool covered_y = fit_y.ci_lo <= c * theta0 && c * theta0 <= fit_y.ci_hi;
    REQUIRE(covered_base == covered_d);
    REQUIRE(covered_base == covered_y);
}

TEST_CASE("linearization splits the estimation error exactly") {
    const Dataset ds = small_sample(0.9, 300, 68);
    LearnerSpec lin;
    lin.kind = LearnerKind::LIN;
    const DmlFit fit = run_dml(ds, lin, 5, 0.05, SeededStream(69));
    const LinearizationParts parts = decompose_linearization(ds, fit);

    const double theta0 = ds.oracle->theta0;
    // identity reconstruction
    REQUIRE(fit.theta_hat - theta0 ==
            Catch::Approx(parts.kappa * (parts.s_n + parts.b_n) + parts.r_n).margin(1e-12));
    // the score is affine in theta, so the Taylor remainder vanishes
    REQUIRE(std::abs(parts.r_n) <= 1e-10 * (1.0 + std::abs(fit.theta_hat - theta0)));

    Dataset no_oracle = ds;
    no_oracle.oracle.reset();
    REQUIRE_THROWS_AS(decompose_linearization(no_oracle, fit), ValidationError);
}

TEST_CASE("plugging the true nuisances removes the shift term") {
    const Dataset ds = small_sample(0.75, 150, 70);
    const FoldMap folds = make_folds(ds.n(), 5, SeededStream(71));
    const Residuals res = crossfit_residuals_generic(ds, folds, [&](int, int role, const Matrix&, const Vector&) {
        return [&ds, role](const double* row) {
            const int i = static_cast<int>(row - ds.x.row(0)) / ds.p();
            const auto iu = static_cast<std::size_t>(i);
            return role == 0 ? ds.oracle->true_m[iu] : ds.oracle->true_l[iu];
        };
    });

    DmlFit fit;
    fit.u_hat = res.u_hat;
    fit.v_hat = res.v_hat;
    fit.theta_hat = estimate_theta(fit.u_hat, fit.v_hat);
    const auto [j, k] = jacobian_and_kappa(fit.u_hat);
    fit.j_hat = j;
    fit.kappa = k;

    const LinearizationParts parts = decompose_linearization(ds, fit);
    REQUIRE(parts.b_n == 0.0);  // exactly, same sums on both sides
    REQUIRE(fit.theta_hat - ds.oracle->theta0 == Catch::Approx(parts.kappa * parts.s_n).margin(1e-12));
}

TEST_CASE("nuisance shift shrinks faster than the sampling term") {
    // medians over repeated fits at two sample sizes
    LearnerSpec lin;
    lin.kind = LearnerKind::LIN;
    auto median_terms = [&](int n, std::uint64_t seed0) {
        Vector s_terms, b_terms;
        for (int r = 0; r < 50; ++r) {
            const DgpSpec spec = make_spec(Design::LowDim, 10, 0.5, 0.75);
            SeededStream gen(derive_seed(seed0, 1, static_cast<std::uint64_t>(r)));
            const Dataset ds = gen_sample(spec, n, gen);
            const DmlFit fit = run_dml(ds, lin, 5, 0.05, SeededStream(derive_seed(seed0, 2, static_cast<std::uint64_t>(r))));
            const LinearizationParts parts = decompose_linearization(ds, fit);
            s_terms.push_back(std::abs(fit.kappa * parts.s_n));
            b_terms.push_back(std::abs(fit.kappa * parts.b_n));
        }
        std::sort(s_terms.begin(), s_terms.end());
        std::sort(b_terms.begin(), b_terms.end());
        return std::pair{s_terms[25], b_terms[25]};
    };
    const auto [s500, b500] = median_terms(500, 72);
    const auto [s2000, b2000] = median_terms(2000, 73);
    // the bias-type term decays faster than the sampling term
    REQUIRE(b500 / s500 > b2000 / s2000);
}
