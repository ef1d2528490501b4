#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dmlk/stochastics.hpp"

using namespace dmlk;

namespace {

double max_abs_residual(const Matrix& l, const CovarianceMatrix& sigma) {
    double worst = 0.0;
    for (int i = 0; i < sigma.p(); ++i)
        for (int j = 0; j < sigma.p(); ++j) {
            double s = 0.0;
            for (int k = 0; k < sigma.p(); ++k) s += l(i, k) * l(j, k);
            worst = std::max(worst, std::abs(s - sigma(i, j)));
        }
    return worst;
}

}  // namespace

TEST_CASE("toeplitz entries follow rho^|j-k|") {
    const auto id = toeplitz_sigma(3, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) REQUIRE(id(i, j) == (i == j ? 1.0 : 0.0));

    const auto s2 = toeplitz_sigma(2, 0.5);
    REQUIRE(s2(0, 0) == 1.0);
    REQUIRE(s2(0, 1) == 0.5);
    REQUIRE(s2(1, 0) == 0.5);

    const auto s3 = toeplitz_sigma(3, 0.5);
    REQUIRE(s3(0, 2) == Catch::Approx(0.25).margin(1e-15));

    REQUIRE_THROWS_AS(toeplitz_sigma(0, 0.5), ValidationError);
    REQUIRE_THROWS_AS(toeplitz_sigma(3, 1.0), ValidationError);
    REQUIRE_THROWS_AS(toeplitz_sigma(3, -0.1), ValidationError);
}

TEST_CASE("covariance matrix rejects asymmetry") {
    Matrix m(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    m(0, 1) = 0.5;
    m(1, 0) = 0.5 + 1e-9;
    REQUIRE_THROWS_AS(CovarianceMatrix(m), ValidationError);
}

TEST_CASE("cholesky factor on simple matrices") {
    const auto id = CovarianceMatrix(Matrix::identity(4));
    const Matrix l_id = chol_lower(id);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) REQUIRE(l_id(i, j) == (i == j ? 1.0 : 0.0));

    Matrix diag(2, 2);
    diag(0, 0) = 4.0;
    diag(1, 1) = 9.0;
    const Matrix l_diag = chol_lower(CovarianceMatrix(diag));
    REQUIRE(l_diag(0, 0) == 2.0);
    REQUIRE(l_diag(1, 1) == 3.0);
    REQUIRE(l_diag(1, 0) == 0.0);

    const auto s = toeplitz_sigma(2, 0.5);
    const Matrix l = chol_lower(s);
    REQUIRE(l(0, 0) == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(l(1, 0) == Catch::Approx(0.5).margin(1e-15));
    REQUIRE(l(1, 1) == Catch::Approx(std::sqrt(0.75)).margin(1e-15));
    REQUIRE(max_abs_residual(l, s) <= 1e-10);
}

TEST_CASE("cholesky failure names the pivot") {
    Matrix m(2, 2);
    m(0, 0) = 1.0;
    m(0, 1) = 2.0;
    m(1, 0) = 2.0;
    m(1, 1) = 1.0;  // symmetric, indefinite
    try {
        chol_lower(CovarianceMatrix(m));
        FAIL("expected a NumericError");
    } catch (const NumericError& e) {
        REQUIRE(std::string(e.what()).find("pivot 1") != std::string::npos);
    }
}

TEST_CASE("cholesky round-trip over the design range") {
    for (int p : {1, 2, 10, 100, 500})
        for (double rho : {0.0, 0.5, 0.9, 0.97}) {
            const auto sigma = toeplitz_sigma(p, rho);
            REQUIRE(max_abs_residual(chol_lower(sigma), sigma) <= 1e-10);
        }
}

TEST_CASE("mvn sampling matches its covariance") {
    const int n = 100'000;
    const auto sigma = toeplitz_sigma(3, 0.5);
    SeededStream stream(2024);
    const Matrix x = sample_mvn(n, sigma, stream);

    // sample covariance, known zero mean subtracted empirically
    Vector means(3, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 3; ++j) means[static_cast<std::size_t>(j)] += x(i, j);
    for (auto& m : means) m /= n;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double c = 0.0;
            for (int i = 0; i < n; ++i)
                c += (x(i, a) - means[static_cast<std::size_t>(a)]) * (x(i, b) - means[static_cast<std::size_t>(b)]);
            c /= n - 1;
            REQUIRE(std::abs(c - sigma(a, b)) < 0.02);
        }

    // marginal moments at 4-sigma Monte Carlo tolerance
    for (int j = 0; j < 3; ++j) {
        REQUIRE(std::abs(means[static_cast<std::size_t>(j)]) < 4.0 / std::sqrt(static_cast<double>(n)));
        double v = 0.0;
        for (int i = 0; i < n; ++i) v += x(i, j) * x(i, j);
        v /= n;
        REQUIRE(std::abs(v - 1.0) < 4.0 * std::sqrt(2.0 / n));
    }
}

TEST_CASE("mvn single row is reproducible") {
    const auto sigma = toeplitz_sigma(4, 0.3);
    SeededStream a(99), b(99);
    const Matrix xa = sample_mvn(1, sigma, a);
    const Matrix xb = sample_mvn(1, sigma, b);
    for (int j = 0; j < 4; ++j) REQUIRE(xa(0, j) == xb(0, j));
}

TEST_CASE("independent columns stay uncorrelated") {
    const int n = 100'000;
    SeededStream stream(7);
    const Matrix x = sample_mvn(n, CovarianceMatrix(Matrix::identity(2)), stream);
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        sx += x(i, 0);
        sy += x(i, 1);
        sxy += x(i, 0) * x(i, 1);
        sxx += x(i, 0) * x(i, 0);
        syy += x(i, 1) * x(i, 1);
    }
    const double corr = (sxy / n - sx / n * sy / n) /
                        std::sqrt((sxx / n - sx / n * sx / n) * (syy / n - sy / n * sy / n));
    REQUIRE(std::abs(corr) < 0.01);
}

TEST_CASE("std normal vector is deterministic and sized") {
    SeededStream a(11), b(11);
    const Vector va = sample_std_normal(1000, a);
    const Vector vb = sample_std_normal(1000, b);
    REQUIRE(va.size() == 1000);
    REQUIRE(va == vb);
    REQUIRE_THROWS_AS(sample_std_normal(0, a), ValidationError);
}
