#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kdsm/base_density.hpp"

#include <cmath>
#include <random>

using namespace kdsm;

namespace {

Matrix gaussian_data(int n, int d, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sd);
    Matrix X(n, d);
    for (int a = 0; a < n; ++a)
        for (int i = 0; i < d; ++i) X(a, i) = g(rng);
    return X;
}

Matrix two_clusters(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.4);
    Matrix X(n, 2);
    for (int a = 0; a < n; ++a) {
        double cx = (a % 2) ? 3.0 : -3.0;
        X(a, 0) = cx + g(rng);
        X(a, 1) = g(rng);
    }
    return X;
}

void check_derivs_fd(const BaseDensity& q0, const Vector& x, double tol_g, double tol_h) {
    LogPdfDerivs der = q0_logpdf_grad_hess(q0, x);
    const int d = static_cast<int>(x.size());
    const double h1 = 1e-5, h2 = 1e-4;
    for (int i = 0; i < d; ++i) {
        Vector xp = x, xm = x;
        xp[i] += h1;
        xm[i] -= h1;
        double fd = (q0_logpdf(q0, xp) - q0_logpdf(q0, xm)) / (2.0 * h1);
        CHECK(std::abs(fd - der.grad[i]) <=
              tol_g * std::max(1.0, std::abs(der.grad[i])));
        for (int j = 0; j < d; ++j) {
            Vector xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += h2; xpp[j] += h2;
            xpm[i] += h2; xpm[j] -= h2;
            xmp[i] -= h2; xmp[j] += h2;
            xmm[i] -= h2; xmm[j] -= h2;
            double fdh = (q0_logpdf(q0, xpp) - q0_logpdf(q0, xpm) - q0_logpdf(q0, xmp) +
                          q0_logpdf(q0, xmm)) /
                         (4.0 * h2 * h2);
            CHECK(std::abs(fdh - der.hess(i, j)) <=
                  tol_h * std::max(1.0, std::abs(der.hess(i, j))));
        }
    }
}

}  // namespace

TEST_CASE("uniform box fit adds the five percent margin") {
    Matrix X(2, 2);
    X << 0.0, 0.0, 1.0, 1.0;
    BaseDensity q0 = fit_q0(BaseDensityKind::UniformBox, X);
    CHECK(q0.lower[0] == doctest::Approx(-0.05).epsilon(1e-12));
    CHECK(q0.lower[1] == doctest::Approx(-0.05).epsilon(1e-12));
    CHECK(q0.upper[0] == doctest::Approx(1.05).epsilon(1e-12));
    CHECK(q0.upper[1] == doctest::Approx(1.05).epsilon(1e-12));
}

TEST_CASE("uniform log-pdf and derivatives inside the box") {
    Matrix X(2, 2);
    X << -1.0, -2.0, 1.0, 2.0;
    BaseDensity q0 = fit_q0(BaseDensityKind::UniformBox, X);
    Vector x = Vector::Zero(2);
    LogPdfDerivs der = q0_logpdf_grad_hess(q0, x);
    double vol = (q0.upper - q0.lower).prod();
    CHECK(der.logpdf == doctest::Approx(-std::log(vol)).epsilon(1e-12));
    CHECK(der.grad.cwiseAbs().maxCoeff() == 0.0);
    CHECK(der.hess.cwiseAbs().maxCoeff() == 0.0);
    Vector outside(2);
    outside << 100.0, 0.0;
    CHECK(q0_logpdf(q0, outside) == -std::numeric_limits<double>::infinity());
    CHECK(!q0.in_support(outside));
    CHECK(q0.in_support(x));
}

TEST_CASE("gaussian fit recovers mean and covariance at large n") {
    Matrix X = gaussian_data(10000, 2, 5);
    BaseDensity q0 = fit_q0(BaseDensityKind::Gaussian, X);
    CHECK(q0.mean.norm() <= 0.05);
    CHECK((q0.cov - Matrix::Identity(2, 2)).norm() <= 0.1);
}

TEST_CASE("gaussian score has the closed form") {
    Matrix X = gaussian_data(5000, 2, 7);
    BaseDensity q0 = fit_q0(BaseDensityKind::Gaussian, X);
    q0.mean.setZero();
    q0.cov = Matrix::Identity(2, 2);
    Vector x(2);
    x << 1.0, 0.0;
    LogPdfDerivs der = q0_logpdf_grad_hess(q0, x);
    CHECK(der.grad[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(der.grad[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("log-pdf derivatives match finite differences for every kind") {
    Matrix X = gaussian_data(600, 2, 9);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 0.8);
    BaseDensity uni = fit_q0(BaseDensityKind::UniformBox, X);
    BaseDensity gau = fit_q0(BaseDensityKind::Gaussian, X);
    BaseDensity gmm = fit_q0(BaseDensityKind::Gmm, two_clusters(600, 13), 2, 1);
    for (int t = 0; t < 20; ++t) {
        Vector x(2);
        x << g(rng), g(rng);
        check_derivs_fd(uni, x, 1e-5, 1e-4);
        check_derivs_fd(gau, x, 1e-5, 1e-4);
        Vector xg = x;
        xg[0] += (t % 2) ? 3.0 : -3.0;  // near the mixture lobes
        check_derivs_fd(gmm, xg, 1e-5, 1e-4);
    }
}

TEST_CASE("em recovers well-separated cluster centers") {
    Matrix X = two_clusters(1000, 17);
    BaseDensity q0 = fit_q0(BaseDensityKind::Gmm, X, 2, 3);
    REQUIRE(q0.means.size() == 2);
    double lo = std::min(q0.means[0][0], q0.means[1][0]);
    double hi = std::max(q0.means[0][0], q0.means[1][0]);
    CHECK(std::abs(lo + 3.0) <= 0.1);
    CHECK(std::abs(hi - 3.0) <= 0.1);
    CHECK(std::abs(q0.weights.sum() - 1.0) <= 1e-12);
}

TEST_CASE("em log-likelihood never decreases across iterations") {
    Matrix X = two_clusters(400, 19);
    std::vector<double> trace;
    fit_gmm_em(X, 3, 7, &trace);
    REQUIRE(trace.size() >= 2);
    for (std::size_t i = 1; i < trace.size(); ++i)
        CHECK(trace[i] >= trace[i - 1] - 1e-9 * std::abs(trace[i - 1]));
}

TEST_CASE("degenerate zero-variance data is jittered rather than fatal") {
    Matrix X = Matrix::Zero(50, 2);
    X.col(0) = Vector::LinSpaced(50, -1.0, 1.0);
    // second column identically zero
    BaseDensity q0 = fit_q0(BaseDensityKind::Gaussian, X);
    Eigen::LLT<Matrix> llt(q0.cov);
    CHECK(llt.info() == Eigen::Success);
    Vector x = Vector::Zero(2);
    CHECK(std::isfinite(q0_logpdf(q0, x)));
}

TEST_CASE("gaussian q0 integrates to one by Monte Carlo") {
    Matrix X = gaussian_data(2000, 2, 23);
    BaseDensity q0 = fit_q0(BaseDensityKind::Gaussian, X);
    // uniform proposal over a wide box enclosing essentially all mass
    const double half = 8.0;
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-half, half);
    const int n_draws = 1000000;
    double acc = 0.0;
    for (int t = 0; t < n_draws; ++t) {
        Vector x(2);
        x << u(rng), u(rng);
        acc += std::exp(q0_logpdf(q0, x));
    }
    double integral = acc / n_draws * (2.0 * half) * (2.0 * half);
    CHECK(integral == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("q0 sampling matches the fitted moments") {
    Matrix X = gaussian_data(4000, 2, 31);
    BaseDensity q0 = fit_q0(BaseDensityKind::Gaussian, X);
    Matrix S = q0_sample(q0, 20000, 37);
    Vector mean = S.colwise().mean().transpose();
    CHECK((mean - q0.mean).norm() <= 0.05);
    Matrix C = (S.rowwise() - mean.transpose()).transpose() *
               (S.rowwise() - mean.transpose()) / (S.rows() - 1.0);
    CHECK((C - q0.cov).norm() <= 0.05);
}

TEST_CASE("tiny samples are rejected") {
    Matrix X = Matrix::Zero(1, 2);
    CHECK_THROWS_AS(fit_q0(BaseDensityKind::Gaussian, X), InvalidSpecError);
}
