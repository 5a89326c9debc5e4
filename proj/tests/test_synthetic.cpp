#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kdsm/metrics.hpp"
#include "kdsm/synthetic.hpp"

#include <cmath>

using namespace kdsm;

namespace {

// finite-difference check of the analytic score at a point
void check_score_fd(const Synthetic2D& dist, const Vector& x, double tol) {
    Vector s = dist.score(x);
    const double h = 1e-5;
    for (int i = 0; i < 2; ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        double fd = (dist.logpdf(xp) - dist.logpdf(xm)) / (2.0 * h);
        CHECK(std::abs(fd - s[i]) <= tol * std::max(1.0, std::abs(s[i])));
    }
}

// trapezoid quadrature of exp(logpdf) over [lo1,hi1] x [lo2,hi2]
double mass_on_box(const Synthetic2D& dist, double lo1, double hi1, double lo2, double hi2,
                   int n = 600) {
    double acc = 0.0;
    const double dx = (hi1 - lo1) / (n - 1.0), dy = (hi2 - lo2) / (n - 1.0);
    for (int i = 0; i < n; ++i) {
        double wx = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        for (int j = 0; j < n; ++j) {
            double wy = (j == 0 || j == n - 1) ? 0.5 : 1.0;
            Vector x(2);
            x << lo1 + i * dx, lo2 + j * dy;
            double lp = dist.logpdf(x);
            if (std::isfinite(lp)) acc += wx * wy * std::exp(lp);
        }
    }
    return acc * dx * dy;
}

}  // namespace

TEST_CASE("every family is constructible and listed") {
    const auto& names = synthetic_family_names();
    CHECK(names.size() == 8);
    for (const auto& name : names) {
        Synthetic2D dist = make_distribution(name);
        CHECK(dist.name == name);
        Matrix S = synth_sample(dist, 16, 5);
        CHECK(S.rows() == 16);
        CHECK(S.cols() == 2);
        CHECK(S.allFinite());
    }
    CHECK_THROWS_AS(make_distribution("nope"), InvalidSpecError);
}

TEST_CASE("uniform family is flat with zero score inside the box") {
    Synthetic2D dist = make_distribution("uniform");
    Vector x(2);
    x << 0.5, -1.0;
    CHECK(dist.logpdf(x) == doctest::Approx(-std::log(36.0)).epsilon(1e-12));
    CHECK(dist.score(x).cwiseAbs().maxCoeff() == 0.0);
    Matrix S = synth_sample(dist, 5000, 7);
    CHECK(S.cwiseAbs().maxCoeff() <= 3.0);
}

TEST_CASE("analytic scores match finite differences of the log-density") {
    std::mt19937_64 rng(11);
    for (const auto& name : synthetic_family_names()) {
        Synthetic2D dist = make_distribution(name);
        Matrix S = synth_sample(dist, 50, 13);
        int checked = 0;
        for (int a = 0; a < S.rows() && checked < 50; ++a) {
            Vector x = S.row(a).transpose();
            if (!dist.support(x)) continue;
            // stay clear of support boundaries for the bounded families
            if (dist.bounded) {
                Vector shrunk = 0.99 * x;
                if (!dist.support(shrunk)) continue;
                x = shrunk;
            }
            check_score_fd(dist, x, 1e-5);
            ++checked;
        }
        CHECK(checked >= 20);
    }
}

TEST_CASE("log-densities are normalized on a generous box") {
    struct Box {
        const char* name;
        double lo1, hi1, lo2, hi2;
    };
    const Box boxes[] = {
        {"gauss_mixture", -8.0, 8.0, -6.0, 6.0},  {"uniform", -3.5, 3.5, -3.5, 3.5},
        {"uniform_mixture", -6.0, 6.0, -6.0, 6.0}, {"cosine", -13.0, 13.0, -4.0, 4.0},
        {"funnel", -9.0, 9.0, -60.0, 60.0},        {"banana", -13.0, 13.0, -35.0, 10.0},
        {"ring", -5.0, 5.0, -5.0, 5.0},            {"ring_mixture", -5.0, 5.0, -5.0, 5.0},
    };
    for (const Box& box : boxes) {
        Synthetic2D dist = make_distribution(box.name);
        int n = std::string(box.name) == "funnel" ? 1500 : 800;
        double mass = mass_on_box(dist, box.lo1, box.hi1, box.lo2, box.hi2, n);
        INFO(box.name);
        CHECK(mass == doctest::Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("mixture of gaussians is balanced around the origin") {
    Synthetic2D dist = make_distribution("gauss_mixture");
    Matrix S = synth_sample(dist, 100000, 17);
    Vector mean = S.colwise().mean().transpose();
    CHECK(mean.norm() <= 0.03);
}

TEST_CASE("ring samples stay inside the five-sigma radial band") {
    Synthetic2D dist = make_distribution("ring");
    Matrix S = synth_sample(dist, 100000, 19);
    for (int a = 0; a < S.rows(); ++a) {
        double r = S.row(a).norm();
        CHECK(r >= 3.0 - 5.0 * 0.25);
        CHECK(r <= 3.0 + 5.0 * 0.25);
    }
}

TEST_CASE("own samples stay in the support and have finite log-density") {
    for (const auto& name : synthetic_family_names()) {
        Synthetic2D dist = make_distribution(name);
        Matrix S = synth_sample(dist, 2000, 23);
        for (int a = 0; a < S.rows(); ++a) {
            Vector x = S.row(a).transpose();
            CHECK(dist.support(x));
            CHECK(std::isfinite(dist.logpdf(x)));
        }
    }
}

TEST_CASE("sampling is deterministic per seed") {
    Synthetic2D dist = make_distribution("banana");
    Matrix a = synth_sample(dist, 100, 29);
    Matrix b = synth_sample(dist, 100, 29);
    Matrix c = synth_sample(dist, 100, 31);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("parameter overrides reshape the family") {
    Synthetic2D dist = make_distribution("ring", {{"radius", 1.5}, {"noise", 0.1}});
    Matrix S = synth_sample(dist, 20000, 37);
    double mean_r = 0.0;
    for (int a = 0; a < S.rows(); ++a) mean_r += S.row(a).norm();
    mean_r /= S.rows();
    CHECK(mean_r == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("samplers and scores agree under the stein test") {
    // each full-support family's own draws should not reject its own score;
    // the bounded uniform families are excluded because the Stein identity
    // behind the test requires vanishing boundary terms
    for (const auto& name : synthetic_family_names()) {
        Synthetic2D dist = make_distribution(name);
        if (dist.bounded) continue;
        int pass = 0;
        for (int s = 0; s < 10; ++s) {
            Matrix S = synth_sample(dist, 500, 100 + s);
            FssdResult r = fssd_test([&](const Vector& x) { return dist.score(x); }, S, 5,
                                     400, 500 + s);
            if (r.p_value > 0.05) ++pass;
        }
        INFO(name);
        CHECK(pass >= 8);
    }
}
