#include "kdsm/synthetic.hpp"

#include <cmath>
#include <limits>

namespace kdsm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kInf = std::numeric_limits<double>::infinity();

double get(const SynthParams& p, const std::string& key, double def) {
    auto it = p.find(key);
    return it == p.end() ? def : it->second;
}

double log_normal_1d(double x, double mu, double var) {
    double d = x - mu;
    return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

struct RingParams {
    double radius, noise;
};

double ring_logpdf(const Vector& x, const RingParams& rp) {
    double r = x.norm();
    if (r <= 0.0) return -kInf;
    double d = r - rp.radius;
    return -0.5 * d * d / (rp.noise * rp.noise) - std::log(2.0 * M_PI * r) -
           0.5 * std::log(2.0 * M_PI) - std::log(rp.noise);
}

Vector ring_score(const Vector& x, const RingParams& rp) {
    double r = x.norm();
    return (x / r) * (-(r - rp.radius) / (rp.noise * rp.noise) - 1.0 / r);
}

Matrix ring_draw(int n, std::uint64_t seed, const RingParams& rp) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 2.0 * M_PI);
    Matrix X(n, 2);
    for (int a = 0; a < n; ++a) {
        double r;
        do {
            r = rp.radius + rp.noise * gauss(rng);
        } while (r <= 0.0);
        double t = unif(rng);
        X(a, 0) = r * std::cos(t);
        X(a, 1) = r * std::sin(t);
    }
    return X;
}

}  // namespace

const std::vector<std::string>& synthetic_family_names() {
    static const std::vector<std::string> names = {
        "gauss_mixture", "uniform", "uniform_mixture", "cosine",
        "funnel",        "banana",  "ring",            "ring_mixture"};
    return names;
}

Synthetic2D make_distribution(const std::string& name, const SynthParams& params) {
    Synthetic2D d;
    d.name = name;
    d.support = [](const Vector&) { return true; };

    if (name == "gauss_mixture") {
        const double sep = get(params, "sep", 2.0);
        d.logpdf = [sep](const Vector& x) {
            double l1 = log_normal_1d(x[0], -sep, 1.0) + log_normal_1d(x[1], 0.0, 1.0);
            double l2 = log_normal_1d(x[0], sep, 1.0) + log_normal_1d(x[1], 0.0, 1.0);
            double m = std::max(l1, l2);
            return m + std::log(0.5 * std::exp(l1 - m) + 0.5 * std::exp(l2 - m));
        };
        d.score = [sep](const Vector& x) {
            double l1 = log_normal_1d(x[0], -sep, 1.0), l2 = log_normal_1d(x[0], sep, 1.0);
            double r1 = 1.0 / (1.0 + std::exp(l2 - l1));
            Vector s(2);
            s[0] = r1 * (-sep - x[0]) + (1.0 - r1) * (sep - x[0]);
            s[1] = -x[1];
            return s;
        };
        d.sampler = [sep](int n, std::uint64_t seed) {
            auto rng = make_rng(seed);
            std::normal_distribution<double> g(0.0, 1.0);
            std::bernoulli_distribution coin(0.5);
            Matrix X(n, 2);
            for (int a = 0; a < n; ++a) {
                X(a, 0) = (coin(rng) ? sep : -sep) + g(rng);
                X(a, 1) = g(rng);
            }
            return X;
        };
        return d;
    }

    if (name == "uniform") {
        const double hw = get(params, "half_width", 3.0);
        d.bounded = true;
        d.support = [hw](const Vector& x) {
            return std::abs(x[0]) <= hw && std::abs(x[1]) <= hw;
        };
        d.logpdf = [hw, sup = d.support](const Vector& x) {
            return sup(x) ? -2.0 * std::log(2.0 * hw) : -kInf;
        };
        d.score = [](const Vector&) { return Vector::Zero(2); };
        d.sampler = [hw](int n, std::uint64_t seed) {
            auto rng = make_rng(seed);
            std::uniform_real_distribution<double> u(-hw, hw);
            Matrix X(n, 2);
            for (int a = 0; a < n; ++a) {
                X(a, 0) = u(rng);
                X(a, 1) = u(rng);
            }
            return X;
        };
        return d;
    }

    if (name == "uniform_mixture") {
        // two disjoint boxes [-3,-1]^2 and [1,3]^2, equal weights
        const double lo = get(params, "inner", 1.0), hi = get(params, "outer", 3.0);
        auto in_box = [lo, hi](const Vector& x, int sgn) {
            return sgn * x[0] >= lo && sgn * x[0] <= hi && sgn * x[1] >= lo &&
                   sgn * x[1] <= hi;
        };
        d.bounded = true;
        d.support = [in_box](const Vector& x) { return in_box(x, 1) || in_box(x, -1); };
        const double area = (hi - lo) * (hi - lo);
        d.logpdf = [in_box, area](const Vector& x) {
            return (in_box(x, 1) || in_box(x, -1)) ? std::log(0.5 / area) : -kInf;
        };
        d.score = [](const Vector&) { return Vector::Zero(2); };
        d.sampler = [lo, hi](int n, std::uint64_t seed) {
            auto rng = make_rng(seed);
            std::uniform_real_distribution<double> u(lo, hi);
            std::bernoulli_distribution coin(0.5);
            Matrix X(n, 2);
            for (int a = 0; a < n; ++a) {
                double sgn = coin(rng) ? 1.0 : -1.0;
                X(a, 0) = sgn * u(rng);
                X(a, 1) = sgn * u(rng);
            }
            return X;
        };
        return d;
    }

    if (name == "cosine") {
        const double s1 = get(params, "x1_std", 2.0);
        const double s2 = get(params, "ridge_std", 0.3);
        const double f = get(params, "freq", 1.5);
        d.logpdf = [=](const Vector& x) {
            return log_normal_1d(x[0], 0.0, s1 * s1) +
                   log_normal_1d(x[1], std::sin(f * x[0]), s2 * s2);
        };
        d.score = [=](const Vector& x) {
            double resid = x[1] - std::sin(f * x[0]);
            Vector s(2);
            s[0] = -x[0] / (s1 * s1) + resid / (s2 * s2) * f * std::cos(f * x[0]);
            s[1] = -resid / (s2 * s2);
            return s;
        };
        d.sampler = [=](int n, std::uint64_t seed) {
            auto rng = make_rng(seed);
            std::normal_distribution<double> g(0.0, 1.0);
            Matrix X(n, 2);
            for (int a = 0; a < n; ++a) {
                X(a, 0) = s1 * g(rng);
                X(a, 1) = std::sin(f * X(a, 0)) + s2 * g(rng);
            }
            return X;
        };
        return d;
    }

    if (name == "funnel") {
        const double s1 = get(params, "x1_std", 1.5);
        d.logpdf = [=](const Vector& x) {
            return log_normal_1d(x[0], 0.0, s1 * s1) +
                   log_normal_1d(x[1], 0.0, std::exp(x[0]));
        };
        d.score = [=](const Vector& x) {
            double iv = std::exp(-x[0]);
            Vector s(2);
            s[0] = -x[0] / (s1 * s1) - 0.5 + 0.5 * x[1] * x[1] * iv;
            s[1] = -x[1] * iv;
            return s;
        };
        d.sampler = [=](int n, std::uint64_t seed) {
            auto rng = make_rng(seed);
            std::normal_distribution<double> g(0.0, 1.0);
            Matrix X(n, 2);
            for (int a = 0; a < n; ++a) {
                X(a, 0) = s1 * g(rng);
                X(a, 1) = std::exp(0.5 * X(a, 0)) * g(rng);
            }
            return X;
        };
        return d;
    }

    if (name == "banana") {
        const double curv = get(params, "curvature", 0.5);
        const double v1 = get(params, "x1_var", 4.0);
        auto warp = [curv, v1](double x1) { return curv * (x1 * x1 - v1); };
        d.logpdf = [=](const Vector& x) {
            double u = x[1] - warp(x[0]);
            return log_normal_1d(x[0], 0.0, v1) + log_normal_1d(u, 0.0, 1.0);
        };
        d.score = [=](const Vector& x) {
            double u = x[1] - warp(x[0]);
            Vector s(2);
            s[0] = -x[0] / v1 + 2.0 * curv * x[0] * u;
            s[1] = -u;
            return s;
        };
        d.sampler = [=](int n, std::uint64_t seed) {
            auto rng = make_rng(seed);
            std::normal_distribution<double> g(0.0, 1.0);
            Matrix X(n, 2);
            for (int a = 0; a < n; ++a) {
                X(a, 0) = std::sqrt(v1) * g(rng);
                X(a, 1) = g(rng) + warp(X(a, 0));
            }
            return X;
        };
        return d;
    }

    if (name == "ring") {
        RingParams rp{get(params, "radius", 3.0), get(params, "noise", 0.25)};
        d.logpdf = [rp](const Vector& x) { return ring_logpdf(x, rp); };
        d.score = [rp](const Vector& x) { return ring_score(x, rp); };
        d.sampler = [rp](int n, std::uint64_t seed) { return ring_draw(n, seed, rp); };
        return d;
    }

    if (name == "ring_mixture") {
        RingParams r1{get(params, "radius1", 1.0), get(params, "noise", 0.25)};
        RingParams r2{get(params, "radius2", 3.0), get(params, "noise", 0.25)};
        d.logpdf = [=](const Vector& x) {
            double l1 = ring_logpdf(x, r1), l2 = ring_logpdf(x, r2);
            double m = std::max(l1, l2);
            if (!std::isfinite(m)) return -kInf;
            return m + std::log(0.5 * std::exp(l1 - m) + 0.5 * std::exp(l2 - m));
        };
        d.score = [=](const Vector& x) {
            double l1 = ring_logpdf(x, r1), l2 = ring_logpdf(x, r2);
            double w1 = 1.0 / (1.0 + std::exp(l2 - l1));
            return (w1 * ring_score(x, r1) + (1.0 - w1) * ring_score(x, r2)).eval();
        };
        d.sampler = [=](int n, std::uint64_t seed) {
            auto rng = make_rng(seed);
            std::bernoulli_distribution coin(0.5);
            // pre-split the draw count, then use independent derived seeds
            int n1 = 0;
            for (int a = 0; a < n; ++a) n1 += coin(rng) ? 1 : 0;
            Matrix A = ring_draw(n1, derive_seed(seed, 1), r1);
            Matrix B = ring_draw(n - n1, derive_seed(seed, 2), r2);
            Matrix X(n, 2);
            X.topRows(n1) = A;
            X.bottomRows(n - n1) = B;
            return X;
        };
        return d;
    }

    throw InvalidSpecError("unknown synthetic family: " + name);
}

Matrix synth_sample(const Synthetic2D& dist, int n, std::uint64_t seed) {
    if (n < 1) throw InvalidSpecError("need n >= 1");
    return dist.sampler(n, seed);
}

}  // namespace kdsm
