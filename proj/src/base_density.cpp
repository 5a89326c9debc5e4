#include "kdsm/base_density.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <iostream>
#include <limits>

namespace kdsm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double gauss_logpdf(const Vector& x, const Vector& mu, const Eigen::LLT<Matrix>& llt,
                    double logdet) {
    Vector z = llt.matrixL().solve(x - mu);
    return -0.5 * (x.size() * kLog2Pi + logdet + z.squaredNorm());
}

double logsumexp(const Vector& v) {
    double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

int BaseDensity::dim() const {
    switch (kind) {
        case BaseDensityKind::UniformBox: return static_cast<int>(lower.size());
        case BaseDensityKind::Gaussian: return static_cast<int>(mean.size());
        case BaseDensityKind::Gmm: return static_cast<int>(means.at(0).size());
    }
    return 0;
}

bool BaseDensity::in_support(const Vector& x) const {
    if (kind != BaseDensityKind::UniformBox) return true;
    for (int i = 0; i < x.size(); ++i)
        if (x[i] < lower[i] || x[i] > upper[i]) return false;
    return true;
}

BaseDensity fit_gmm_em(const Matrix& X, int k, std::uint64_t seed,
                       std::vector<double>* loglik_trace) {
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());

    BaseDensity q;
    q.kind = BaseDensityKind::Gmm;
    q.weights = Vector::Constant(k, 1.0 / k);

    auto rng = make_rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);
    Vector gmean = X.colwise().mean();
    Matrix centered = X.rowwise() - gmean.transpose();
    Matrix gcov = centered.transpose() * centered / std::max(1, n - 1);
    double jitter = 1e-6 * gcov.trace() / d + 1e-12;
    gcov += jitter * Matrix::Identity(d, d);
    for (int c = 0; c < k; ++c) {
        q.means.push_back(X.row(pick(rng)).transpose());
        q.covs.push_back(gcov);
    }

    Matrix resp(n, k);
    double prev = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 500; ++iter) {
        // E step
        std::vector<Eigen::LLT<Matrix>> llts;
        std::vector<double> logdets;
        for (int c = 0; c < k; ++c) {
            llts.emplace_back(q.covs[c]);
            logdets.push_back(
                2.0 * Matrix(llts[c].matrixL()).diagonal().array().log().sum());
        }
        double ll = 0.0;
        for (int a = 0; a < n; ++a) {
            Vector lp(k);
            for (int c = 0; c < k; ++c)
                lp[c] = std::log(q.weights[c]) +
                        gauss_logpdf(X.row(a).transpose(), q.means[c], llts[c], logdets[c]);
            double lse = logsumexp(lp);
            ll += lse;
            resp.row(a) = (lp.array() - lse).exp().transpose();
        }
        ll /= n;
        if (loglik_trace) loglik_trace->push_back(ll);
        if (ll - prev < 1e-6 && iter > 0) break;
        prev = ll;

        // M step
        Vector nk = resp.colwise().sum();
        for (int c = 0; c < k; ++c) {
            double w = std::max(nk[c], 1e-10);
            q.weights[c] = w / n;
            Vector mu = (resp.col(c).transpose() * X).transpose() / w;
            Matrix cov = Matrix::Zero(d, d);
            for (int a = 0; a < n; ++a) {
                Vector dx = X.row(a).transpose() - mu;
                cov += resp(a, c) * dx * dx.transpose();
            }
            cov /= w;
            cov += (1e-6 * cov.trace() / d + 1e-10) * Matrix::Identity(d, d);
            q.means[c] = mu;
            q.covs[c] = cov;
        }
        q.weights /= q.weights.sum();
    }
    return q;
}

double gmm_mean_loglik(const BaseDensity& q0, const Matrix& X) {
    double s = 0.0;
    for (int a = 0; a < X.rows(); ++a) s += q0_logpdf(q0, X.row(a).transpose());
    return s / X.rows();
}

BaseDensity fit_q0(BaseDensityKind kind, const Matrix& X, int k, std::uint64_t seed) {
    if (X.rows() < 2) throw InvalidSpecError("fit_q0 needs at least 2 points");
    const int d = static_cast<int>(X.cols());

    if (kind == BaseDensityKind::UniformBox) {
        BaseDensity q;
        q.kind = kind;
        Vector lo = X.colwise().minCoeff();
        Vector hi = X.colwise().maxCoeff();
        Vector span = hi - lo;
        for (int i = 0; i < d; ++i) {
            if (span[i] <= 0.0) {
                std::cerr << "fit_q0: degenerate dimension " << i << ", widening box\n";
                span[i] = 1e-6 * (std::abs(lo[i]) + 1.0);
            }
        }
        q.lower = lo - 0.05 * span;
        q.upper = hi + 0.05 * span;
        return q;
    }

    if (kind == BaseDensityKind::Gaussian) {
        BaseDensity q;
        q.kind = kind;
        q.mean = X.colwise().mean();
        Matrix centered = X.rowwise() - q.mean.transpose();
        q.cov = centered.transpose() * centered / (X.rows() - 1);
        double jit = 1e-6 * q.cov.trace() / d;
        if (q.cov.trace() <= 0.0) {
            std::cerr << "fit_q0: zero-variance data, jittering covariance\n";
            jit = 1e-6;
        }
        q.cov += jit * Matrix::Identity(d, d);
        return q;
    }

    if (k < 1) throw InvalidSpecError("gmm needs k >= 1");
    BaseDensity best;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < 3; ++r) {
        BaseDensity cand = fit_gmm_em(X, k, derive_seed(seed, r));
        double ll = gmm_mean_loglik(cand, X);
        if (ll > best_ll) {
            best_ll = ll;
            best = cand;
        }
    }
    return best;
}

double q0_logpdf(const BaseDensity& q0, const Vector& x) {
    switch (q0.kind) {
        case BaseDensityKind::UniformBox: {
            if (!q0.in_support(x)) return -std::numeric_limits<double>::infinity();
            return -(q0.upper - q0.lower).array().log().sum();
        }
        case BaseDensityKind::Gaussian: {
            Eigen::LLT<Matrix> llt(q0.cov);
            double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
            return gauss_logpdf(x, q0.mean, llt, logdet);
        }
        case BaseDensityKind::Gmm: {
            Vector lp(q0.weights.size());
            for (int c = 0; c < q0.weights.size(); ++c) {
                Eigen::LLT<Matrix> llt(q0.covs[c]);
                double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
                lp[c] = std::log(q0.weights[c]) + gauss_logpdf(x, q0.means[c], llt, logdet);
            }
            return logsumexp(lp);
        }
    }
    return 0.0;
}

LogPdfDerivs q0_logpdf_grad_hess(const BaseDensity& q0, const Vector& x) {
    const int d = static_cast<int>(x.size());
    LogPdfDerivs out;
    out.grad = Vector::Zero(d);
    out.hess = Matrix::Zero(d, d);

    switch (q0.kind) {
        case BaseDensityKind::UniformBox: {
            out.logpdf = q0_logpdf(q0, x);
            return out;  // gradient defined as 0, also outside the box
        }
        case BaseDensityKind::Gaussian: {
            Eigen::LLT<Matrix> llt(q0.cov);
            Matrix prec = llt.solve(Matrix::Identity(d, d));
            out.logpdf = q0_logpdf(q0, x);
            out.grad = -prec * (x - q0.mean);
            out.hess = -prec;
            return out;
        }
        case BaseDensityKind::Gmm: {
            const int k = static_cast<int>(q0.weights.size());
            Vector lp(k);
            std::vector<Vector> gc(k);
            std::vector<Matrix> Hc(k);
            for (int c = 0; c < k; ++c) {
                Eigen::LLT<Matrix> llt(q0.covs[c]);
                double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
                lp[c] = std::log(q0.weights[c]) + gauss_logpdf(x, q0.means[c], llt, logdet);
                Matrix prec = llt.solve(Matrix::Identity(d, d));
                gc[c] = -prec * (x - q0.means[c]);
                Hc[c] = -prec;
            }
            double lse = logsumexp(lp);
            Vector r = (lp.array() - lse).exp();
            out.logpdf = lse;
            for (int c = 0; c < k; ++c) out.grad += r[c] * gc[c];
            for (int c = 0; c < k; ++c)
                out.hess += r[c] * (Hc[c] + gc[c] * gc[c].transpose());
            out.hess -= out.grad * out.grad.transpose();
            return out;
        }
    }
    return out;
}

Matrix q0_sample(const BaseDensity& q0, int n, std::uint64_t seed) {
    const int d = q0.dim();
    Matrix X(n, d);
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    switch (q0.kind) {
        case BaseDensityKind::UniformBox: {
            for (int a = 0; a < n; ++a)
                for (int i = 0; i < d; ++i)
                    X(a, i) = q0.lower[i] + unif(rng) * (q0.upper[i] - q0.lower[i]);
            return X;
        }
        case BaseDensityKind::Gaussian: {
            Eigen::LLT<Matrix> llt(q0.cov);
            Matrix L = llt.matrixL();
            for (int a = 0; a < n; ++a) {
                Vector z(d);
                for (int i = 0; i < d; ++i) z[i] = gauss(rng);
                X.row(a) = (q0.mean + L * z).transpose();
            }
            return X;
        }
        case BaseDensityKind::Gmm: {
            std::vector<Matrix> Ls;
            for (const auto& c : q0.covs) Ls.push_back(Matrix(Eigen::LLT<Matrix>(c).matrixL()));
            std::discrete_distribution<int> comp(q0.weights.data(),
                                                 q0.weights.data() + q0.weights.size());
            for (int a = 0; a < n; ++a) {
                int c = comp(rng);
                Vector z(d);
                for (int i = 0; i < d; ++i) z[i] = gauss(rng);
                X.row(a) = (q0.means[c] + Ls[c] * z).transpose();
            }
            return X;
        }
    }
    return X;
}

}  // namespace kdsm
