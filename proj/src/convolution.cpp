#include "kdsm/convolution.hpp"

#include "kdsm/math.hpp"

#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kdsm {

namespace {

void check_rbf(const FeatureMap& map) {
    if (map.spec.family != KernelFamily::Rbf)
        throw InvalidSpecError("build_system_rbf requires an rbf feature map");
}

// Gradient (and optionally w^T Hess w weights) of log q0 at each data point.
// For the Gaussian q0 the closed form is exact; for the mixture it is the
// first-order Taylor substitution evaluated at each point.
struct Q0Terms {
    Matrix grad;     // n x d
    Matrix whw;      // n x M, row a = diag(W Hess_a W^T); empty when not needed
    bool present = false;
};

Q0Terms q0_terms(const BaseDensity& q0, const Matrix& X, const Matrix& W, bool need_hess) {
    Q0Terms t;
    if (q0.kind == BaseDensityKind::UniformBox) return t;
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    const int M = static_cast<int>(W.rows());
    t.present = true;
    t.grad.resize(n, d);
    if (need_hess) t.whw.resize(n, M);
    for (int a = 0; a < n; ++a) {
        LogPdfDerivs der = q0_logpdf_grad_hess(q0, X.row(a).transpose());
        t.grad.row(a) = der.grad.transpose();
        if (need_hess) {
            Matrix V = W * der.hess;  // M x d
            t.whw.row(a) = (V.array() * W.array()).rowwise().sum().transpose();
        }
    }
    return t;
}

}  // namespace

ConvolvedSystem build_system_rbf(const FeatureMap& map, const Matrix& X,
                                 const NoiseSpec& noise, const BaseDensity& q0) {
    check_rbf(map);
    noise.validate();
    const int n = static_cast<int>(X.rows());
    const int M = map.M;
    const double sig2 = noise.sigma * noise.sigma;
    const double c = std::sqrt(2.0 / M);

    Matrix theta = X * map.W.transpose();
    theta.rowwise() += map.b.transpose();
    Matrix C = theta.array().cos();
    Matrix S = theta.array().sin();

    Matrix gram = map.W * map.W.transpose();
    Vector sq = gram.diagonal();

    Matrix A = C.transpose() * C;
    Matrix B = S.transpose() * S;

    ConvolvedSystem sys;
    sys.n = n;
    sys.noise = noise;
    sys.H.resize(M, M);
    {
        Matrix dm = ((sq.replicate(1, M) + sq.transpose().replicate(M, 1)) - 2.0 * gram);
        Matrix dp = ((sq.replicate(1, M) + sq.transpose().replicate(M, 1)) + 2.0 * gram);
        Matrix Em = (-0.5 * sig2 * dm.array()).exp();
        Matrix Ep = (-0.5 * sig2 * dp.array()).exp();
        sys.H = (1.0 / M) * gram.array() *
                (Em.array() * (A + B).array() - Ep.array() * (A - B).array());
    }
    // keep exact symmetry against round-off in the GEMMs
    sys.H = 0.5 * (sys.H + sys.H.transpose()).eval();

    Vector damp = (-0.5 * sig2 * sq.array()).exp();
    Vector csum = C.colwise().sum().transpose();
    sys.h = -(c / n) * (sq.array() * damp.array() * csum.array());

    Q0Terms qt = q0_terms(q0, X, map.W, sig2 > 0.0);
    if (qt.present) {
        Matrix WG = qt.grad * map.W.transpose();  // n x M, entry (a,j) = w_j^T grad_a
        Vector term = (WG.array() * S.array()).colwise().sum().matrix().transpose();
        if (sig2 > 0.0)
            term += sig2 * (qt.whw.array() * C.array()).colwise().sum().matrix().transpose();
        sys.h += -(c / n) * (damp.array() * term.array()).matrix();
    }
    return sys;
}

ConvolvedSystem build_system_rbf_serial(const FeatureMap& map, const Matrix& X,
                                        const NoiseSpec& noise, const BaseDensity& q0) {
    check_rbf(map);
    noise.validate();
    const int n = static_cast<int>(X.rows());
    const int M = map.M;
    const double sig2 = noise.sigma * noise.sigma;
    const double c = std::sqrt(2.0 / M);

    ConvolvedSystem sys;
    sys.n = n;
    sys.noise = noise;
    sys.H = Matrix::Zero(M, M);
    sys.h = Vector::Zero(M);

    Q0Terms qt = q0_terms(q0, X, map.W, true);

    std::vector<double> buf(n);
    for (int i = 0; i < M; ++i) {
        for (int j = i; j < M; ++j) {
            Vector wm = map.W.row(i) - map.W.row(j);
            Vector wp = map.W.row(i) + map.W.row(j);
            double em = std::exp(-0.5 * sig2 * wm.squaredNorm());
            double ep = std::exp(-0.5 * sig2 * wp.squaredNorm());
            double bm = map.b[i] - map.b[j];
            double bp = map.b[i] + map.b[j];
            for (int a = 0; a < n; ++a) {
                double xm = wm.dot(X.row(a));
                double xp = wp.dot(X.row(a));
                buf[a] = em * std::cos(xm + bm) - ep * std::cos(xp + bp);
            }
            double s = pairwise_sum(buf.data(), n);
            double hij = (1.0 / M) * map.W.row(i).dot(map.W.row(j)) * s;
            sys.H(i, j) = hij;
            sys.H(j, i) = hij;
        }
    }

    for (int j = 0; j < M; ++j) {
        double sqj = map.W.row(j).squaredNorm();
        double damp = std::exp(-0.5 * sig2 * sqj);
        for (int a = 0; a < n; ++a) {
            double th = map.W.row(j).dot(X.row(a)) + map.b[j];
            double term = sqj * std::cos(th);
            if (qt.present) {
                double wg = map.W.row(j).dot(qt.grad.row(a));
                term += wg * std::sin(th);
                if (sig2 > 0.0) term += sig2 * qt.whw(a, j) * std::cos(th);
            }
            buf[a] = term;
        }
        sys.h[j] = -(c / n) * damp * pairwise_sum(buf.data(), n);
    }
    return sys;
}

ConvolvedSystem build_system_arccos(const FeatureMap& map, const Matrix& X,
                                    const NoiseSpec& noise, const BaseDensity& q0) {
    if (map.spec.family != KernelFamily::ArcCos)
        throw InvalidSpecError("build_system_arccos requires an arc-cosine feature map");
    if (q0.kind != BaseDensityKind::UniformBox)
        throw InvalidSpecError("arc-cosine system supports a uniform base density only");
    noise.validate();

    const int n = static_cast<int>(X.rows());
    const int M = map.M;
    const double sigma = noise.sigma;

    ConvolvedSystem sys;
    sys.n = n;
    sys.noise = noise;

    Matrix T = X * map.W.transpose();  // n x M, entry (a,j) = w_j^T x_a
    Matrix gram = map.W * map.W.transpose();
    Vector norms = gram.diagonal().array().sqrt();

    if (sigma == 0.0) {
        Matrix U = (T.array() > 0.0).cast<double>() * T.array();
        sys.H = (4.0 / M) * (gram.array() * (U.transpose() * U).array());
        sys.h = (2.0 / (n * std::sqrt(static_cast<double>(M)))) *
                (gram.diagonal().array() *
                 (T.array() > 0.0).cast<double>().colwise().sum().transpose().array());
        sys.H = 0.5 * (sys.H + sys.H.transpose()).eval();
        return sys;
    }

    sys.H.resize(M, M);
#pragma omp parallel for schedule(dynamic) num_threads(effective_threads())
    for (int i = 0; i < M; ++i) {
        for (int j = i; j < M; ++j) {
            double rho = gram(i, j) / (norms[i] * norms[j]);
            double s1 = sigma * norms[i];
            double s2 = sigma * norms[j];
            double acc = 0.0;
            if (i == j) {
                for (int a = 0; a < n; ++a) {
                    double m = T(a, i);
                    double z = m / s1;
                    acc += (m * m + s1 * s1) * norm_cdf(z) + m * s1 * norm_pdf(z);
                }
            } else {
                for (int a = 0; a < n; ++a)
                    acc += bvn_positive_quadrant_cross_moment(T(a, i), T(a, j), s1, s2, rho);
            }
            double hij = (4.0 / M) * gram(i, j) * acc;
            sys.H(i, j) = hij;
            sys.H(j, i) = hij;
        }
    }

    sys.h.resize(M);
    for (int j = 0; j < M; ++j) {
        double acc = 0.0;
        for (int a = 0; a < n; ++a) acc += norm_cdf(T(a, j) / (sigma * norms[j]));
        sys.h[j] = (2.0 / (n * std::sqrt(static_cast<double>(M)))) * gram(j, j) * acc;
    }
    return sys;
}

ConvolvedSystem mc_convolved_system(const FeatureMap& map, const Matrix& X,
                                    const NoiseSpec& noise, const BaseDensity& q0, int K,
                                    std::uint64_t seed) {
    if (K < 1) throw InvalidSpecError("mc_convolved_system needs K >= 1");
    noise.validate();
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    const int M = map.M;
    const bool with_q0 = q0.kind != BaseDensityKind::UniformBox;

    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Matrix Hsum = Matrix::Zero(M, M), Hsum2 = Matrix::Zero(M, M);
    Vector hsum = Vector::Zero(M), hsum2 = Vector::Zero(M);

    Matrix Xp(n, d);
    for (int k = 0; k < K; ++k) {
        Vector z = Vector::Zero(d);
        if (noise.sigma > 0.0)
            for (int i = 0; i < d; ++i) z[i] = noise.sigma * gauss(rng);
        Xp = X;
        Xp.rowwise() += z.transpose();

        DerivativeBatch batch = eval_batch(map, Xp);
        Matrix Ek = batch.dPhi.transpose() * batch.dPhi;
        Vector hk = batch.d2Phi.colwise().sum().transpose();
        if (with_q0) {
            Vector gvec(static_cast<long>(n) * d);
            for (int a = 0; a < n; ++a) {
                LogPdfDerivs der = q0_logpdf_grad_hess(q0, Xp.row(a).transpose());
                gvec.segment(static_cast<long>(a) * d, d) = der.grad;
            }
            hk += batch.dPhi.transpose() * gvec;
        }
        hk /= n;

        Hsum += Ek;
        Hsum2 += Ek.cwiseProduct(Ek);
        hsum += hk;
        hsum2 += hk.cwiseProduct(hk);
    }

    ConvolvedSystem sys;
    sys.n = n;
    sys.noise = noise;
    sys.H = Hsum / K;
    sys.h = hsum / K;
    if (K > 1) {
        sys.H_se = ((Hsum2 / K - sys.H.cwiseProduct(sys.H)).cwiseMax(0.0) *
                    (1.0 / (K - 1.0)))
                       .cwiseSqrt();
        sys.h_se = ((hsum2 / K - sys.h.cwiseProduct(sys.h)).cwiseMax(0.0) *
                    (1.0 / (K - 1.0)))
                       .cwiseSqrt();
    } else {
        sys.H_se = Matrix::Zero(M, M);
        sys.h_se = Vector::Zero(M);
    }
    return sys;
}

}  // namespace kdsm
