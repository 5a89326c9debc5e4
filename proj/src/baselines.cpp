#include "kdsm/baselines.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kdsm {

namespace {

void check_rbf_spec(const KernelSpec& spec, const char* who) {
    if (spec.family != KernelFamily::Rbf)
        throw InvalidSpecError(std::string(who) + " supports the rbf kernel only");
}

double rbf_k(const KernelSpec& spec, const Vector& x, const Vector& y) {
    double e = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        double d = (x[i] - y[i]) / spec.lengthscales[i];
        e += d * d;
    }
    return std::exp(-0.5 * e);
}

std::vector<int> pick_subset(int n, int m, std::uint64_t seed) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = make_rng(seed);
    for (int i = 0; i < m; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(m);
    return idx;
}

// LDLT solve of (A + jitter I) x = rhs with escalating jitter and a residual
// check against the unjittered system.  Systems whose condition number defeats
// LDLT (the exact-kernel Gram squared can reach 1e16+) fall back to a
// symmetric pseudo-inverse with clamped eigenvalues.
Vector solve_spd(const Matrix& A, const Vector& rhs, double jitter0, const char* who) {
    const double rhs_norm = rhs.norm();
    double jitter = jitter0;
    for (int attempt = 0; attempt < 4; ++attempt) {
        Matrix Aj = A;
        Aj.diagonal().array() += jitter;
        Eigen::LDLT<Matrix> ldlt(Aj);
        if (ldlt.info() == Eigen::Success) {
            Vector x = ldlt.solve(rhs);
            if ((A * x - rhs).norm() <= 1e-8 * std::max(rhs_norm, 1e-300)) return x;
        }
        jitter *= 10.0;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    if (es.info() != Eigen::Success)
        throw NumericalError(std::string(who) +
                             ": linear system unsolvable after jitter escalation");
    const Vector& ev = es.eigenvalues();
    double floor = std::max(ev.cwiseAbs().maxCoeff() * 1e-14, 1e-300);
    Vector proj = es.eigenvectors().transpose() * rhs;
    for (long i = 0; i < proj.size(); ++i)
        proj[i] = ev[i] > floor ? proj[i] / ev[i] : 0.0;
    Vector x = es.eigenvectors() * proj;
    if (!x.allFinite())
        throw NumericalError(std::string(who) + ": non-finite solution");
    return x;
}

}  // namespace

NystromSystem build_nystrom_system(const Matrix& X, const Matrix& Z, const KernelSpec& spec,
                                   const NoiseSpec& noise) {
    check_rbf_spec(spec, "build_nystrom_system");
    noise.validate();
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    const int m = static_cast<int>(Z.rows());
    const double sig2 = noise.sigma * noise.sigma;

    NystromSystem sys;
    sys.n = n;
    sys.G.resize(m, m);
    sys.g.resize(m);

    // G(p,q) = sum_a prod_i P0_i * sum_i ratio_i: per-dimension Gaussian
    // products integrated against the noise (see header).
#pragma omp parallel for schedule(dynamic) num_threads(effective_threads())
    for (int p = 0; p < m; ++p) {
        for (int q = p; q < m; ++q) {
            double acc = 0.0;
            for (int a = 0; a < n; ++a) {
                double prod0 = 1.0, sumr = 0.0;
                for (int i = 0; i < d; ++i) {
                    const double ell = spec.lengthscales[i];
                    const double ell2 = ell * ell;
                    const double zp = Z(p, i), zq = Z(q, i), t = X(a, i);
                    const double v = 0.5 * ell2;
                    const double m0 = 0.5 * (zp + zq);
                    const double vt = v + sig2;
                    const double D = std::exp(-(zp - zq) * (zp - zq) / (4.0 * ell2));
                    prod0 *= D * std::sqrt(v / vt) *
                             std::exp(-(t - m0) * (t - m0) / (2.0 * vt));
                    const double mu = (sig2 * m0 + v * t) / vt;
                    const double vs = v * sig2 / vt;
                    sumr += ((mu - zp) * (mu - zq) + vs) / (ell2 * ell2);
                }
                acc += prod0 * sumr;
            }
            sys.G(p, q) = acc;
            sys.G(q, p) = acc;
        }
    }

    // g(p) = (1/n) sum_a E[Lap_x k(z_p, x_a + eps)]: bandwidth widens to
    // L^2 = ell^2 + sigma^2 per dimension.
    for (int p = 0; p < m; ++p) {
        double acc = 0.0;
        for (int a = 0; a < n; ++a) {
            double prod0 = 1.0, sumt = 0.0;
            for (int i = 0; i < d; ++i) {
                const double ell2 = spec.lengthscales[i] * spec.lengthscales[i];
                const double L2 = ell2 + sig2;
                const double z = Z(p, i), t = X(a, i);
                prod0 *= std::sqrt(ell2 / L2) * std::exp(-(t - z) * (t - z) / (2.0 * L2));
                const double mu = (sig2 * z + ell2 * t) / L2;
                const double vt = ell2 * sig2 / L2;
                sumt += ((mu - z) * (mu - z) + vt) / (ell2 * ell2) - 1.0 / ell2;
            }
            acc += prod0 * sumt;
        }
        sys.g[p] = acc / n;
    }
    return sys;
}

NystromMcSystem mc_nystrom_system(const Matrix& X, const Matrix& Z, const KernelSpec& spec,
                                  const NoiseSpec& noise, int K, std::uint64_t seed) {
    check_rbf_spec(spec, "mc_nystrom_system");
    if (K < 1) throw InvalidSpecError("mc_nystrom_system needs K >= 1");
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    const int m = static_cast<int>(Z.rows());

    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Matrix Gsum = Matrix::Zero(m, m), Gsum2 = Matrix::Zero(m, m);
    Vector gsum = Vector::Zero(m), gsum2 = Vector::Zero(m);

    Matrix dK(static_cast<long>(n) * d, m);
    for (int k = 0; k < K; ++k) {
        Vector z = Vector::Zero(d);
        if (noise.sigma > 0.0)
            for (int i = 0; i < d; ++i) z[i] = noise.sigma * gauss(rng);

        Vector gk = Vector::Zero(m);
        for (int a = 0; a < n; ++a) {
            Vector x = X.row(a).transpose() + z;
            for (int p = 0; p < m; ++p) {
                double kv = rbf_k(spec, Z.row(p).transpose(), x);
                double lap = 0.0;
                for (int i = 0; i < d; ++i) {
                    double ell2 = spec.lengthscales[i] * spec.lengthscales[i];
                    double diff = x[i] - Z(p, i);
                    dK(static_cast<long>(a) * d + i, p) = -(diff / ell2) * kv;
                    lap += (diff * diff / (ell2 * ell2) - 1.0 / ell2) * kv;
                }
                gk[p] += lap;
            }
        }
        gk /= n;
        Matrix Gk = dK.transpose() * dK;
        Gsum += Gk;
        Gsum2 += Gk.cwiseProduct(Gk);
        gsum += gk;
        gsum2 += gk.cwiseProduct(gk);
    }

    NystromMcSystem out;
    out.G = Gsum / K;
    out.g = gsum / K;
    if (K > 1) {
        out.G_se =
            ((Gsum2 / K - out.G.cwiseProduct(out.G)).cwiseMax(0.0) * (1.0 / (K - 1.0)))
                .cwiseSqrt();
        out.g_se =
            ((gsum2 / K - out.g.cwiseProduct(out.g)).cwiseMax(0.0) * (1.0 / (K - 1.0)))
                .cwiseSqrt();
    } else {
        out.G_se = Matrix::Zero(m, m);
        out.g_se = Vector::Zero(m);
    }
    return out;
}

NystromModel fit_nystrom(const Matrix& X, const KernelSpec& spec, int m_inducing,
                         double lambda, const NoiseSpec& noise, std::uint64_t seed) {
    check_rbf_spec(spec, "fit_nystrom");
    const int n = static_cast<int>(X.rows());
    if (m_inducing < 1 || m_inducing > n)
        throw InvalidSpecError("fit_nystrom: need 1 <= m_inducing <= n");
    if (!(lambda > 0.0)) throw InvalidSpecError("fit_nystrom: lambda must be positive");

    NystromModel model;
    model.spec = spec;
    std::vector<int> idx = pick_subset(n, m_inducing, derive_seed(seed, 1));
    model.Z.resize(m_inducing, X.cols());
    for (int p = 0; p < m_inducing; ++p) model.Z.row(p) = X.row(idx[p]);

    NystromSystem sys = build_nystrom_system(X, model.Z, spec, noise);
    Matrix K11(m_inducing, m_inducing);
    for (int p = 0; p < m_inducing; ++p)
        for (int q = p; q < m_inducing; ++q) {
            double kv = rbf_k(spec, model.Z.row(p).transpose(), model.Z.row(q).transpose());
            K11(p, q) = kv;
            K11(q, p) = kv;
        }

    Matrix A = sys.G + (static_cast<double>(n) * lambda) * K11;
    double jitter0 = 1e-10 * A.trace() / m_inducing;
    model.alpha = solve_spd(A, (-static_cast<double>(n)) * sys.g, jitter0, "fit_nystrom");
    return model;
}

double nystrom_f(const NystromModel& model, const Vector& x) {
    double acc = 0.0;
    for (int p = 0; p < model.Z.rows(); ++p)
        acc += model.alpha[p] * rbf_k(model.spec, model.Z.row(p).transpose(), x);
    return acc;
}

Vector nystrom_f_grad(const NystromModel& model, const Vector& x) {
    Vector g = Vector::Zero(x.size());
    for (int p = 0; p < model.Z.rows(); ++p) {
        double kv = model.alpha[p] * rbf_k(model.spec, model.Z.row(p).transpose(), x);
        for (int i = 0; i < x.size(); ++i) {
            double ell2 = model.spec.lengthscales[i] * model.spec.lengthscales[i];
            g[i] += -(x[i] - model.Z(p, i)) / ell2 * kv;
        }
    }
    return g;
}

double nystrom_f_laplacian(const NystromModel& model, const Vector& x) {
    double acc = 0.0;
    for (int p = 0; p < model.Z.rows(); ++p) {
        double kv = model.alpha[p] * rbf_k(model.spec, model.Z.row(p).transpose(), x);
        for (int i = 0; i < x.size(); ++i) {
            double ell2 = model.spec.lengthscales[i] * model.spec.lengthscales[i];
            double diff = x[i] - model.Z(p, i);
            acc += (diff * diff / (ell2 * ell2) - 1.0 / ell2) * kv;
        }
    }
    return acc;
}

TaylorSystem build_taylor_system(const FeatureMap& map, const Matrix& X,
                                 const BaseDensity& q0, double sigma) {
    check_rbf_spec(map.spec, "build_taylor_system");
    if (q0.kind == BaseDensityKind::Gmm)
        throw InvalidSpecError("build_taylor_system supports uniform or Gaussian q0 only");
    if (!(sigma >= 0.0)) throw InvalidSpecError("sigma must be >= 0");

    const int n = static_cast<int>(X.rows());
    const int M = map.M;
    const double sig2 = sigma * sigma;
    const double c = std::sqrt(2.0 / M);

    Matrix theta = X * map.W.transpose();
    theta.rowwise() += map.b.transpose();
    Matrix C = theta.array().cos();
    Matrix S = theta.array().sin();
    Matrix gram = map.W * map.W.transpose();
    Vector sq = gram.diagonal();

    const bool gauss_q0 = q0.kind == BaseDensityKind::Gaussian;
    Matrix hess_psi;  // constant Hessian -cov^{-1} of the Gaussian log-density
    Vector whw = Vector::Zero(M);
    Matrix grad_psi = Matrix::Zero(n, static_cast<int>(X.cols()));
    if (gauss_q0) {
        Eigen::LDLT<Matrix> cov_ldlt(q0.cov);
        hess_psi = -cov_ldlt.solve(Matrix::Identity(q0.cov.rows(), q0.cov.cols()));
        whw = ((map.W * hess_psi).array() * map.W.array()).rowwise().sum();
        for (int a = 0; a < n; ++a)
            grad_psi.row(a) =
                (hess_psi * (X.row(a).transpose() - q0.mean)).transpose();
    }

    TaylorSystem sys;
    sys.n = n;

    // sigma = 0 blocks of the quadratic sample loss.
    sys.H = (c * c) * (gram.array() * (S.transpose() * S).array());
    Vector csum = C.colwise().sum().transpose();
    sys.h = -(c / n) * (sq.array() * csum.array());
    sys.c0 = 0.0;
    if (gauss_q0) {
        Matrix WG = grad_psi * map.W.transpose();  // n x M
        sys.h += -(c / n) * (WG.array() * S.array()).colwise().sum().matrix().transpose();
        for (int a = 0; a < n; ++a)
            sys.c0 += hess_psi.trace() + 0.5 * grad_psi.row(a).squaredNorm();
        sys.c0 /= n;
    }

    if (sig2 > 0.0) {
        // (sigma^2/2) * mean[ Lap^2 u + ||Hess u||_F^2 + grad u . grad Lap u ].
        Matrix A_hess = (c * c) * (gram.array().square() * (C.transpose() * C).array());
        Matrix A_cross =
            (c * c) * (gram.array() * (S.transpose() * S).array()).matrix();
        Matrix A_cross_sym =
            -0.5 * (A_cross.array().colwise() * sq.array()).matrix() -
            0.5 * (A_cross.array().rowwise() * sq.transpose().array()).matrix();
        sys.H += sig2 * (A_hess + A_cross_sym);

        Vector corr = (c * sq.array().square() * csum.array()).matrix();
        if (gauss_q0) {
            corr += (-2.0 * c) * (whw.array() * csum.array()).matrix();
            Matrix WG = grad_psi * map.W.transpose();
            corr += (c * sq.array() *
                     (WG.array() * S.array()).colwise().sum().transpose().array())
                        .matrix();
            sys.c0 += 0.5 * sig2 * hess_psi.squaredNorm();
        }
        sys.h += (0.5 * sig2 / n) * corr;
    }
    return sys;
}

Coefficients taylor_dsm_fit(const FeatureMap& map, const Matrix& X, const BaseDensity& q0,
                            double lambda, double sigma) {
    if (!(lambda > 0.0)) throw InvalidSpecError("taylor_dsm_fit: lambda must be positive");
    TaylorSystem sys = build_taylor_system(map, X, q0, sigma);
    Matrix A = sys.H;
    A.diagonal().array() += static_cast<double>(sys.n) * lambda;
    double jitter0 = 1e-10 * sys.H.trace() / map.M;
    Coefficients out;
    out.b = solve_spd(A, (-static_cast<double>(sys.n)) * sys.h, jitter0, "taylor_dsm_fit");
    out.provenance = Provenance::Taylor;
    return out;
}

double taylor_loss(const TaylorSystem& sys, const Vector& b) {
    return sys.c0 + sys.h.dot(b) + b.dot(sys.H * b) / (2.0 * sys.n);
}

ExactKernelModel fit_exact_kernel(const Matrix& X, const KernelSpec& spec, double lambda,
                                  const BaseDensity& q0) {
    check_rbf_spec(spec, "fit_exact_kernel");
    if (!(lambda > 0.0)) throw InvalidSpecError("fit_exact_kernel: lambda must be positive");
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    const long nd = static_cast<long>(n) * d;
    if (nd > 4000) throw InvalidSpecError("fit_exact_kernel: n*d exceeds the 4000 guard");
    spec.validate(d);

    const double E = (1.0 / spec.lengthscales.array().square()).sum();

    // Gram of the derivative sections and the Laplacian column sums.
    Matrix Gmat(nd, nd);
    Vector t1 = Vector::Zero(nd);
#pragma omp parallel for schedule(dynamic) num_threads(effective_threads())
    for (int a = 0; a < n; ++a) {
        for (int bb = 0; bb < n; ++bb) {
            Vector delta = (X.row(bb) - X.row(a)).transpose();
            Vector r = delta.array() / spec.lengthscales.array().square();
            double kv = std::exp(-0.5 * (delta.array() * r.array()).sum());
            double R = r.squaredNorm();
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    double g = -r[i] * r[j] * kv;
                    if (i == j)
                        g += kv / (spec.lengthscales[i] * spec.lengthscales[i]);
                    Gmat(static_cast<long>(a) * d + i, static_cast<long>(bb) * d + j) = g;
                }
                t1[static_cast<long>(a) * d + i] +=
                    (-2.0 * r[i] / (spec.lengthscales[i] * spec.lengthscales[i]) -
                     r[i] * E + r[i] * R) *
                    kv;
            }
        }
    }

    Vector s_vec = Vector::Zero(nd);
    if (q0.kind != BaseDensityKind::UniformBox) {
        for (int bb = 0; bb < n; ++bb) {
            LogPdfDerivs der = q0_logpdf_grad_hess(q0, X.row(bb).transpose());
            s_vec.segment(static_cast<long>(bb) * d, d) = der.grad;
        }
    }

    Vector c_vec = t1 + Gmat * s_vec;
    Matrix A = (Gmat * Gmat) / n + lambda * Gmat;
    double jitter0 = 1e-12 * A.trace() / static_cast<double>(nd);

    ExactKernelModel model;
    model.X = X;
    model.spec = spec;
    model.beta = solve_spd(A, (-1.0 / n) * c_vec, jitter0, "fit_exact_kernel");
    return model;
}

double exact_f(const ExactKernelModel& model, const Vector& x) {
    const int n = static_cast<int>(model.X.rows());
    const int d = static_cast<int>(model.X.cols());
    double acc = 0.0;
    for (int a = 0; a < n; ++a) {
        Vector delta = x - model.X.row(a).transpose();
        Vector r = delta.array() / model.spec.lengthscales.array().square();
        double kv = std::exp(-0.5 * (delta.array() * r.array()).sum());
        acc += kv * r.dot(model.beta.segment(static_cast<long>(a) * d, d));
    }
    return acc;
}

Vector exact_f_grad(const ExactKernelModel& model, const Vector& x) {
    const int n = static_cast<int>(model.X.rows());
    const int d = static_cast<int>(model.X.cols());
    Vector g = Vector::Zero(d);
    for (int a = 0; a < n; ++a) {
        Vector delta = x - model.X.row(a).transpose();
        Vector r = delta.array() / model.spec.lengthscales.array().square();
        double kv = std::exp(-0.5 * (delta.array() * r.array()).sum());
        Vector ba = model.beta.segment(static_cast<long>(a) * d, d);
        double br = ba.dot(r);
        for (int j = 0; j < d; ++j) {
            double ell2 = model.spec.lengthscales[j] * model.spec.lengthscales[j];
            g[j] += kv * (ba[j] / ell2 - br * r[j]);
        }
    }
    return g;
}

double exact_f_laplacian(const ExactKernelModel& model, const Vector& x) {
    const int n = static_cast<int>(model.X.rows());
    const int d = static_cast<int>(model.X.cols());
    const double E = (1.0 / model.spec.lengthscales.array().square()).sum();
    double acc = 0.0;
    for (int a = 0; a < n; ++a) {
        Vector delta = x - model.X.row(a).transpose();
        Vector r = delta.array() / model.spec.lengthscales.array().square();
        double kv = std::exp(-0.5 * (delta.array() * r.array()).sum());
        double R = r.squaredNorm();
        Vector ba = model.beta.segment(static_cast<long>(a) * d, d);
        for (int i = 0; i < d; ++i) {
            double ell2 = model.spec.lengthscales[i] * model.spec.lengthscales[i];
            acc += ba[i] * (-2.0 * r[i] / ell2 - r[i] * E + r[i] * R) * kv;
        }
    }
    return acc;
}

}  // namespace kdsm
