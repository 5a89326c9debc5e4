#include "kdsm/solver.hpp"

#include <Eigen/Cholesky>

namespace kdsm {

Coefficients fit_dsm(const ConvolvedSystem& system, const FitConfig& cfg) {
    cfg.validate();
    const int M = static_cast<int>(system.H.rows());
    const double nl = system.n * cfg.lambda;

    double jitter = cfg.jitter >= 0.0 ? cfg.jitter : 1e-10 * system.H.trace() / M;
    Vector rhs = system.H * system.h;

    Vector x;
    bool ok = false;
    for (int attempt = 0; attempt < 3; ++attempt) {
        Matrix lhs = system.H + (nl + jitter) * Matrix::Identity(M, M);
        Eigen::LDLT<Matrix> ldlt(lhs);
        if (ldlt.info() == Eigen::Success) {
            x = ldlt.solve(rhs);
            double res = ((system.H + nl * Matrix::Identity(M, M)) * x - rhs).norm();
            if (res <= 1e-8 * rhs.norm() + 1e-14) {
                ok = true;
                break;
            }
        }
        jitter = jitter > 0.0 ? jitter * 10.0 : 1e-12 * (1.0 + system.H.trace() / M);
    }
    if (!ok) throw NumericalError("fit_dsm: singular system after jitter escalation");

    Coefficients out;
    out.b = (x - system.h) / cfg.lambda;
    out.provenance = system.noise.sigma == 0.0 ? Provenance::SmPlain : Provenance::DsmClosedForm;
    return out;
}

Coefficients fit_finite_K(const FeatureMap& map, const Matrix& X, const NoiseSpec& noise,
                          const BaseDensity& q0, const FitConfig& cfg, int K,
                          std::uint64_t seed) {
    ConvolvedSystem sys = mc_convolved_system(map, X, noise, q0, K, seed);
    Coefficients out = fit_dsm(sys, cfg);
    out.provenance = Provenance::FiniteK;
    return out;
}

Coefficients fit_sm(const FeatureMap& map, const Matrix& X, const BaseDensity& q0,
                    const FitConfig& cfg) {
    NoiseSpec zero;
    ConvolvedSystem sys = map.spec.family == KernelFamily::Rbf
                              ? build_system_rbf(map, X, zero, q0)
                              : build_system_arccos(map, X, zero, q0);
    FitConfig c = cfg;
    c.noise = zero;
    Coefficients out = fit_dsm(sys, c);
    out.provenance = Provenance::SmPlain;
    return out;
}

}  // namespace kdsm
