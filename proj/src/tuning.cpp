#include "kdsm/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace kdsm {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Box constraints of the log-space search. Sigma gets a positive floor so the
// log parameterization stays defined; sigma = 0 remains reachable via grids.
constexpr double kLambdaLo = 1e-8, kLambdaHi = 10.0;
constexpr double kSigmaLo = 1e-4, kSigmaHi = 5.0;
constexpr double kEllLo = 1e-3, kEllHi = 1e3;

struct Split {
    Matrix train, val;
};

Split make_split(const Matrix& X, int subsample, std::uint64_t seed) {
    const int n = static_cast<int>(X.rows());
    const int m = std::min(n, subsample);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = make_rng(seed);
    for (int i = 0; i < m; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    const int nt = m / 2, nv = m - nt;
    Split s;
    s.train.resize(nt, X.cols());
    s.val.resize(nv, X.cols());
    for (int i = 0; i < nt; ++i) s.train.row(i) = X.row(idx[i]);
    for (int i = 0; i < nv; ++i) s.val.row(i) = X.row(idx[nt + i]);
    return s;
}

double fit_and_validate(const Split& split, const KernelSpec& spec0,
                        BaseDensityKind q0_kind, int M, double lambda, double sigma,
                        const Vector& ell, std::uint64_t map_seed) {
    const int d = static_cast<int>(split.train.cols());
    KernelSpec spec = spec0;
    if (spec.family == KernelFamily::Rbf && ell.size() > 0) spec.lengthscales = ell;
    spec.validate(d);
    FeatureMap map = sample_feature_map(spec, d, M, map_seed);
    BaseDensity q0 = fit_q0(q0_kind, split.train);
    NoiseSpec noise{sigma};
    FitConfig fc;
    fc.lambda = lambda;
    fc.noise = noise;
    try {
        ConvolvedSystem sys = spec.family == KernelFamily::Rbf
                                  ? build_system_rbf(map, split.train, noise, q0)
                                  : build_system_arccos(map, split.train, noise, q0);
        DensityModel model{fit_dsm(sys, fc), map, q0, std::nullopt};
        double loss = validation_sm_loss(model, split.val).total;
        return std::isfinite(loss) ? loss : kNan;
    } catch (const NumericalError&) {
        return kNan;
    }
}

DensityModel final_refit(const Matrix& X, const KernelSpec& spec0, BaseDensityKind q0_kind,
                         int M, double lambda, double sigma, const Vector& ell,
                         std::uint64_t map_seed, int normalizer_draws,
                         std::uint64_t z_seed) {
    const int d = static_cast<int>(X.cols());
    KernelSpec spec = spec0;
    if (spec.family == KernelFamily::Rbf && ell.size() > 0) spec.lengthscales = ell;
    FeatureMap map = sample_feature_map(spec, d, M, map_seed);
    BaseDensity q0 = fit_q0(q0_kind, X);
    NoiseSpec noise{sigma};
    FitConfig fc;
    fc.lambda = lambda;
    fc.noise = noise;
    ConvolvedSystem sys = spec.family == KernelFamily::Rbf
                              ? build_system_rbf(map, X, noise, q0)
                              : build_system_arccos(map, X, noise, q0);
    DensityModel model{fit_dsm(sys, fc), map, q0, std::nullopt};
    if (q0.kind != BaseDensityKind::UniformBox && normalizer_draws > 0)
        model.log_Z = estimate_log_Z(model, normalizer_draws, z_seed).log_Z;
    return model;
}

}  // namespace

TuneResult tune(const Matrix& X, const KernelSpec& spec0, BaseDensityKind q0_kind, int M,
                const TuneConfig& cfg) {
    cfg.validate();
    if (X.rows() < 20) throw InvalidSpecError("tune: need at least 20 rows to split");
    const std::uint64_t map_seed = derive_seed(cfg.seed, 777);
    const bool rbf = spec0.family == KernelFamily::Rbf;

    TuneResult out;
    out.best_loss = std::numeric_limits<double>::infinity();

    if (cfg.optimizer == TuneOptimizer::Grid) {
        Split split = make_split(X, cfg.subsample, derive_seed(cfg.seed, 0));
        double best_lambda = cfg.lambda_grid.front(), best_sigma = cfg.sigma_grid.front();
        for (double lam : cfg.lambda_grid) {
            for (double sig : cfg.sigma_grid) {
                double loss = fit_and_validate(split, spec0, q0_kind, M, lam, sig,
                                               spec0.lengthscales, map_seed);
                out.loss_trace.push_back(loss);
                if (std::isfinite(loss) && loss < out.best_loss) {
                    out.best_loss = loss;
                    best_lambda = lam;
                    best_sigma = sig;
                }
            }
        }
        if (!std::isfinite(out.best_loss))
            throw NumericalError("tune: every grid cell produced a non-finite loss");
        out.lambda = best_lambda;
        out.sigma = best_sigma;
        out.lengthscales = rbf ? spec0.lengthscales : Vector();
        out.model = final_refit(X, spec0, q0_kind, M, out.lambda, out.sigma,
                                out.lengthscales, map_seed, cfg.normalizer_draws,
                                derive_seed(cfg.seed, 999));
        return out;
    }

    // Adam in log space over (lambda, sigma[, lengthscales]).
    const int n_ell = rbf && cfg.tune_lengthscales
                          ? static_cast<int>(spec0.lengthscales.size())
                          : 0;
    const int P = 2 + n_ell;
    Vector theta(P);
    theta[0] = std::log(std::clamp(cfg.lambda0, kLambdaLo, kLambdaHi));
    theta[1] = std::log(std::clamp(cfg.sigma0, kSigmaLo, kSigmaHi));
    for (int i = 0; i < n_ell; ++i)
        theta[2 + i] = std::log(std::clamp(spec0.lengthscales[i], kEllLo, kEllHi));

    auto clamp_theta = [&](Vector& th) {
        th[0] = std::clamp(th[0], std::log(kLambdaLo), std::log(kLambdaHi));
        th[1] = std::clamp(th[1], std::log(kSigmaLo), std::log(kSigmaHi));
        for (int i = 0; i < n_ell; ++i)
            th[2 + i] = std::clamp(th[2 + i], std::log(kEllLo), std::log(kEllHi));
    };
    auto unpack_ell = [&](const Vector& th) {
        Vector ell = spec0.lengthscales;
        for (int i = 0; i < n_ell; ++i) ell[i] = std::exp(th[2 + i]);
        return ell;
    };
    auto eval = [&](const Vector& th, const Split& split) {
        return fit_and_validate(split, spec0, q0_kind, M, std::exp(th[0]), std::exp(th[1]),
                                unpack_ell(th), map_seed);
    };

    Vector m_adam = Vector::Zero(P), v_adam = Vector::Zero(P);
    const double beta1 = 0.9, beta2 = 0.999, eps_adam = 1e-8;
    double step_scale = 1.0;
    Vector theta_prev = theta;
    Vector theta_best = theta;

    for (int t = 0; t < cfg.iterations; ++t) {
        Split split = make_split(X, cfg.subsample, derive_seed(cfg.seed, 100 + t));
        double loss = eval(theta, split);
        if (t == 0 && !std::isfinite(loss))
            throw NumericalError("tune: non-finite validation loss at initialization");
        if (!std::isfinite(loss)) {
            // reject the step that led here and retry more cautiously
            theta = theta_prev;
            step_scale *= 0.5;
            out.loss_trace.push_back(kNan);
            continue;
        }
        out.loss_trace.push_back(loss);
        if (loss < out.best_loss) {
            out.best_loss = loss;
            theta_best = theta;
        }

        Vector grad = Vector::Zero(P);
        for (int i = 0; i < P; ++i) {
            double delta = 1e-3 * std::max(std::abs(theta[i]), 1.0);
            Vector tp = theta, tm = theta;
            tp[i] += delta;
            tm[i] -= delta;
            clamp_theta(tp);
            clamp_theta(tm);
            double span = tp[i] - tm[i];
            if (span <= 0.0) continue;  // pinned at both box faces
            double lp = eval(tp, split), lm = eval(tm, split);
            if (std::isfinite(lp) && std::isfinite(lm)) grad[i] = (lp - lm) / span;
        }

        theta_prev = theta;
        m_adam = beta1 * m_adam + (1.0 - beta1) * grad;
        v_adam = beta2 * v_adam + (1.0 - beta2) * grad.cwiseProduct(grad);
        double bc1 = 1.0 - std::pow(beta1, t + 1);
        double bc2 = 1.0 - std::pow(beta2, t + 1);
        for (int i = 0; i < P; ++i) {
            double mh = m_adam[i] / bc1;
            double vh = v_adam[i] / bc2;
            theta[i] -= step_scale * cfg.learning_rate * mh / (std::sqrt(vh) + eps_adam);
        }
        clamp_theta(theta);
    }

    out.lambda = std::exp(theta_best[0]);
    out.sigma = std::exp(theta_best[1]);
    out.lengthscales = rbf ? unpack_ell(theta_best) : Vector();
    out.model = final_refit(X, spec0, q0_kind, M, out.lambda, out.sigma, out.lengthscales,
                            map_seed, cfg.normalizer_draws, derive_seed(cfg.seed, 999));
    return out;
}

LossSurface loss_surface(const Matrix& X, const KernelSpec& spec, BaseDensityKind q0_kind,
                         int M, const std::vector<double>& lambda_grid,
                         const std::vector<double>& sigma_grid, std::uint64_t seed,
                         int subsample) {
    if (lambda_grid.empty() || sigma_grid.empty())
        throw InvalidSpecError("loss_surface: grids must be non-empty");
    Split split = make_split(X, subsample, derive_seed(seed, 0));
    const std::uint64_t map_seed = derive_seed(seed, 777);
    LossSurface out;
    out.lambda_grid = lambda_grid;
    out.sigma_grid = sigma_grid;
    out.losses.resize(static_cast<long>(lambda_grid.size()),
                      static_cast<long>(sigma_grid.size()));
    for (std::size_t r = 0; r < lambda_grid.size(); ++r)
        for (std::size_t c = 0; c < sigma_grid.size(); ++c)
            out.losses(static_cast<long>(r), static_cast<long>(c)) =
                fit_and_validate(split, spec, q0_kind, M, lambda_grid[r], sigma_grid[c],
                                 spec.lengthscales, map_seed);
    return out;
}

}  // namespace kdsm
