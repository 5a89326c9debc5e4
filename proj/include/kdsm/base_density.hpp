#pragma once

#include "kdsm/common.hpp"

#include <cstdint>
#include <vector>

namespace kdsm {

enum class BaseDensityKind { UniformBox, Gaussian, Gmm };

/// Generating density q0 of the kernel exponential family model.
/// Holds the parameters of whichever variant `kind` selects.
struct BaseDensity {
    BaseDensityKind kind = BaseDensityKind::UniformBox;

    // uniform box
    Vector lower, upper;

    // gaussian
    Vector mean;
    Matrix cov;

    // gmm
    Vector weights;
    std::vector<Vector> means;
    std::vector<Matrix> covs;

    int dim() const;
    bool in_support(const Vector& x) const;
};

struct LogPdfDerivs {
    double logpdf;
    Vector grad;
    Matrix hess;
};

/// Fit q0 to data. Uniform: per-dim min/max box with a 5% margin. Gaussian:
/// moment fit with trace jitter. Gmm: maximum-likelihood EM, best of 3
/// seeded restarts, tolerance 1e-6 on mean log-likelihood or 500 iterations.
BaseDensity fit_q0(BaseDensityKind kind, const Matrix& X, int k = 1, std::uint64_t seed = 0);

LogPdfDerivs q0_logpdf_grad_hess(const BaseDensity& q0, const Vector& x);

double q0_logpdf(const BaseDensity& q0, const Vector& x);

/// Draw n i.i.d. samples from q0 (for importance sampling of the normalizer).
Matrix q0_sample(const BaseDensity& q0, int n, std::uint64_t seed);

/// Mean log-likelihood of the data under a gmm; exposed for EM monotonicity checks.
double gmm_mean_loglik(const BaseDensity& q0, const Matrix& X);

/// Single EM run (one restart). `loglik_trace`, when given, receives the
/// per-iteration mean log-likelihood.
BaseDensity fit_gmm_em(const Matrix& X, int k, std::uint64_t seed,
                       std::vector<double>* loglik_trace = nullptr);

}  // namespace kdsm
