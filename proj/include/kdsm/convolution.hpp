#pragma once

#include "kdsm/base_density.hpp"
#include "kdsm/features.hpp"

namespace kdsm {

/// Isotropic Gaussian noise N(0, sigma^2 I); sigma = 0 means no noise
/// (ordinary score matching).
struct NoiseSpec {
    double sigma = 0.0;

    void validate() const {
        if (!(sigma >= 0.0)) throw InvalidSpecError("noise sigma must be >= 0");
    }
};

/// Noise-convolved sufficient statistics of the closed-form fit:
/// H = E_eps[dPhi^T dPhi], h = (1/n) E_eps[(d2Phi + q0-score term)]^T 1.
/// H_se/h_se are populated by the Monte-Carlo estimator only.
struct ConvolvedSystem {
    Matrix H;  // M x M, symmetric PSD
    Vector h;  // M
    int n = 0;
    NoiseSpec noise;
    Matrix H_se;  // entrywise MC standard errors (empty for analytic builds)
    Vector h_se;
};

/// Analytic convolution for the RBF map. q0 enters through h only: exact
/// closed forms for uniform and Gaussian q0, first-order Taylor substitution
/// (gradient/Hessian of log q0 at each data point) for the mixture.
ConvolvedSystem build_system_rbf(const FeatureMap& map, const Matrix& X,
                                 const NoiseSpec& noise, const BaseDensity& q0);

/// Entrywise reference implementation with pairwise accumulation over data
/// points; kept for testing the blocked parallel path.
ConvolvedSystem build_system_rbf_serial(const FeatureMap& map, const Matrix& X,
                                        const NoiseSpec& noise, const BaseDensity& q0);

/// Exact convolution for the arc-cosine (p = 2) map under a uniform q0.
/// Includes the convolution of the half-space indicator (Gaussian orthant
/// moments), so it matches the Monte-Carlo oracle at every noise level.
ConvolvedSystem build_system_arccos(const FeatureMap& map, const Matrix& X,
                                    const NoiseSpec& noise,
                                    const BaseDensity& q0 = BaseDensity{});

/// Monte-Carlo convolution oracle: K shared noise draws, unbiased for the
/// analytic system. Populates entrywise standard errors.
ConvolvedSystem mc_convolved_system(const FeatureMap& map, const Matrix& X,
                                    const NoiseSpec& noise, const BaseDensity& q0, int K,
                                    std::uint64_t seed);

}  // namespace kdsm
