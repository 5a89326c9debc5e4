#pragma once

#include "kdsm/convolution.hpp"

namespace kdsm {

struct FitConfig {
    double lambda = 1e-3;
    NoiseSpec noise;
    double jitter = -1.0;  // < 0: default 1e-10 * trace(H) / M

    void validate() const {
        if (!(lambda > 0.0)) throw InvalidSpecError("lambda must be positive");
        noise.validate();
    }
};

enum class Provenance { DsmClosedForm, SmPlain, FiniteK, Nystrom, Taylor };

struct Coefficients {
    Vector b;
    Provenance provenance = Provenance::DsmClosedForm;
};

/// Closed-form denoising score matching fit:
///   b = (1/lambda) [ (H + n lambda I)^{-1} H h - h ].
/// Solved by LDLT with escalating jitter; residual is checked against
/// 1e-8 * ||H h||.
Coefficients fit_dsm(const ConvolvedSystem& system, const FitConfig& cfg);

/// Finite-K Monte-Carlo solution: the MC system with K noise draws pushed
/// through the same algebra.
Coefficients fit_finite_K(const FeatureMap& map, const Matrix& X, const NoiseSpec& noise,
                          const BaseDensity& q0, const FitConfig& cfg, int K,
                          std::uint64_t seed);

/// Plain score matching (sigma = 0 specialization).
Coefficients fit_sm(const FeatureMap& map, const Matrix& X, const BaseDensity& q0,
                    const FitConfig& cfg);

}  // namespace kdsm
