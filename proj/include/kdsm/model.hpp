#pragma once

#include "kdsm/base_density.hpp"
#include "kdsm/features.hpp"
#include "kdsm/solver.hpp"

#include <optional>

namespace kdsm {

/// Fitted density: log p(x) = phi(x)^T b + log q0(x) (- log_Z when normalized).
struct DensityModel {
    Coefficients coeffs;
    FeatureMap map;
    BaseDensity q0;
    std::optional<double> log_Z;
    // per-column z-score parameters when the training data was standardized;
    // empty otherwise. Evaluation happens in the standardized coordinates.
    Vector standardize_mean, standardize_scale;

    void validate() const {
        if (coeffs.b.size() != map.M)
            throw InvalidSpecError("coefficient length does not match feature count");
    }
};

double log_density(const DensityModel& model, const Vector& x, bool normalized = false);

/// f(x) = phi(x)^T b, the natural-parameter part of the log-density.
double f_value(const DensityModel& model, const Vector& x);

struct ScoreBatch {
    Matrix score;      // n x d rows of grad log p
    Vector laplacian;  // n
};

ScoreBatch score_and_laplacian(const DensityModel& model, const Matrix& X);

struct LogZEstimate {
    double log_Z;
    double standard_error;  // of the log estimate (delta method)
};

/// Importance-sampling normalizer: log (1/n_z) sum exp(f(x_i)), x_i ~ q0,
/// with max-subtraction. `literal_integrand` evaluates the f/q0-in-the-sum
/// variant kept behind a debug flag for comparison.
LogZEstimate estimate_log_Z(const DensityModel& model, int n_z, std::uint64_t seed,
                            bool literal_integrand = false);

struct ValidationLoss {
    double total;    // b-dependent part + q0 part
    double fit_part; // 1^T d2Phi b + 1/2 b^T dPhi^T dPhi b + b^T dPhi^T grad log q0, / n
    double q0_part;  // mean of (laplacian log q0 + 1/2 ||grad log q0||^2)
};

/// Ordinary (sigma = 0) score-matching loss on a validation batch. The
/// b-independent q0 terms are included so losses stay comparable across q0
/// and kernel hyper-parameter choices.
ValidationLoss validation_sm_loss(const DensityModel& model, const Matrix& X_v);

}  // namespace kdsm
