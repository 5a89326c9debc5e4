#pragma once

#include "kdsm/common.hpp"

#include <cstdint>
#include <functional>

namespace kdsm {

struct MalaConfig {
    double step_size = 0.1;
    int chain_length = 10000;
    int burn_in = 5000;
    int n_chains = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(step_size > 0.0)) throw InvalidSpecError("step_size must be positive");
        if (burn_in >= chain_length)
            throw InvalidSpecError("burn_in must be smaller than chain_length");
        if (n_chains < 1) throw InvalidSpecError("need at least one chain");
    }
};

/// Unnormalized target: log density value and its gradient.
struct LogDensityTarget {
    std::function<double(const Vector&)> logpdf;
    std::function<Vector(const Vector&)> grad;
};

struct MalaResult {
    Matrix samples;  // (chains * kept) x d
    double acceptance_rate;
};

/// Metropolis-adjusted Langevin: proposal x' = x + (eps^2/2) grad log p(x)
/// + eps xi, accepted with the asymmetric-Gaussian Metropolis ratio.
/// `init` rows are per-chain starting points (one row reused if fewer).
MalaResult mala_sample(const LogDensityTarget& target, const Matrix& init,
                       const MalaConfig& cfg);

}  // namespace kdsm
