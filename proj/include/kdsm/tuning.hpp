#pragma once

#include "kdsm/model.hpp"

#include <cstdint>
#include <vector>

namespace kdsm {

enum class TuneOptimizer { Adam, Grid };

struct TuneConfig {
    int iterations = 60;
    double learning_rate = 0.1;
    int subsample = 512;  // per-iteration draw, split 50/50 train/validation
    TuneOptimizer optimizer = TuneOptimizer::Adam;
    std::vector<double> lambda_grid, sigma_grid;  // grid mode only
    double lambda0 = 1e-3;
    double sigma0 = 0.1;
    bool tune_lengthscales = true;  // rbf only; ignored for arccos
    int normalizer_draws = 20000;   // importance-sampling draws for the final log_Z
    std::uint64_t seed = 0;

    void validate() const {
        if (iterations < 1) throw InvalidSpecError("iterations must be >= 1");
        if (!(learning_rate > 0.0)) throw InvalidSpecError("learning_rate must be positive");
        if (subsample < 20) throw InvalidSpecError("subsample must be >= 20");
        if (optimizer == TuneOptimizer::Grid && (lambda_grid.empty() || sigma_grid.empty()))
            throw InvalidSpecError("grid mode needs non-empty lambda and sigma grids");
    }
};

struct TuneResult {
    double lambda;
    double sigma;
    Vector lengthscales;  // empty for arccos
    DensityModel model;   // refit on the full dataset at the best hyper-parameters
    std::vector<double> loss_trace;  // validated loss per iteration (grid: per cell)
    double best_loss;
};

/// Hyper-parameter search over (lambda, sigma, lengthscales): per iteration,
/// fit the closed form on a train mini-batch and score the validation
/// mini-batch with the score-matching loss. Adam moves the parameters in log
/// space on central finite-difference gradients; grid mode scans exhaustively
/// on a fixed split. The best-validated parameters are refit on all of X and
/// the normalizer is estimated (Gaussian/GMM base only).
TuneResult tune(const Matrix& X, const KernelSpec& spec0, BaseDensityKind q0_kind, int M,
                const TuneConfig& cfg);

struct LossSurface {
    Matrix losses;  // lambda_grid.size() x sigma_grid.size(), row-major
    std::vector<double> lambda_grid, sigma_grid;
};

/// Validated-loss surface over a lambda x sigma grid with one fixed
/// train/validation split; lengthscales held at spec values.
LossSurface loss_surface(const Matrix& X, const KernelSpec& spec, BaseDensityKind q0_kind,
                         int M, const std::vector<double>& lambda_grid,
                         const std::vector<double>& sigma_grid, std::uint64_t seed = 0,
                         int subsample = 512);

}  // namespace kdsm
