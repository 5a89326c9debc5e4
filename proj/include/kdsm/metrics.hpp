#pragma once

#include "kdsm/common.hpp"
#include "kdsm/model.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace kdsm {

using ScoreFn = std::function<Vector(const Vector&)>;

/// Closure evaluating grad log p of a fitted model (captures a copy).
ScoreFn model_score(const DensityModel& model);

/// (1/2) mean_a ||model_score(x_a) - true_score(x_a)||^2 over the rows of X
/// selected by `mask` (empty mask = all rows). For bounded targets pass a mask
/// restricting to the support.
double fisher_divergence(const ScoreFn& model_score, const ScoreFn& true_score,
                         const Matrix& X, const std::vector<bool>& mask = {});

/// Mean normalized log-density over X; requires model.log_Z.
double avg_log_likelihood(const DensityModel& model, const Matrix& X);

struct FssdResult {
    double statistic;
    double p_value;
    int n_test_locations;
    double kernel_lengthscale;
    int n_bootstrap;
};

/// Finite-set Stein discrepancy with a Gaussian kernel. Test locations are
/// drawn from a Gaussian moment fit of X; the bandwidth is the median pairwise
/// distance of a subsample. The p-value comes from the wild (Rademacher
/// multiplier) bootstrap of the degenerate U-statistic null.
FssdResult fssd_test(const ScoreFn& model_score, const Matrix& X, int n_locations = 5,
                     int n_bootstrap = 1000, std::uint64_t seed = 0);

/// Exact W1 between equal-size empirical measures via min-cost assignment.
/// Larger or unequal inputs are subsampled (seeded, without replacement) to a
/// common size of at most `max_points`.
double wasserstein1(const Matrix& A, const Matrix& B, std::uint64_t seed = 0,
                    int max_points = 2048);

namespace detail {
/// Minimum-cost perfect matching on a square cost matrix (shortest augmenting
/// path). Returns the total cost.
double assignment_cost(const Matrix& cost);

/// Median of the pairwise Euclidean distances among the rows of X.
double median_pairwise_distance(const Matrix& X);
}  // namespace detail

}  // namespace kdsm
