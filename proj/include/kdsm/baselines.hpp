#pragma once

#include "kdsm/base_density.hpp"
#include "kdsm/features.hpp"
#include "kdsm/solver.hpp"

#include <cstdint>

namespace kdsm {

/// Nystrom score-matching model: f(x) = sum_p alpha_p k(z_p, x) over an
/// inducing subset of the training points, flat base density.
struct NystromModel {
    Matrix Z;  // m x d inducing points
    KernelSpec spec;
    Vector alpha;
};

/// The Nystrom normal-equation blocks: G(p,q) = sum_a sum_i
/// E_eps[d_i k(z_p, x_a+eps) d_i k(z_q, x_a+eps)] and
/// g(p) = (1/n) sum_a E_eps[Lap_x k(z_p, x_a+eps)], both in closed form
/// (Gaussian-Gaussian convolutions rescale the bandwidth).
struct NystromSystem {
    Matrix G;  // m x m
    Vector g;  // m
    int n = 0;
};

NystromSystem build_nystrom_system(const Matrix& X, const Matrix& Z, const KernelSpec& spec,
                                   const NoiseSpec& noise);

/// Monte-Carlo oracle for the Nystrom blocks (shared noise draws, entrywise
/// standard errors in G_se/g_se).
struct NystromMcSystem {
    Matrix G, G_se;
    Vector g, g_se;
};
NystromMcSystem mc_nystrom_system(const Matrix& X, const Matrix& Z, const KernelSpec& spec,
                                  const NoiseSpec& noise, int K, std::uint64_t seed);

/// alpha = -n (G + n lambda K11)^{-1} g with escalating jitter on K11.
/// Inducing points: uniform random subset of X without replacement.
NystromModel fit_nystrom(const Matrix& X, const KernelSpec& spec, int m_inducing,
                         double lambda, const NoiseSpec& noise, std::uint64_t seed);

double nystrom_f(const NystromModel& model, const Vector& x);
Vector nystrom_f_grad(const NystromModel& model, const Vector& x);
double nystrom_f_laplacian(const NystromModel& model, const Vector& x);

/// Second-order noise expansion of the denoising loss around sigma = 0:
/// J_eps ~ J + (sigma^2/2) mean[ Lap^2 u + ||Hess u||_F^2 + grad u . grad Lap u ],
/// u = phi^T b + log q0. Linear-in-b features make every term at most
/// quadratic; the assembled (H_T, h_T, const) system is solved like the
/// closed form. RBF map with uniform or Gaussian q0 only.
struct TaylorSystem {
    Matrix H;       // M x M (summed over points, matching the solver convention)
    Vector h;       // M
    double c0 = 0;  // b-independent part of the loss
    int n = 0;
};

TaylorSystem build_taylor_system(const FeatureMap& map, const Matrix& X,
                                 const BaseDensity& q0, double sigma);

Coefficients taylor_dsm_fit(const FeatureMap& map, const Matrix& X, const BaseDensity& q0,
                            double lambda, double sigma);

/// The assembled quadratic evaluated at b: c0 + h^T b + (1/2n) b^T H b.
double taylor_loss(const TaylorSystem& sys, const Vector& b);

/// Exact kernel score matching in the span of the derivative sections
/// {d_i k(x_a, .)}: beta solves the regularized nd x nd system.
struct ExactKernelModel {
    Matrix X;  // n x d centers
    KernelSpec spec;
    Vector beta;  // length n*d, entry (a*d + i)
};

ExactKernelModel fit_exact_kernel(const Matrix& X, const KernelSpec& spec, double lambda,
                                  const BaseDensity& q0);

double exact_f(const ExactKernelModel& model, const Vector& x);
Vector exact_f_grad(const ExactKernelModel& model, const Vector& x);
double exact_f_laplacian(const ExactKernelModel& model, const Vector& x);

}  // namespace kdsm
