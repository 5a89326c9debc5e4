#pragma once

#include "kdsm/common.hpp"

#include <cstdint>

namespace kdsm {

enum class KernelFamily { Rbf, ArcCos };

/// Kernel hyper-parameters. For the RBF family `lengthscales` holds one
/// positive scale per input dimension; the arc-cosine family is fixed at
/// order p = 2 and carries no lengthscales.
struct KernelSpec {
    KernelFamily family = KernelFamily::Rbf;
    Vector lengthscales;  // size d for rbf, unused for arccos
    int arccos_order = 2;

    void validate(int d) const;
};

/// Random feature map. RBF: phi(x) = sqrt(2/M) cos(W x + b) with rows of W
/// drawn from N(0, diag(1/l^2)) and b ~ U[0, 2pi). Arc-cosine (p = 2):
/// phi_j(x) = (1/sqrt(M)) (w_j^T x)^2 1(w_j^T x > 0), W rows ~ N(0, I).
/// Reconstruction from (spec, d, M, seed) is bit-deterministic; lengthscales
/// rescale a fixed standard-normal draw so the map varies smoothly with l.
struct FeatureMap {
    Matrix W;  // M x d
    Vector b;  // M (empty for arccos)
    int M = 0;
    int d = 0;
    KernelSpec spec;
    std::uint64_t seed = 0;
};

/// Feature values and coordinate derivatives for a data batch.
/// Row (a*d + i) of dPhi/d2Phi holds d/dx_i phi^T / d^2/dx_i^2 phi^T at x_a.
struct DerivativeBatch {
    Matrix Phi;    // n x M
    Matrix dPhi;   // (n*d) x M
    Matrix d2Phi;  // (n*d) x M
};

FeatureMap sample_feature_map(const KernelSpec& spec, int d, int M, std::uint64_t seed);

DerivativeBatch eval_batch(const FeatureMap& map, const Matrix& X);

/// Feature vector at a single point.
Vector eval_features(const FeatureMap& map, const Vector& x);

/// Gradient contribution: d x M matrix with row i = d/dx_i phi^T(x).
Matrix eval_feature_grad(const FeatureMap& map, const Vector& x);

/// Laplacian contribution: sum_i d^2/dx_i^2 phi(x), length M.
Vector eval_feature_laplacian(const FeatureMap& map, const Vector& x);

}  // namespace kdsm
