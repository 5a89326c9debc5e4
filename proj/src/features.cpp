#include "kdsm/features.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kdsm {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void KernelSpec::validate(int d) const {
    if (family == KernelFamily::Rbf) {
        if (lengthscales.size() != d)
            throw InvalidSpecError("rbf kernel needs one lengthscale per dimension");
        for (int i = 0; i < d; ++i)
            if (!(lengthscales[i] > 0.0))
                throw InvalidSpecError("lengthscales must be positive");
    } else {
        if (arccos_order != 2)
            throw InvalidSpecError("arc-cosine kernel supports order p = 2 only");
    }
}

FeatureMap sample_feature_map(const KernelSpec& spec, int d, int M, std::uint64_t seed) {
    if (M < 1 || d < 1) throw InvalidSpecError("need M >= 1 and d >= 1");
    spec.validate(d);

    FeatureMap map;
    map.M = M;
    map.d = d;
    map.spec = spec;
    map.seed = seed;

    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    map.W.resize(M, d);
    for (int j = 0; j < M; ++j)
        for (int i = 0; i < d; ++i) map.W(j, i) = gauss(rng);
    if (spec.family == KernelFamily::Rbf) {
        for (int i = 0; i < d; ++i) map.W.col(i) /= spec.lengthscales[i];
        std::uniform_real_distribution<double> unif(0.0, kTwoPi);
        map.b.resize(M);
        for (int j = 0; j < M; ++j) map.b[j] = unif(rng);
    }
    return map;
}

DerivativeBatch eval_batch(const FeatureMap& map, const Matrix& X) {
    if (X.cols() != map.d) throw InvalidSpecError("data dimension does not match feature map");
    const int n = static_cast<int>(X.rows());
    const int d = map.d;
    const int M = map.M;

    DerivativeBatch out;
    out.Phi.resize(n, M);
    out.dPhi.resize(static_cast<long>(n) * d, M);
    out.d2Phi.resize(static_cast<long>(n) * d, M);

    if (map.spec.family == KernelFamily::Rbf) {
        const double scale = std::sqrt(2.0 / M);
#pragma omp parallel for schedule(static) num_threads(effective_threads())
        for (int a = 0; a < n; ++a) {
            Vector theta = map.W * X.row(a).transpose() + map.b;
            Vector c = theta.array().cos();
            Vector s = theta.array().sin();
            out.Phi.row(a) = scale * c.transpose();
            for (int i = 0; i < d; ++i) {
                out.dPhi.row(static_cast<long>(a) * d + i) =
                    (-scale) * (map.W.col(i).array() * s.array()).transpose();
                out.d2Phi.row(static_cast<long>(a) * d + i) =
                    (-scale) * (map.W.col(i).array().square() * c.array()).transpose();
            }
        }
    } else {
        const double scale = 1.0 / std::sqrt(static_cast<double>(M));
#pragma omp parallel for schedule(static) num_threads(effective_threads())
        for (int a = 0; a < n; ++a) {
            Vector t = map.W * X.row(a).transpose();
            Vector ind = (t.array() > 0.0).cast<double>();
            out.Phi.row(a) = (scale * ind.array() * t.array().square()).transpose();
            for (int i = 0; i < d; ++i) {
                out.dPhi.row(static_cast<long>(a) * d + i) =
                    (2.0 * scale) * (map.W.col(i).array() * ind.array() * t.array()).transpose();
                out.d2Phi.row(static_cast<long>(a) * d + i) =
                    (2.0 * scale) * (map.W.col(i).array().square() * ind.array()).transpose();
            }
        }
    }
    return out;
}

Vector eval_features(const FeatureMap& map, const Vector& x) {
    if (map.spec.family == KernelFamily::Rbf) {
        Vector theta = map.W * x + map.b;
        return std::sqrt(2.0 / map.M) * theta.array().cos();
    }
    Vector t = map.W * x;
    Vector ind = (t.array() > 0.0).cast<double>();
    return (1.0 / std::sqrt(static_cast<double>(map.M))) * (ind.array() * t.array().square());
}

Matrix eval_feature_grad(const FeatureMap& map, const Vector& x) {
    Matrix g(map.d, map.M);
    if (map.spec.family == KernelFamily::Rbf) {
        const double scale = std::sqrt(2.0 / map.M);
        Vector s = (map.W * x + map.b).array().sin();
        for (int i = 0; i < map.d; ++i)
            g.row(i) = (-scale) * (map.W.col(i).array() * s.array()).transpose();
    } else {
        const double scale = 2.0 / std::sqrt(static_cast<double>(map.M));
        Vector t = map.W * x;
        Vector it = (t.array() > 0.0).cast<double>() * t.array();
        for (int i = 0; i < map.d; ++i)
            g.row(i) = scale * (map.W.col(i).array() * it.array()).transpose();
    }
    return g;
}

Vector eval_feature_laplacian(const FeatureMap& map, const Vector& x) {
    if (map.spec.family == KernelFamily::Rbf) {
        const double scale = std::sqrt(2.0 / map.M);
        Vector c = (map.W * x + map.b).array().cos();
        return (-scale) * (map.W.rowwise().squaredNorm().array() * c.array());
    }
    const double scale = 2.0 / std::sqrt(static_cast<double>(map.M));
    Vector t = map.W * x;
    Vector ind = (t.array() > 0.0).cast<double>();
    return scale * (map.W.rowwise().squaredNorm().array() * ind.array());
}

}  // namespace kdsm
