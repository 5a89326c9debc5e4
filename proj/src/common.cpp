#include "kdsm/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kdsm {

Runtime& runtime() {
    static Runtime rt;
    return rt;
}

int effective_threads() {
    if (runtime().reproducible) return 1;
    if (runtime().threads > 0) return runtime().threads;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double pairwise_sum(const double* x, std::ptrdiff_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::ptrdiff_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::ptrdiff_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

double pairwise_sum(const Vector& v) { return pairwise_sum(v.data(), v.size()); }

}  // namespace kdsm
