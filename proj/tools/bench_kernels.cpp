// Micro-benchmark of the convolved-system builders: blocked/parallel GEMM
// path against the entrywise serial reference, over a few problem sizes.

#include "kdsm/convolution.hpp"
#include "kdsm/synthetic.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>

using namespace kdsm;

namespace {

template <typename F>
double time_call(F&& f, int repeats) {
    using clock = std::chrono::steady_clock;
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        auto t0 = clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(clock::now() - t0).count());
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
    std::cout << "n,M,parallel_s,serial_s,speedup,max_abs_diff\n";

    Synthetic2D dist = make_distribution("cosine");
    for (int n : {200, 800}) {
        for (int M : {64, 256}) {
            Matrix X = synth_sample(dist, n, 42);
            KernelSpec spec;
            spec.lengthscales = Vector::Ones(2);
            FeatureMap map = sample_feature_map(spec, 2, M, 7);
            BaseDensity q0 = fit_q0(BaseDensityKind::Gaussian, X);
            NoiseSpec noise{0.2};

            ConvolvedSystem fast, slow;
            double tp = time_call([&] { fast = build_system_rbf(map, X, noise, q0); },
                                  repeats);
            double ts = time_call(
                [&] { slow = build_system_rbf_serial(map, X, noise, q0); }, repeats);
            double diff = (fast.H - slow.H).cwiseAbs().maxCoeff();
            diff = std::max(diff, (fast.h - slow.h).cwiseAbs().maxCoeff());
            std::cout << n << "," << M << "," << tp << "," << ts << "," << ts / tp << ","
                      << diff << "\n";
        }
    }
    return 0;
}
