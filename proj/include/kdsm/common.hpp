#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace kdsm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thrown when a spec/config is structurally invalid (bad sizes, bad parameters).
struct InvalidSpecError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a numerical procedure cannot complete (singular system, NaN loss).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Global execution knobs. Parallel kernels read `threads`; reproducible mode
// forces single-threaded deterministic reductions.
struct Runtime {
    int threads = 0;  // 0 = OpenMP default
    bool reproducible = false;
};

Runtime& runtime();
int effective_threads();

// splitmix64 step, used to derive independent child seeds from a master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

// Pairwise (cascade) summation. Keeps O(log n) error growth for the long
// accumulations over data points in the system builders.
double pairwise_sum(const double* x, std::ptrdiff_t n);
double pairwise_sum(const Vector& v);

}  // namespace kdsm
