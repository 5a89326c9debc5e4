#pragma once

#include "kdsm/common.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace kdsm {

/// A named 2D ground-truth distribution with exact sampler, log-pdf, and score.
/// Families with bounded support expose a support predicate; the score is
/// defined on the interior.
struct Synthetic2D {
    std::string name;
    bool bounded = false;
    std::function<double(const Vector&)> logpdf;
    std::function<Vector(const Vector&)> score;
    std::function<Matrix(int, std::uint64_t)> sampler;  // (n, seed) -> n x 2
    std::function<bool(const Vector&)> support;         // always-true for full-plane
};

/// Parameter overrides; every family default can be replaced.
using SynthParams = std::map<std::string, double>;

Synthetic2D make_distribution(const std::string& name, const SynthParams& params = {});

Matrix synth_sample(const Synthetic2D& dist, int n, std::uint64_t seed);

/// The family names the generator knows about.
const std::vector<std::string>& synthetic_family_names();

}  // namespace kdsm
