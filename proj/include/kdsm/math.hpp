#pragma once

#include <cmath>

namespace kdsm {

inline double norm_pdf(double x) {
    return 0.3989422804014326779399460599344 * std::exp(-0.5 * x * x);
}
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }
inline double norm_sf(double x) { return 0.5 * std::erfc(x * 0.7071067811865475244); }

/// P(X > h, Y > k) for standard bivariate normal with correlation rho.
double bvn_upper_orthant(double h, double k, double rho);

/// E[u v 1(u>0) 1(v>0)] for (u, v) jointly normal with means (a, b),
/// standard deviations (s1, s2) and correlation rho.
double bvn_positive_quadrant_cross_moment(double a, double b, double s1, double s2,
                                          double rho);

}  // namespace kdsm
