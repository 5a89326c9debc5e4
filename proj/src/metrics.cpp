#include "kdsm/metrics.hpp"

#include "kdsm/base_density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace kdsm {

namespace {

// m indices sampled without replacement from {0..n-1} (partial Fisher-Yates)
std::vector<int> sample_indices(int n, int m, std::uint64_t seed) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = make_rng(seed);
    for (int i = 0; i < m; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(m);
    return idx;
}

Matrix take_rows(const Matrix& X, const std::vector<int>& idx) {
    Matrix out(static_cast<long>(idx.size()), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<long>(i)) = X.row(idx[i]);
    return out;
}

}  // namespace

ScoreFn model_score(const DensityModel& model) {
    return [model](const Vector& x) {
        Matrix g = eval_feature_grad(model.map, x);
        return (g * model.coeffs.b + q0_logpdf_grad_hess(model.q0, x).grad).eval();
    };
}

double fisher_divergence(const ScoreFn& model_score, const ScoreFn& true_score,
                         const Matrix& X, const std::vector<bool>& mask) {
    const int n = static_cast<int>(X.rows());
    if (n < 1) throw InvalidSpecError("fisher_divergence: empty sample");
    if (!mask.empty() && static_cast<int>(mask.size()) != n)
        throw InvalidSpecError("fisher_divergence: mask size mismatch");
    double acc = 0.0;
    long kept = 0;
    for (int a = 0; a < n; ++a) {
        if (!mask.empty() && !mask[a]) continue;
        Vector x = X.row(a).transpose();
        acc += (model_score(x) - true_score(x)).squaredNorm();
        ++kept;
    }
    if (kept == 0) throw InvalidSpecError("fisher_divergence: mask excludes every row");
    return 0.5 * acc / static_cast<double>(kept);
}

double avg_log_likelihood(const DensityModel& model, const Matrix& X) {
    const int n = static_cast<int>(X.rows());
    if (n < 1) throw InvalidSpecError("avg_log_likelihood: empty sample");
    double acc = 0.0;
    for (int a = 0; a < n; ++a)
        acc += log_density(model, X.row(a).transpose(), /*normalized=*/true);
    return acc / n;
}

namespace detail {

double median_pairwise_distance(const Matrix& X) {
    const int n = static_cast<int>(X.rows());
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int a = 0; a < n; ++a)
        for (int c = a + 1; c < n; ++c)
            dists.push_back((X.row(a) - X.row(c)).norm());
    if (dists.empty()) return 1.0;
    auto mid = dists.begin() + static_cast<long>(dists.size()) / 2;
    std::nth_element(dists.begin(), mid, dists.end());
    return *mid;
}

double assignment_cost(const Matrix& cost) {
    // Shortest-augmenting-path assignment with dual potentials (1-based arrays).
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j) total += cost(p[j] - 1, j - 1);
    return total;
}

}  // namespace detail

FssdResult fssd_test(const ScoreFn& model_score, const Matrix& X, int n_locations,
                     int n_bootstrap, std::uint64_t seed) {
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    if (n < 10) throw InvalidSpecError("fssd_test: need at least 10 rows");
    if (n_locations < 1 || n < n_locations)
        throw InvalidSpecError("fssd_test: need more rows than test locations");
    if (n_bootstrap < 1) throw InvalidSpecError("fssd_test: need n_bootstrap >= 1");

    // Bandwidth from a bounded subsample; locations from a Gaussian moment fit.
    Matrix sub = n > 1000 ? take_rows(X, sample_indices(n, 1000, derive_seed(seed, 1))) : X;
    const double ell = std::max(detail::median_pairwise_distance(sub), 1e-12);
    BaseDensity gauss_fit = fit_q0(BaseDensityKind::Gaussian, X);
    Matrix V = q0_sample(gauss_fit, n_locations, derive_seed(seed, 2));  // J x d

    // Stein features tau(x) in R^{d*J}, scaled by 1/sqrt(dJ):
    //   tau[(j,i)] = (s_i(x) k(x,v_j) - (x_i - v_ji)/ell^2 k(x,v_j)) / sqrt(dJ)
    const double inv_ell2 = 1.0 / (ell * ell);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d) * n_locations);
    Matrix tau(n, static_cast<long>(d) * n_locations);
    for (int a = 0; a < n; ++a) {
        Vector x = X.row(a).transpose();
        Vector s = model_score(x);
        for (int j = 0; j < n_locations; ++j) {
            Vector diff = x - V.row(j).transpose();
            double k = std::exp(-0.5 * diff.squaredNorm() * inv_ell2);
            tau.block(a, static_cast<long>(j) * d, 1, d) =
                (scale * k * (s - inv_ell2 * diff)).transpose();
        }
    }

    const Vector col_sums = tau.colwise().sum().transpose();
    const Vector row_sq = tau.rowwise().squaredNorm();
    const double denom = static_cast<double>(n) * (n - 1.0);
    const double stat = (col_sums.squaredNorm() - row_sq.sum()) / denom;

    // Wild bootstrap of the degenerate null with Rademacher multipliers.
    int exceed = 0;
#pragma omp parallel for schedule(static) reduction(+ : exceed) num_threads(effective_threads())
    for (int b = 0; b < n_bootstrap; ++b) {
        auto rng = make_rng(derive_seed(seed, 1000 + b));
        std::bernoulli_distribution coin(0.5);
        Vector sums = Vector::Zero(tau.cols());
        for (int a = 0; a < n; ++a)
            sums += (coin(rng) ? 1.0 : -1.0) * tau.row(a).transpose();
        double stat_b = (sums.squaredNorm() - row_sq.sum()) / denom;
        if (stat_b >= stat) ++exceed;
    }

    FssdResult out;
    out.statistic = stat;
    out.p_value = (1.0 + exceed) / (1.0 + n_bootstrap);
    out.n_test_locations = n_locations;
    out.kernel_lengthscale = ell;
    out.n_bootstrap = n_bootstrap;
    return out;
}

double wasserstein1(const Matrix& A, const Matrix& B, std::uint64_t seed, int max_points) {
    if (A.rows() < 1 || B.rows() < 1) throw InvalidSpecError("wasserstein1: empty sample set");
    if (A.cols() != B.cols()) throw InvalidSpecError("wasserstein1: dimension mismatch");
    const int m = static_cast<int>(
        std::min<long>({A.rows(), B.rows(), static_cast<long>(max_points)}));
    Matrix Am = A.rows() == m ? A : take_rows(A, sample_indices(static_cast<int>(A.rows()), m,
                                                               derive_seed(seed, 1)));
    Matrix Bm = B.rows() == m ? B : take_rows(B, sample_indices(static_cast<int>(B.rows()), m,
                                                               derive_seed(seed, 2)));
    Matrix cost(m, m);
    for (int a = 0; a < m; ++a)
        for (int c = 0; c < m; ++c) cost(a, c) = (Am.row(a) - Bm.row(c)).norm();
    return detail::assignment_cost(cost) / m;
}

}  // namespace kdsm
