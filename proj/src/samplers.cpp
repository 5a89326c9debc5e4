#include "kdsm/samplers.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kdsm {

namespace {

// log N(y; x + (eps^2/2) grad(x), eps^2 I) up to the constant (cancels in the ratio)
double proposal_logq(const Vector& y, const Vector& x, const Vector& grad_x, double eps) {
    Vector mean = x + 0.5 * eps * eps * grad_x;
    return -(y - mean).squaredNorm() / (2.0 * eps * eps);
}

}  // namespace

MalaResult mala_sample(const LogDensityTarget& target, const Matrix& init,
                       const MalaConfig& cfg) {
    cfg.validate();
    const int d = static_cast<int>(init.cols());
    const int kept = cfg.chain_length - cfg.burn_in;
    const double eps = cfg.step_size;

    MalaResult out;
    out.samples.resize(static_cast<long>(cfg.n_chains) * kept, d);
    long accepted = 0;
    int stuck = 0, bad_init = 0;  // error flags; exceptions cannot cross the omp region

#pragma omp parallel for schedule(static) reduction(+ : accepted, stuck, bad_init) \
    num_threads(effective_threads())
    for (int chain = 0; chain < cfg.n_chains; ++chain) {
        auto rng = make_rng(derive_seed(cfg.seed, chain));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);

        Vector x = init.row(chain % init.rows()).transpose();
        double lp = target.logpdf(x);
        if (!std::isfinite(lp)) {
            ++bad_init;
            continue;
        }
        Vector g = target.grad(x);

        int consecutive_rejects = 0;
        for (int t = 0; t < cfg.chain_length && !stuck; ++t) {
            Vector xi(d);
            for (int i = 0; i < d; ++i) xi[i] = gauss(rng);
            Vector prop = x + 0.5 * eps * eps * g + eps * xi;
            double lp_prop = target.logpdf(prop);
            bool accept = false;
            if (std::isfinite(lp_prop)) {
                Vector g_prop = target.grad(prop);
                double log_ratio = lp_prop - lp + proposal_logq(x, prop, g_prop, eps) -
                                   proposal_logq(prop, x, g, eps);
                if (std::log(unif(rng)) < log_ratio) {
                    x = prop;
                    lp = lp_prop;
                    g = g_prop;
                    accept = true;
                }
            }
            if (accept) {
                ++accepted;
                consecutive_rejects = 0;
            } else if (++consecutive_rejects >= 1000) {
                ++stuck;
                break;
            }
            if (t >= cfg.burn_in)
                out.samples.row(static_cast<long>(chain) * kept + (t - cfg.burn_in)) =
                    x.transpose();
        }
    }

    if (bad_init > 0)
        throw NumericalError("mala_sample: non-finite log-density at a chain start point");
    if (stuck > 0)
        throw NumericalError("mala_sample: a chain stalled (1000 consecutive rejections)");
    out.acceptance_rate =
        static_cast<double>(accepted) / (static_cast<double>(cfg.n_chains) * cfg.chain_length);
    return out;
}

}  // namespace kdsm
