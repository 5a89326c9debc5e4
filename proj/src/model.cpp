#include "kdsm/model.hpp"

#include <cmath>
#include <limits>

namespace kdsm {

double f_value(const DensityModel& model, const Vector& x) {
    return eval_features(model.map, x).dot(model.coeffs.b);
}

double log_density(const DensityModel& model, const Vector& x, bool normalized) {
    model.validate();
    if (normalized) {
        if (model.q0.kind == BaseDensityKind::UniformBox)
            throw InvalidSpecError("normalized evaluation unsupported for uniform q0");
        if (!model.log_Z) throw InvalidSpecError("model has no normalizer estimate");
    }
    double v = f_value(model, x) + q0_logpdf(model.q0, x);
    if (normalized) v -= *model.log_Z;
    return v;
}

ScoreBatch score_and_laplacian(const DensityModel& model, const Matrix& X) {
    model.validate();
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    ScoreBatch out;
    out.score.resize(n, d);
    out.laplacian.resize(n);
    for (int a = 0; a < n; ++a) {
        Vector x = X.row(a).transpose();
        Matrix g = eval_feature_grad(model.map, x);  // d x M
        LogPdfDerivs q = q0_logpdf_grad_hess(model.q0, x);
        out.score.row(a) = (g * model.coeffs.b + q.grad).transpose();
        out.laplacian[a] =
            eval_feature_laplacian(model.map, x).dot(model.coeffs.b) + q.hess.trace();
    }
    return out;
}

LogZEstimate estimate_log_Z(const DensityModel& model, int n_z, std::uint64_t seed,
                            bool literal_integrand) {
    model.validate();
    if (model.q0.kind == BaseDensityKind::UniformBox)
        throw InvalidSpecError("normalizer estimation unsupported for uniform q0");
    if (n_z < 1) throw InvalidSpecError("need n_z >= 1");

    Matrix X = q0_sample(model.q0, n_z, seed);
    Vector f(n_z);
    for (int a = 0; a < n_z; ++a) f[a] = f_value(model, X.row(a).transpose());

    if (literal_integrand) {
        // The f/q0-in-the-sum variant (debug only): (1/n_z) sum f(x_i).
        LogZEstimate out;
        out.log_Z = std::log(std::abs(f.mean()));
        out.standard_error = std::numeric_limits<double>::quiet_NaN();
        return out;
    }

    double m = f.maxCoeff();
    if (!std::isfinite(m)) throw NumericalError("estimate_log_Z: non-finite weights");
    Vector w = (f.array() - m).exp();
    double mean = w.mean();
    if (!(mean > 0.0)) throw NumericalError("estimate_log_Z: all weights vanished");

    LogZEstimate out;
    out.log_Z = m + std::log(mean);
    if (n_z > 1) {
        double var = (w.array() - mean).square().sum() / (n_z - 1.0);
        out.standard_error = std::sqrt(var / n_z) / mean;  // SE of log via delta method
    } else {
        out.standard_error = std::numeric_limits<double>::infinity();
    }
    return out;
}

ValidationLoss validation_sm_loss(const DensityModel& model, const Matrix& X_v) {
    model.validate();
    const int n = static_cast<int>(X_v.rows());
    const int d = static_cast<int>(X_v.cols());
    if (n < 1) throw InvalidSpecError("validation batch is empty");

    DerivativeBatch batch = eval_batch(model.map, X_v);
    const Vector& b = model.coeffs.b;

    Vector gvec(static_cast<long>(n) * d);
    double q0_part = 0.0;
    for (int a = 0; a < n; ++a) {
        LogPdfDerivs q = q0_logpdf_grad_hess(model.q0, X_v.row(a).transpose());
        gvec.segment(static_cast<long>(a) * d, d) = q.grad;
        q0_part += q.hess.trace() + 0.5 * q.grad.squaredNorm();
    }
    q0_part /= n;

    Vector dPhib = batch.dPhi * b;
    double fit = batch.d2Phi.colwise().sum().dot(b) + 0.5 * dPhib.squaredNorm() +
                 dPhib.dot(gvec);
    fit /= n;

    ValidationLoss out;
    out.fit_part = fit;
    out.q0_part = q0_part;
    out.total = fit + q0_part;
    return out;
}

}  // namespace kdsm
