#include <cmath>
#include <numbers>

#include "beebo/acquisition.hpp"
#include "beebo/errors.hpp"
#include "beebo/quasi_random.hpp"

namespace beebo {

QucbObjective::QucbObjective(const GpModel& model, Eigen::Index batch_size, double kappa,
                             int mc_samples, std::uint64_t seed)
    : model_(&model), kappa_(kappa) {
    if (mc_samples < 1) throw InvalidArgument("qucb: mc_samples must be >= 1");
    if (!(kappa >= 0.0)) throw InvalidArgument("qucb: kappa must be nonnegative");
    if (batch_size < 1) throw InvalidArgument("qucb: batch must contain at least one point");
    base_samples_ = sobol_normal(mc_samples, batch_size, seed);
}

QucbEvaluation QucbObjective::evaluate(const Matrix& batch, bool with_gradient) const {
    if (batch.rows() != base_samples_.cols()) {
        throw InvalidArgument("qucb: batch size differs from the base samples");
    }
    const auto ws = posterior_workspace(*model_, batch);
    const auto q = batch.rows();
    const auto s_count = base_samples_.rows();
    const Vector& mu = ws.posterior.mean;
    const double scale = std::sqrt(kappa_ * std::numbers::pi / 2.0);
    const double inv_s = 1.0 / static_cast<double>(s_count);

    Matrix lower;
    if (kappa_ > 0.0) {
        lower = cholesky_with_jitter(ws.posterior.covariance, model_->kernel().amplitude).lower;
    }

    QucbEvaluation out;
    Vector mean_bar = Vector::Zero(q);
    Matrix lower_bar = Matrix::Zero(q, q);
    double total = 0.0;
    Vector draw(q);
    for (Eigen::Index s = 0; s < s_count; ++s) {
        Eigen::Index best = 0;
        double best_value;
        if (kappa_ > 0.0) {
            draw.noalias() = lower.triangularView<Eigen::Lower>() * base_samples_.row(s).transpose();
            best_value = mu(0) + scale * std::abs(draw(0));
            for (Eigen::Index i = 1; i < q; ++i) {
                const double v = mu(i) + scale * std::abs(draw(i));
                if (v > best_value) {
                    best_value = v;
                    best = i;
                }
            }
        } else {
            best_value = mu.maxCoeff(&best);
        }
        total += best_value;
        if (with_gradient) {
            mean_bar(best) += inv_s;
            if (kappa_ > 0.0) {
                const double sign = draw(best) >= 0.0 ? 1.0 : -1.0;
                lower_bar.row(best).head(best + 1) +=
                    (scale * sign * inv_s) * base_samples_.row(s).head(best + 1);
            }
        }
    }
    out.value = total * inv_s;
    if (!std::isfinite(out.value)) throw NumericalError("qucb: non-finite value");

    if (with_gradient) {
        Matrix cov_bar = Matrix::Zero(q, q);
        if (kappa_ > 0.0) {
            // Cholesky adjoint: C_bar = L^{-T} Phi(L^T L_bar) L^{-1}
            Matrix p = lower.transpose() * lower_bar;
            p = p.triangularView<Eigen::Lower>();
            p.diagonal() *= 0.5;
            const Matrix upper = lower.transpose();
            const Matrix tmp = upper.triangularView<Eigen::Upper>().solve(p); // L^{-T} P
            cov_bar = upper.triangularView<Eigen::Upper>().solve(tmp.transpose()).transpose();
        }
        out.gradient = posterior_backprop(*model_, batch, ws, mean_bar, cov_bar);
    }
    return out;
}

double qucb_score(const GpModel& model, const Matrix& batch, double kappa, int mc_samples,
                  std::uint64_t seed) {
    return QucbObjective(model, batch.rows(), kappa, mc_samples, seed).evaluate(batch, false).value;
}

} // namespace beebo
