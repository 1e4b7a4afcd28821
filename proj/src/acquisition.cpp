#include "beebo/acquisition.hpp"

#include <cmath>

#include "beebo/errors.hpp"

namespace beebo {

double SoftmaxBeta::resolve(double amplitude) const {
    if (kind == Kind::fixed) return value;
    if (!(amplitude > 0.0)) throw InvalidArgument("SoftmaxBeta: amplitude must be positive");
    return 1.0 / std::sqrt(amplitude);
}

void AcquisitionConfig::validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw InvalidArgument("AcquisitionConfig: temperature must be finite and nonnegative");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidArgument("AcquisitionConfig: alpha must lie in (0, 1)");
    }
    if (beta.kind == SoftmaxBeta::Kind::fixed && !(beta.value >= 0.0)) {
        throw InvalidArgument("AcquisitionConfig: fixed beta must be nonnegative");
    }
    if (mc_samples < 1) {
        throw InvalidArgument("AcquisitionConfig: mc_samples must be positive");
    }
}

double mean_energy(const Vector& mean) { return -mean.sum(); }

double logdet_svd(const Matrix& m) {
    if (m.rows() != m.cols()) throw InvalidArgument("logdet_svd: matrix must be square");
    if (!m.allFinite()) throw NumericalError("logdet_svd: non-finite matrix");
    Eigen::BDCSVD<Matrix> svd(m);
    const Vector& s = svd.singularValues();
    if ((s.array() <= 0.0).any()) {
        throw NumericalError("logdet_svd: singular matrix");
    }
    const double out = s.array().log().sum();
    if (!std::isfinite(out)) throw NumericalError("logdet_svd: non-finite log-determinant");
    return out;
}

double information_gain(const Matrix& covariance, const Matrix& augmented_covariance) {
    if (covariance.rows() != augmented_covariance.rows() || covariance.cols() != augmented_covariance.cols()) {
        throw InvalidArgument("information_gain: covariance shapes differ");
    }
    return 0.5 * logdet_svd(covariance) - 0.5 * logdet_svd(augmented_covariance);
}

namespace {

BeeboEvaluation evaluate_impl(const GpModel& model, const Matrix& batch, const NoiseEvaluation& noise,
                              bool noise_has_gradient, const AcquisitionConfig& config,
                              bool with_gradient) {
    config.validate();
    const auto ws = posterior_workspace(model, batch);
    const auto q = batch.rows();
    const Vector& mu = ws.posterior.mean;
    const Matrix& cov = ws.posterior.covariance;

    BeeboEvaluation out;
    Vector mean_bar;
    Matrix cov_bar;
    if (config.variant == EnergyVariant::mean) {
        out.energy_term = mu.sum();
        if (with_gradient) {
            mean_bar = Vector::Ones(q);
            cov_bar = Matrix::Zero(q, q);
        }
    } else {
        const double beta = config.beta.resolve(model.kernel().amplitude);
        const double scale = static_cast<double>(q);
        if (with_gradient) {
            auto sg = softmax_expectation_gradient(mu, cov, beta, config.y_max_reference, config.alpha);
            out.energy_term = scale * sg.value;
            out.beta = sg.expansion.beta;
            out.beta_clamped = sg.expansion.beta_clamped;
            mean_bar = scale * sg.mean_gradient;
            cov_bar = scale * sg.covariance_gradient;
        } else {
            auto se = softmax_expectation(mu, cov, beta, config.y_max_reference, config.alpha);
            out.energy_term = scale * se.value;
            out.beta = se.expansion.beta;
            out.beta_clamped = se.expansion.beta_clamped;
        }
    }

    Vector noise_bar;
    if (config.temperature > 0.0) {
        const auto block = augment_block(model, batch, noise.variance, ws);
        Matrix aug;
        if (!block.refactorized) {
            const Matrix g = block.lower.triangularView<Eigen::Lower>().solve(cov);
            aug = cov;
            aug.noalias() -= g.transpose() * g;
            aug = 0.5 * (aug + aug.transpose());
        } else {
            aug = augmented_covariance(model, batch, noise.variance);
        }
        out.information_gain = information_gain(cov, aug);
        if (with_gradient) {
            // I = ½ logdet(C + S) - ½ logdet S with S = diag(noise) + jitter.
            Matrix shifted = cov;
            shifted.diagonal() += noise.variance;
            shifted.diagonal().array() += block.jitter;
            Eigen::LLT<Matrix> llt(shifted);
            if (llt.info() != Eigen::Success) {
                throw NumericalError("beebo_gradient: C + S is not positive definite");
            }
            const Matrix inv = llt.solve(Matrix::Identity(q, q));
            cov_bar += (0.5 * config.temperature) * inv;
            if (noise_has_gradient) {
                noise_bar = (0.5 * config.temperature) *
                            (inv.diagonal().array() - (noise.variance.array() + block.jitter).inverse());
            }
        }
    }
    out.value = out.energy_term + config.temperature * out.information_gain;
    if (!std::isfinite(out.value)) throw NumericalError("beebo: non-finite acquisition value");

    if (with_gradient) {
        out.gradient = posterior_backprop(model, batch, ws, mean_bar, cov_bar);
        if (noise_bar.size() == q) {
            out.gradient.array() += (noise.gradient.array().colwise() * noise_bar.array());
        }
    }
    return out;
}

} // namespace

BeeboEvaluation beebo_evaluate(const GpModel& model, const Matrix& batch, const Vector& batch_noise,
                               const AcquisitionConfig& config, bool with_gradient) {
    NoiseEvaluation noise{batch_noise, Matrix()};
    return evaluate_impl(model, batch, noise, false, config, with_gradient);
}

BeeboEvaluation beebo_evaluate(const GpModel& model, const Matrix& batch, const NoiseField& noise,
                               const AcquisitionConfig& config, bool with_gradient) {
    auto evaluated = noise(batch);
    if (evaluated.variance.size() != batch.rows()) {
        throw InvalidArgument("noise field returned the wrong number of variances");
    }
    const bool has_grad = with_gradient && evaluated.gradient.rows() == batch.rows() &&
                          evaluated.gradient.cols() == batch.cols();
    return evaluate_impl(model, batch, evaluated, has_grad, config, with_gradient);
}

double beebo_score(const GpModel& model, const Matrix& batch, const Vector& batch_noise,
                   const AcquisitionConfig& config) {
    return beebo_evaluate(model, batch, batch_noise, config, false).value;
}

Matrix beebo_gradient(const GpModel& model, const Matrix& batch, const Vector& batch_noise,
                      const AcquisitionConfig& config) {
    return beebo_evaluate(model, batch, batch_noise, config, true).gradient;
}

Matrix beebo_gradient(const GpModel& model, const Matrix& batch, const NoiseField& noise,
                      const AcquisitionConfig& config) {
    return beebo_evaluate(model, batch, noise, config, true).gradient;
}

Temperature temperature_from_kappa(double kappa, double amplitude) {
    if (!(kappa >= 0.0)) throw InvalidArgument("temperature_from_kappa: kappa must be nonnegative");
    if (!(amplitude > 0.0)) throw InvalidArgument("temperature_from_kappa: amplitude must be positive");
    constexpr double nu = 0.5;
    const double t = nu * std::sqrt(amplitude) * std::sqrt(kappa);
    return {t, nu * std::sqrt(kappa)};
}

double kappa_from_scaled_temperature(double t_prime) {
    if (!(t_prime >= 0.0)) throw InvalidArgument("scaled temperature must be nonnegative");
    return 4.0 * t_prime * t_prime;
}

} // namespace beebo
