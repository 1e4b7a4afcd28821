#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "beebo/errors.hpp"
#include "beebo/gp_core.hpp"
#include "kernel_detail.hpp"

namespace beebo {

namespace {

struct Factorized {
    Matrix lower;
    double jitter;
    Vector alpha;
};

Factorized factorize(const TrainingData& data, const KernelParams& params, const Matrix& k) {
    Matrix m = k;
    m.diagonal() += data.noise_variances;
    auto chol = cholesky_with_jitter(m, params.amplitude);
    Vector alpha = chol.lower.triangularView<Eigen::Lower>().solve(data.outputs);
    chol.lower.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha);
    return {std::move(chol.lower), chol.jitter, std::move(alpha)};
}

double lml_from(const TrainingData& data, const Factorized& f) {
    const double n = static_cast<double>(data.size());
    const double quad = data.outputs.dot(f.alpha);
    const double logdet = 2.0 * f.lower.diagonal().array().log().sum();
    return -0.5 * quad - 0.5 * logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

double gamma_log_density(double x, double shape, double rate) {
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

constexpr double kMinLogLengthscale = -6.907755278982137; // log 1e-3
constexpr double kMaxLogLengthscale = 6.907755278982137;  // log 1e3
constexpr double kMinLogAmplitude = -13.815510557964274;  // log 1e-6
constexpr double kMaxLogAmplitude = 9.210340371976184;    // log 1e4

KernelParams from_log(const Vector& theta) {
    KernelParams p;
    p.amplitude = std::exp(theta(0));
    p.lengthscales = theta.tail(theta.size() - 1).array().exp();
    return p;
}

void clamp_log(Vector& theta) {
    theta(0) = std::clamp(theta(0), kMinLogAmplitude, kMaxLogAmplitude);
    for (Eigen::Index j = 1; j < theta.size(); ++j) {
        theta(j) = std::clamp(theta(j), kMinLogLengthscale, kMaxLogLengthscale);
    }
}

} // namespace

double log_marginal_likelihood(const TrainingData& data, const KernelParams& params) {
    data.validate();
    params.validate();
    if (data.size() == 0) return 0.0;
    const Matrix k = kernel_matrix(data.inputs, data.inputs, params);
    return lml_from(data, factorize(data, params, k));
}

LikelihoodGradient log_marginal_likelihood_gradient(const TrainingData& data,
                                                    const KernelParams& params) {
    data.validate();
    params.validate();
    const auto n = data.size();
    const auto d = params.dim();
    LikelihoodGradient out;
    out.gradient = Vector::Zero(d + 1);
    if (n == 0) return out;

    const Matrix k = kernel_matrix(data.inputs, data.inputs, params);
    const auto f = factorize(data, params, k);
    out.value = lml_from(data, f);

    // B = alpha alpha^T - M^{-1}; dLML/dtheta = 1/2 tr(B dM/dtheta)
    Matrix m_inv = Matrix::Identity(n, n);
    f.lower.triangularView<Eigen::Lower>().solveInPlace(m_inv);
    f.lower.triangularView<Eigen::Lower>().transpose().solveInPlace(m_inv);
    Matrix b = f.alpha * f.alpha.transpose() - m_inv;

    // The jitter scales with the amplitude, so dM/dlogA = K + jitter I.
    out.gradient(0) = 0.5 * ((b.array() * k.array()).sum() + f.jitter * b.trace());

    const Matrix& x = data.inputs;
    const Vector inv_l2 = params.lengthscales.array().square().inverse();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            const Eigen::ArrayXd diff2 = (x.row(i) - x.row(j)).transpose().array().square() * inv_l2.array();
            const double r = std::sqrt(diff2.sum());
            const double s = detail::kSqrt5 * r;
            const double weight = (5.0 * params.amplitude / 3.0) * (1.0 + s) * std::exp(-s);
            // symmetric pair counted twice
            out.gradient.tail(d) += (b(i, j) * weight) * diff2.matrix();
        }
    }
    return out;
}

double log_prior(const KernelParams& params, const FitOptions& options) {
    double lp = gamma_log_density(params.amplitude, options.amplitude_shape, options.amplitude_rate);
    for (Eigen::Index j = 0; j < params.dim(); ++j) {
        lp += gamma_log_density(params.lengthscales(j), options.lengthscale_shape, options.lengthscale_rate);
    }
    return lp;
}

KernelParams fit_hyperparameters(const TrainingData& data, std::uint64_t seed, const FitOptions& options) {
    data.validate();
    if (data.size() < 2) {
        throw InsufficientData("fit_hyperparameters needs at least two observations");
    }
    const auto d = data.dim();

    auto objective = [&](const Vector& theta, Vector& grad) {
        const KernelParams p = from_log(theta);
        auto lml = log_marginal_likelihood_gradient(data, p);
        grad = lml.gradient;
        grad(0) += (options.amplitude_shape - 1.0) - options.amplitude_rate * p.amplitude;
        for (Eigen::Index j = 0; j < d; ++j) {
            grad(j + 1) += (options.lengthscale_shape - 1.0) - options.lengthscale_rate * p.lengthscales(j);
        }
        return lml.value + log_prior(p, options);
    };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> log_ls(std::log(0.05), std::log(2.0));
    std::uniform_real_distribution<double> log_amp(std::log(0.1), std::log(10.0));

    double best_value = -std::numeric_limits<double>::infinity();
    Vector best_theta;

    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;

    for (int restart = 0; restart < options.restarts; ++restart) {
        Vector theta(d + 1);
        if (restart == 0) {
            theta(0) = 0.0;
            theta.tail(d).setConstant(std::log(options.lengthscale_shape / options.lengthscale_rate));
        } else {
            theta(0) = log_amp(rng);
            for (Eigen::Index j = 0; j < d; ++j) theta(j + 1) = log_ls(rng);
        }
        Vector m1 = Vector::Zero(d + 1);
        Vector m2 = Vector::Zero(d + 1);
        Vector grad(d + 1);
        double lr = options.learning_rate;

        double value;
        try {
            value = objective(theta, grad);
        } catch (const NumericalError&) {
            continue;
        }
        if (value > best_value) {
            best_value = value;
            best_theta = theta;
        }
        for (int step = 1; step <= options.steps; ++step) {
            m1 = beta1 * m1 + (1.0 - beta1) * grad;
            m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseAbs2();
            const Vector m1_hat = m1 / (1.0 - std::pow(beta1, step));
            const Vector m2_hat = m2 / (1.0 - std::pow(beta2, step));
            Vector candidate = theta + lr * (m1_hat.array() / (m2_hat.array().sqrt() + eps)).matrix();
            clamp_log(candidate);
            Vector candidate_grad(d + 1);
            double candidate_value;
            try {
                candidate_value = objective(candidate, candidate_grad);
            } catch (const NumericalError&) {
                lr *= 0.5;
                continue;
            }
            if (!std::isfinite(candidate_value)) {
                lr *= 0.5;
                continue;
            }
            theta = std::move(candidate);
            grad = std::move(candidate_grad);
            value = candidate_value;
            if (value > best_value) {
                best_value = value;
                best_theta = theta;
            }
        }
    }
    if (best_theta.size() == 0) {
        throw NumericalError("fit_hyperparameters: every restart failed to factorize");
    }
    return from_log(best_theta);
}

} // namespace beebo
