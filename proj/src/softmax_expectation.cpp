#include <cmath>
#include <limits>

#include "beebo/acquisition.hpp"
#include "beebo/errors.hpp"

namespace beebo {

double beta_y(double beta, double delta_y_max, double softmax_partial_sum, double alpha) {
    if (!(softmax_partial_sum > 0.0)) {
        throw InvalidArgument("beta_y: softmax partial sum must be positive");
    }
    return std::exp(log_beta_y(beta, delta_y_max, std::log(softmax_partial_sum), alpha));
}

double log_beta_y(double beta, double delta_y_max, double log_softmax_partial_sum, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidArgument("beta_y: alpha must lie in (0, 1)");
    }
    const double log_cap = std::log((1.0 - alpha) / alpha) + log_softmax_partial_sum;
    return std::min(log_cap, beta * delta_y_max);
}

namespace {

struct Weights {
    Vector w;
    double reference = 0.0;
    bool capped = false;
};

Weights softmax_weights(const Vector& mean, double beta, std::optional<double> y_max, double alpha) {
    const Vector z = beta * mean;
    const double shift = z.maxCoeff();
    const Vector e = (z.array() - shift).exp();
    const double partial = e.sum();
    Weights out;
    double total = partial;
    double mass = 0.0;
    if (y_max) {
        // dy_max is measured from the same shift as the partial sum.
        const double delta = beta > 0.0 ? *y_max - shift / beta : 0.0;
        const double log_mass = log_beta_y(beta, delta, std::log(partial), alpha);
        out.capped = log_mass < beta * delta;
        mass = std::exp(log_mass);
        total += mass;
    }
    out.w = e / total;
    out.reference = mass / total;
    return out;
}

struct Expansion {
    SoftmaxExpansion ex;
    Matrix m;   // U C
    Vector v;   // M w
    Vector c;   // c^(i)
    Vector h;   // nu^(i)_i
    Vector e;   // w_i exp(c_i)
    double k = 1.0;
    double value = 0.0;
};

Expansion expand(const Vector& mean, const Matrix& covariance, double beta, std::optional<double> y_max,
                 double alpha) {
    const auto q = mean.size();
    if (q < 1) throw InvalidArgument("softmax_expectation: empty mean");
    if (covariance.rows() != q || covariance.cols() != q) {
        throw InvalidArgument("softmax_expectation: covariance shape does not match the mean");
    }
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw InvalidArgument("softmax_expectation: beta must be finite and nonnegative");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidArgument("softmax_expectation: alpha must lie in (0, 1)");
    }
    Expansion out;
    auto& ex = out.ex;
    ex.beta_clamped = beta > kMaxSoftmaxBeta;
    ex.beta = std::min(beta, kMaxSoftmaxBeta);
    const double b = ex.beta;

    const auto weights = softmax_weights(mean, b, y_max, alpha);
    ex.weights = weights.w;
    ex.reference_weight = weights.reference;
    ex.reference_capped = weights.capped;
    const Vector& w = ex.weights;
    ex.coupling = Matrix(w.asDiagonal()) - w * w.transpose();

    Matrix u_inv = Matrix::Identity(q, q);
    u_inv.noalias() += (b * b) * covariance * ex.coupling;
    ex.solve_handle.compute(u_inv);
    const Matrix& lu = ex.solve_handle.matrixLU();
    double logdet = 0.0;
    double sign = ex.solve_handle.permutationP().determinant();
    for (Eigen::Index i = 0; i < q; ++i) {
        const double piv = lu(i, i);
        if (piv == 0.0 || !std::isfinite(piv)) {
            throw NumericalError("softmax_expectation: I + beta^2 C W is singular");
        }
        if (piv < 0.0) sign = -sign;
        logdet += std::log(std::abs(piv));
    }
    if (sign <= 0.0) {
        throw NumericalError("softmax_expectation: det(I + beta^2 C W) is not positive");
    }
    ex.log_det_U = -logdet;
    out.k = std::exp(-0.5 * logdet);

    out.m = ex.solve_handle.solve(covariance);
    out.v = out.m * w;
    const Vector d = out.m.diagonal();
    const double quad = w.dot(out.v);
    out.c = (0.5 * b * b) * (d - 2.0 * out.v).array() + 0.5 * b * b * quad;
    out.h = b * (d - out.v) + mean;
    out.e = w.array() * out.c.array().exp();
    out.value = out.k * out.e.dot(out.h);
    if (!std::isfinite(out.value)) {
        throw NumericalError("softmax_expectation: non-finite value");
    }
    return out;
}

} // namespace

SoftmaxExpectation softmax_expectation(const Vector& mean, const Matrix& covariance, double beta,
                                       std::optional<double> y_max, double alpha) {
    auto out = expand(mean, covariance, beta, y_max, alpha);
    return {out.value, std::move(out.ex)};
}

SoftmaxExpectationGradient softmax_expectation_gradient(const Vector& mean, const Matrix& covariance,
                                                        double beta, std::optional<double> y_max,
                                                        double alpha) {
    auto fw = expand(mean, covariance, beta, y_max, alpha);
    const double b = fw.ex.beta;
    const Vector& w = fw.ex.weights;
    const Matrix& wm = fw.ex.coupling;
    const Matrix& m = fw.m;

    // Reverse pass through value = K * sum_i e_i h_i.
    const double k_bar = fw.e.dot(fw.h);
    const Vector h_bar = fw.k * fw.e;
    const Vector c_bar = fw.k * fw.h.cwiseProduct(fw.e);
    Vector w_bar = fw.k * fw.h.cwiseProduct(fw.c.array().exp().matrix());

    const Vector d_bar = b * h_bar + 0.5 * b * b * c_bar;
    const Vector v_bar = -b * h_bar - b * b * c_bar;
    const double quad_bar = 0.5 * b * b * c_bar.sum();
    Vector mean_bar = h_bar;

    Matrix m_bar = Matrix(d_bar.asDiagonal());
    m_bar.noalias() += v_bar * w.transpose();
    m_bar.noalias() += quad_bar * w * w.transpose();
    w_bar.noalias() += m.transpose() * v_bar;
    w_bar.noalias() += quad_bar * (m + m.transpose()) * w;

    // A = I + b^2 C W, M = A^{-1} C, K = det(A)^{-1/2}
    const Matrix a_inv_t = fw.ex.solve_handle.inverse().transpose();
    Matrix a_bar = (-0.5 * k_bar * fw.k) * a_inv_t;
    a_bar.noalias() -= a_inv_t * m_bar * m.transpose();

    Matrix cov_bar = a_inv_t * m_bar;
    cov_bar.noalias() += (b * b) * a_bar * wm.transpose();
    const Matrix coupling_bar = (b * b) * covariance.transpose() * a_bar;

    w_bar += coupling_bar.diagonal();
    w_bar.noalias() -= (coupling_bar + coupling_bar.transpose()) * w;

    if (b > 0.0) {
        const double kappa = fw.ex.reference_capped ? 1.0 / alpha : 1.0;
        const double wsum = w.dot(w_bar);
        mean_bar.array() += b * (w.array() * w_bar.array() - kappa * w.array() * wsum);
    }

    SoftmaxExpectationGradient out;
    out.value = fw.value;
    out.mean_gradient = std::move(mean_bar);
    out.covariance_gradient = std::move(cov_bar);
    out.expansion = std::move(fw.ex);
    return out;
}

double effective_points(const SoftmaxExpansion& expansion) {
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < expansion.weights.size(); ++i) {
        const double p = expansion.weights(i);
        if (p > 0.0) entropy -= p * std::log(p);
    }
    if (expansion.reference_weight > 0.0) {
        entropy -= expansion.reference_weight * std::log(expansion.reference_weight);
    }
    return std::exp(entropy);
}

} // namespace beebo
