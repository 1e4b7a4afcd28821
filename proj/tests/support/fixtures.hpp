#pragma once

#include <cmath>
#include <random>

#include "beebo/gp_core.hpp"

namespace beebo::testing {

// Random GP in [0,1]^d with N points, moderate lengthscales and noise.
inline GpModel random_model(std::mt19937_64& rng, int n, int d, double amplitude = 1.0,
                            double noise_lo = 1e-3, double noise_hi = 1e-1) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 1.0);
    TrainingData data;
    data.inputs = Matrix::NullaryExpr(n, d, [&] { return u(rng); });
    data.outputs = Vector::NullaryExpr(n, [&] { return z(rng); });
    data.noise_variances = Vector::NullaryExpr(n, [&] {
        return std::exp(std::log(noise_lo) + u(rng) * (std::log(noise_hi) - std::log(noise_lo)));
    });
    KernelParams k;
    k.amplitude = amplitude;
    k.lengthscales = Vector::NullaryExpr(d, [&] { return 0.2 + 0.6 * u(rng); });
    return GpModel(std::move(data), k);
}

inline Matrix random_points(std::mt19937_64& rng, int q, int d) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return Matrix::NullaryExpr(q, d, [&] { return u(rng); });
}

// Matern-5/2 written out independently of the library.
inline double dense_matern(const Vector& a, const Vector& b, const KernelParams& k) {
    double r2 = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        const double t = (a(j) - b(j)) / k.lengthscales(j);
        r2 += t * t;
    }
    const double s = std::sqrt(5.0 * r2);
    return k.amplitude * (1.0 + s + 5.0 * r2 / 3.0) * std::exp(-s);
}

inline Matrix dense_kernel(const Matrix& a, const Matrix& b, const KernelParams& k) {
    Matrix out(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = dense_matern(a.row(i), b.row(j), k);
    return out;
}

struct DensePosterior {
    Vector mean;
    Matrix covariance;
};

// Posterior by explicit inversion of K + diag(noise) + jitter I.
inline DensePosterior dense_posterior(const Matrix& xd, const Vector& y, const Vector& noise, double jitter,
                                      const KernelParams& k, const Matrix& x) {
    Matrix m = dense_kernel(xd, xd, k);
    m.diagonal() += noise + Vector::Constant(noise.size(), jitter);
    const Matrix inv = m.inverse();
    const Matrix kxd = dense_kernel(x, xd, k);
    return {kxd * inv * y, dense_kernel(x, x, k) - kxd * inv * kxd.transpose()};
}

// Covariance at x after also observing x with batch_noise (augmented data set).
inline Matrix dense_augmented_covariance(const GpModel& model, const Matrix& x, const Vector& batch_noise) {
    const auto& data = model.data();
    const Eigen::Index n = data.size(), q = x.rows();
    Matrix xa(n + q, x.cols());
    xa << data.inputs, x;
    Vector na(n + q);
    na << data.noise_variances, batch_noise;
    return dense_posterior(xa, Vector::Zero(n + q), na, model.jitter(), model.kernel(), x).covariance;
}

// Central finite-difference gradient of f over the entries of x.
template <class F>
Matrix finite_difference(F&& f, const Matrix& x, double h = 1e-5) {
    Matrix g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            Matrix xp = x, xm = x;
            xp(i, j) += h;
            xm(i, j) -= h;
            g(i, j) = (f(xp) - f(xm)) / (2.0 * h);
        }
    }
    return g;
}

inline double relative_error(const Matrix& a, const Matrix& ref, double floor = 1e-8) {
    return (a - ref).norm() / std::max(ref.norm(), floor);
}

} // namespace beebo::testing
