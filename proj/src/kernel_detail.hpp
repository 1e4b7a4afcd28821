#pragma once

#include <cmath>

#include "beebo/gp_core.hpp"

namespace beebo::detail {

inline constexpr double kSqrt5 = 2.2360679774997896964091736687313;

inline double matern52_of_r(double r, double amplitude) {
    const double s = kSqrt5 * r;
    return amplitude * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

// Gradient of k(x, x2) with respect to x.
template <typename A, typename B>
void matern52_grad_first(const A& x, const B& x2, const KernelParams& params, Vector& out) {
    const auto d = params.dim();
    out.resize(d);
    double r2 = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double t = (x(j) - x2(j)) / params.lengthscales(j);
        r2 += t * t;
    }
    const double r = std::sqrt(r2);
    const double s = kSqrt5 * r;
    const double factor = -(5.0 * params.amplitude / 3.0) * (1.0 + s) * std::exp(-s);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double l = params.lengthscales(j);
        out(j) = factor * (x(j) - x2(j)) / (l * l);
    }
}

} // namespace beebo::detail
