#include "beebo/batch_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "beebo/errors.hpp"
#include "beebo/quasi_random.hpp"

namespace beebo {

void OptimizerConfig::validate() const {
    if (restarts < 1 || raw_candidates < 1 || max_iters < 1) {
        throw InvalidArgument("OptimizerConfig: counts must be >= 1");
    }
    if (restarts > raw_candidates) {
        throw InvalidArgument("OptimizerConfig: restarts must not exceed raw_candidates");
    }
    if (!(step_size > 0.0) || !(grad_tolerance > 0.0)) {
        throw InvalidArgument("OptimizerConfig: step_size and grad_tolerance must be positive");
    }
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_eval(const BatchObjective& f, const Matrix& x, Matrix* grad) {
    try {
        const double v = f(x, grad);
        if (!std::isfinite(v)) return kNegInf;
        if (grad && !grad->allFinite()) return kNegInf;
        return v;
    } catch (const NumericalError&) {
        return kNegInf;
    }
}

void project(Matrix& x, const Box& box) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        x.col(j) = x.col(j).cwiseMax(box.lower(j)).cwiseMin(box.upper(j));
    }
}

// Gradient with components that push through an active bound removed.
Matrix projected_gradient(const Matrix& x, const Matrix& g, const Box& box) {
    Matrix pg = g;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if ((x(i, j) <= box.lower(j) && g(i, j) < 0.0) || (x(i, j) >= box.upper(j) && g(i, j) > 0.0)) {
                pg(i, j) = 0.0;
            }
        }
    }
    return pg;
}

struct Ascent {
    Matrix x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;
};

// Spectral (Barzilai-Borwein) projected gradient with monotone backtracking.
Ascent ascend(const BatchObjective& f, Matrix x, double value, const Box& box, const OptimizerConfig& cfg) {
    Ascent out;
    out.x = x;
    out.value = value;
    out.trace.push_back(value);
    Matrix grad(x.rows(), x.cols());
    double fx = safe_eval(f, x, &grad);
    if (!std::isfinite(fx)) return out;
    double step = cfg.step_size;
    Matrix prev_x, prev_grad;
    constexpr int kMaxHalvings = 40;

    for (int it = 0; it < cfg.max_iters; ++it) {
        const Matrix pg = projected_gradient(x, grad, box);
        if (pg.norm() <= cfg.grad_tolerance) {
            out.converged = true;
            break;
        }
        if (prev_x.size() > 0) {
            const Matrix s = x - prev_x;
            const Matrix y = grad - prev_grad;
            const double sy = (s.array() * y.array()).sum();
            const double ss = s.squaredNorm();
            // ascent: BB step uses -s.y
            if (sy < 0.0 && ss > 0.0) step = std::clamp(ss / -sy, 1e-10, 1e6);
        }
        bool accepted = false;
        Matrix candidate;
        Matrix candidate_grad(x.rows(), x.cols());
        double fc = kNegInf;
        for (int h = 0; h < kMaxHalvings; ++h) {
            candidate = x + step * grad;
            project(candidate, box);
            if ((candidate - x).squaredNorm() == 0.0) break;
            fc = safe_eval(f, candidate, &candidate_grad);
            if (fc > fx) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        out.iterations = it + 1;
        if (!accepted) {
            out.converged = true; // no ascent direction at machine resolution
            break;
        }
        prev_x = std::move(x);
        prev_grad = std::move(grad);
        x = std::move(candidate);
        grad = candidate_grad;
        fx = fc;
        out.trace.push_back(fx);
    }
    out.x = std::move(x);
    out.value = fx;
    return out;
}

} // namespace

OptimizationResult optimize_batch(const BatchObjective& objective, const Box& domain,
                                  Eigen::Index batch_size, const OptimizerConfig& config) {
    config.validate();
    const auto d = domain.dim();
    if (batch_size < 1) throw InvalidArgument("optimize_batch: batch size must be >= 1");
    if (d < 1 || domain.upper.size() != d || !domain.lower.allFinite() || !domain.upper.allFinite() ||
        (domain.upper.array() < domain.lower.array()).any()) {
        throw InvalidArgument("optimize_batch: invalid box bounds");
    }

    const Matrix raw = sobol_uniform(config.raw_candidates, batch_size * d, config.seed);
    auto candidate = [&](Eigen::Index k) {
        Matrix x(batch_size, d);
        for (Eigen::Index i = 0; i < batch_size; ++i)
            for (Eigen::Index j = 0; j < d; ++j)
                x(i, j) = domain.lower(j) + raw(k, i * d + j) * (domain.upper(j) - domain.lower(j));
        return x;
    };

    std::vector<double> scores(static_cast<std::size_t>(config.raw_candidates));
    for (int k = 0; k < config.raw_candidates; ++k) {
        scores[static_cast<std::size_t>(k)] = safe_eval(objective, candidate(k), nullptr);
    }
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)]; });

    OptimizationResult result;
    result.best_initial_value = scores[static_cast<std::size_t>(order.front())];
    if (!std::isfinite(result.best_initial_value)) {
        throw OptimizationFailed("optimize_batch: objective is non-finite at every raw candidate (" +
                                     std::to_string(config.raw_candidates) + " tried)",
                                 config.raw_candidates);
    }

    double best = kNegInf;
    for (int r = 0; r < config.restarts; ++r) {
        const int k = order[static_cast<std::size_t>(r)];
        const double start_value = scores[static_cast<std::size_t>(k)];
        if (!std::isfinite(start_value)) {
            result.traces.emplace_back();
            continue;
        }
        auto run = ascend(objective, candidate(k), start_value, domain, config);
        result.traces.push_back(run.trace);
        // strict comparison keeps the lowest restart index on ties
        if (run.value > best) {
            best = run.value;
            result.batch = std::move(run.x);
            result.value = run.value;
            result.best_restart = r;
            result.iterations = run.iterations;
            result.converged = run.converged;
        }
    }
    return result;
}

} // namespace beebo
