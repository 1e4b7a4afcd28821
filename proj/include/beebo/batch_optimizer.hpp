#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "beebo/gp_core.hpp"

namespace beebo {

struct Box {
    Vector lower;
    Vector upper;

    Eigen::Index dim() const { return lower.size(); }
    static Box unit(Eigen::Index dim) { return {Vector::Zero(dim), Vector::Ones(dim)}; }
};

struct OptimizerConfig {
    int restarts = 8;
    int raw_candidates = 512;
    int max_iters = 200;
    double step_size = 0.05;
    double grad_tolerance = 1e-6;
    std::uint64_t seed = 0;

    void validate() const;
};

// Returns the objective at batch (Q x d); fills *gradient when non-null.
// Non-finite values (or thrown beebo::NumericalError) mark infeasible batches.
using BatchObjective = std::function<double(const Matrix& batch, Matrix* gradient)>;

struct OptimizationResult {
    Matrix batch;
    double value = 0.0;
    double best_initial_value = 0.0; // best screened raw candidate
    int best_restart = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<std::vector<double>> traces; // accepted values per restart
};

// Multi-start projected gradient ascent of a joint batch objective over a box.
OptimizationResult optimize_batch(const BatchObjective& objective, const Box& domain,
                                  Eigen::Index batch_size, const OptimizerConfig& config);

} // namespace beebo
