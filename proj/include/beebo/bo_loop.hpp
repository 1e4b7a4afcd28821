#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "beebo/acquisition.hpp"
#include "beebo/batch_optimizer.hpp"
#include "beebo/errors.hpp"
#include "beebo/gp_core.hpp"
#include "beebo/problems.hpp"

namespace beebo {

enum class Method { mean_beebo, max_beebo, qucb };

std::string to_string(Method method);
// Accepts "meanBEEBO", "maxBEEBO", "qUCB". Throws InvalidArgument.
Method method_from_string(std::string_view name);

struct ExperimentConfig {
    std::string problem_id;
    int batch_size = 100;
    int rounds = 10;
    Method method = Method::mean_beebo;
    // Scaled temperature T'. BEEBO uses T = T' sqrt(A); q-UCB uses kappa = 4 T'^2.
    double trade_off = 0.5;
    std::uint64_t replicate_seed = 0;
    bool final_round_exploit = true;
    int initial_points = 0; // 0 means batch_size
    double seed_min_distance = 0.5;
    std::optional<double> softmax_beta; // maxBEEBO; default A^{-1/2}
    bool use_y_max_reference = false;
    double alpha = 0.05;
    int mc_samples = 128;
    // Observation variance assumed for noise-free problems, standardized scale.
    double noise_floor = 1e-4;
    OptimizerConfig optimizer;
    FitOptions fit;

    void validate() const;
};

struct RoundRecord {
    int round_index = 0;
    Matrix batch;        // problem coordinates, Q x d
    Vector observations; // noisy y
    Vector sigma2;       // true observation variances
    Vector true_values;  // noise-free f at the batch
    double best_so_far = 0.0;
    double acquisition_value = 0.0; // standardized scale; 0 for the seed round
    double wall_time = 0.0;         // seconds
};

struct ObservedData {
    Matrix x; // problem coordinates
    Vector y;
    Vector sigma2;
};

// Everything the loop built for one acquisition, handed to an observer.
struct RoundContext {
    int round_index = 0;
    bool exploit = false;
    const GpModel* model = nullptr;
    const InputScaling* input_scaling = nullptr;
    const OutputScaling* output_scaling = nullptr;
    const Matrix* unit_batch = nullptr;
    double acquisition_value = 0.0;
    double temperature = 0.0; // BEEBO T or q-UCB kappa
};

using RoundObserver = std::function<void(const RoundContext&)>;

struct Proposal {
    Matrix batch; // problem coordinates
    double acquisition_value = 0.0;
    KernelParams kernel;
    double temperature = 0.0;
};

// Fits the surrogate(s) on the data and optimizes the acquisition for one batch.
Proposal propose_batch(const ProblemSpec& problem, const ObservedData& data, const ExperimentConfig& config,
                       int round_index, bool exploit, const RoundObserver& observer = {});

class ExperimentAborted : public Error {
public:
    ExperimentAborted(const std::string& what, std::vector<RoundRecord> partial, bool numerical)
        : Error(what), partial_(std::move(partial)), numerical_(numerical) {}

    const std::vector<RoundRecord>& partial_records() const { return partial_; }
    bool numerical() const { return numerical_; }

private:
    std::vector<RoundRecord> partial_;
    bool numerical_;
};

// Seed round plus `rounds` acquisition rounds. Deterministic given the config.
std::vector<RoundRecord> run_experiment(const ExperimentConfig& config, const RoundObserver& observer = {});

// Seed points and their observations depend only on (problem, count, replicate seed).
Matrix replicate_seed_points(const ProblemSpec& problem, Eigen::Index count, double min_dist,
                             std::uint64_t replicate_seed);

// Metrics.

// (best_final - best_seed) / (f* - best_seed), clamped to [0, 1]; 1 when the
// seed round already reached the optimum.
double normalized_best(const std::vector<RoundRecord>& records, const ProblemSpec& problem);

double relative_batch_regret(const Vector& final_batch_values, const ProblemSpec& problem,
                             double random_reference);

// Expected summed regret of a uniform random batch of batch_size points,
// from `samples` Monte-Carlo points.
double estimate_random_reference(const ProblemSpec& problem, Eigen::Index batch_size,
                                 std::uint64_t meta_seed, int samples = 10'000);

// Mean distance of the batch to each listed optimum.
Vector optima_distances(const Matrix& batch, const ProblemSpec& problem);

// One JSON-lines row per (cell, replicate).
struct ResultRow {
    std::string problem;
    int d = 0;
    int Q = 0;
    std::string method;
    double trade_off = 0.0;
    std::int64_t replicate = 0;
    double normalized_best = 0.0;
    double R_rel = 0.0;
    std::vector<double> per_round_best;
    std::vector<std::vector<double>> distances; // per round, per optimum

    bool operator==(const ResultRow&) const = default;
};

ResultRow summarize_run(const std::vector<RoundRecord>& records, const ProblemSpec& problem,
                        const ExperimentConfig& config, std::int64_t replicate, double random_reference);

} // namespace beebo
