#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "beebo/bo_loop.hpp"
#include "beebo/quasi_random.hpp"

namespace beebo {

namespace {

// FNV-1a, stable across standard libraries unlike std::hash.
std::uint64_t name_key(const std::string& name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

double normalized_best(const std::vector<RoundRecord>& records, const ProblemSpec& problem) {
    if (records.empty()) throw InvalidArgument("normalized_best needs at least one record");
    const double seed_best = records.front().best_so_far;
    const double final_best = records.back().best_so_far;
    const double span = problem.optimum_value - seed_best;
    if (!(span > 1e-12 * std::max(1.0, std::abs(problem.optimum_value)))) return 1.0;
    return std::clamp((final_best - seed_best) / span, 0.0, 1.0);
}

double relative_batch_regret(const Vector& final_batch_values, const ProblemSpec& problem,
                             double random_reference) {
    if (!(random_reference > 0.0)) throw InvalidArgument("random_reference must be positive");
    return (problem.optimum_value - final_batch_values.array()).sum() / random_reference;
}

double estimate_random_reference(const ProblemSpec& problem, Eigen::Index batch_size,
                                 std::uint64_t meta_seed, int samples) {
    if (samples < 1) throw InvalidArgument("samples must be positive");
    std::mt19937_64 rng(derive_seed(meta_seed, {name_key(problem.id())}));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Eigen::Index d = problem.dimension;
    const Vector width = problem.bounds.upper - problem.bounds.lower;
    Vector x(d);
    double gap = 0.0;
    for (int s = 0; s < samples; ++s) {
        for (Eigen::Index j = 0; j < d; ++j) x(j) = problem.bounds.lower(j) + width(j) * u(rng);
        gap += problem.optimum_value - problem.evaluate(x);
    }
    return static_cast<double>(batch_size) * gap / samples;
}

Vector optima_distances(const Matrix& batch, const ProblemSpec& problem) {
    if (problem.optima.empty()) throw InvalidArgument(problem.id() + " lists no optima");
    Vector out(static_cast<Eigen::Index>(problem.optima.size()));
    for (std::size_t j = 0; j < problem.optima.size(); ++j) {
        out(static_cast<Eigen::Index>(j)) =
            (batch.rowwise() - problem.optima[j].transpose()).rowwise().norm().mean();
    }
    return out;
}

ResultRow summarize_run(const std::vector<RoundRecord>& records, const ProblemSpec& problem,
                        const ExperimentConfig& config, std::int64_t replicate, double random_reference) {
    ResultRow row;
    row.problem = problem.id();
    row.d = problem.dimension;
    row.Q = config.batch_size;
    row.method = to_string(config.method);
    row.trade_off = config.trade_off;
    row.replicate = replicate;
    row.normalized_best = normalized_best(records, problem);
    row.R_rel = relative_batch_regret(records.back().true_values, problem, random_reference);
    for (const RoundRecord& rec : records) {
        row.per_round_best.push_back(rec.best_so_far);
        const Vector dist = optima_distances(rec.batch, problem);
        row.distances.emplace_back(dist.data(), dist.data() + dist.size());
    }
    return row;
}

} // namespace beebo
