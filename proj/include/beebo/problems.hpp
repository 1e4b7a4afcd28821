#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "beebo/acquisition.hpp"
#include "beebo/batch_optimizer.hpp"
#include "beebo/gp_core.hpp"

namespace beebo {

enum class NoiseKind { none, homoskedastic, heteroskedastic };

// Maximization test problem in its original coordinates.
struct ProblemSpec {
    std::string name;
    int dimension = 0;
    Box bounds;
    std::function<double(const Vector&)> evaluate;
    double optimum_value = 0.0;
    std::vector<Vector> optima;
    NoiseKind noise_kind = NoiseKind::none;
    std::function<double(const Vector&)> noise_field; // sigma^2(x), empty when noise-free

    // Registry id, "<name>-<d>".
    std::string id() const { return name + "-" + std::to_string(dimension); }
    bool contains(const Vector& x, double tolerance = 1e-9) const;
};

// Parses "<name>-<d>" and builds the problem. Throws UnknownProblem.
ProblemSpec make_problem(std::string_view id);

// Ids of the benchmark suite (every name at each dimension it is run at).
std::vector<std::string> list_problems();

ProblemSpec make_embedded_hartmann(int total_dim);

// Branin heteroskedastic noise: 100 exp(-0.05 min(|x - x2*|, |x - x3*|)).
inline constexpr double kBraninNoiseMax = 100.0;
inline constexpr double kBraninNoiseRate = 0.05;
inline constexpr double kBraninHomoskedasticNoise = 77.5;
double branin_noise(const Vector& x);

// Noise-free values; throws DomainError for a point outside the box.
Vector evaluate_batch(const ProblemSpec& problem, const Matrix& batch);

struct Observation {
    Vector y;
    Vector sigma2;
};

// y = f(x) + eps with eps ~ N(0, sigma^2(x)); the true sigma^2 is returned too.
Observation observe(const ProblemSpec& problem, const Matrix& batch, std::uint64_t seed);

inline constexpr int kMaxConsecutiveRejections = 1'000'000;

// Uniform rejection sampling of points at distance >= min_dist from every
// listed optimum, in problem coordinates.
Matrix sample_seed_points(const ProblemSpec& problem, Eigen::Index count, double min_dist,
                          std::uint64_t seed);

// GP on observed (x, sigma^2) pairs in model coordinates, predicting the
// variance at new points (clamped at zero).
class NoiseSurrogate {
public:
    static constexpr double kObservationNoise = 1e-6;

    NoiseSurrogate(const Matrix& unit_inputs, const Vector& variances, std::uint64_t seed,
                   const FitOptions& options = {});

    Vector predict(const Matrix& unit_points) const;
    NoiseEvaluation predict_with_gradient(const Matrix& unit_points) const;

    const GpModel& model() const { return model_; }
    const OutputScaling& scaling() const { return scaling_; }

private:
    OutputScaling scaling_;
    GpModel model_;
};

} // namespace beebo
