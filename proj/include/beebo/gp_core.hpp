#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace beebo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Observed data in model coordinates: inputs in the unit cube, standardized
// outputs, and the per-point observation variances on the same scale.
struct TrainingData {
    Matrix inputs;          // N x d
    Vector outputs;         // N
    Vector noise_variances; // N

    Eigen::Index size() const { return inputs.rows(); }
    Eigen::Index dim() const { return inputs.cols(); }

    // Throws InvalidArgument when shapes disagree, a variance is negative or
    // an input leaves [0, 1]^d.
    void validate() const;
};

struct KernelParams {
    double amplitude = 1.0;
    Vector lengthscales;

    Eigen::Index dim() const { return lengthscales.size(); }
    void validate() const;
};

struct PosteriorGaussian {
    Vector mean;       // Q
    Matrix covariance; // Q x Q
};

// Matern-5/2 ARD kernel A (1 + sqrt5 r + 5r^2/3) exp(-sqrt5 r).
double matern52(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x2,
                const KernelParams& params);

// K(a, b) with rows of a and b as points.
Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelParams& params);

// Jitter added to the diagonal before factorizing, relative to the amplitude.
inline constexpr double kInitialJitter = 1e-8;
inline constexpr double kMaxJitter = 1e-4;

struct JitteredCholesky {
    Matrix lower;
    double jitter = 0.0; // absolute value that was added to the diagonal
};

// Cholesky of m + jitter I, escalating the jitter x10 from 1e-8 A up to
// 1e-4 A. Throws NumericalError when every level fails.
JitteredCholesky cholesky_with_jitter(const Matrix& m, double amplitude,
                                      double start_relative = kInitialJitter);

// Exact GP conditioned on TrainingData. Immutable after construction.
class GpModel {
public:
    GpModel(TrainingData data, KernelParams kernel);

    const TrainingData& data() const { return data_; }
    const KernelParams& kernel() const { return kernel_; }

    // Lower Cholesky factor of M_D = K(x_D, x_D) + diag(noise) + jitter I.
    const Matrix& factor() const { return factor_; }
    double jitter() const { return jitter_; }

    // M_D^{-1} y_D.
    const Vector& weights() const { return weights_; }

    Eigen::Index size() const { return data_.size(); }
    Eigen::Index dim() const { return kernel_.dim(); }

private:
    TrainingData data_;
    KernelParams kernel_;
    Matrix factor_;
    Vector weights_;
    double jitter_ = 0.0;
};

// Quantities shared between the posterior, the augmented covariance and the
// gradient pass, for one batch.
struct PosteriorWorkspace {
    Matrix cross_kernel; // Q x N, K(x, x_D)
    Matrix whitened;     // N x Q, L^{-1} K(x_D, x)
    PosteriorGaussian posterior;
};

PosteriorWorkspace posterior_workspace(const GpModel& model, const Matrix& batch);

PosteriorGaussian posterior(const GpModel& model, const Matrix& test_points);

// Pulls adjoints of the posterior mean (Q) and covariance (Q x Q, treated as
// acting on a symmetric matrix) back to the batch coordinates (Q x d).
Matrix posterior_backprop(const GpModel& model, const Matrix& batch,
                          const PosteriorWorkspace& workspace, const Vector& mean_adjoint,
                          const Matrix& covariance_adjoint);

// Cholesky factor of the Q x Q Schur block C(x) + diag(noise) + jitter I that
// completes the factor of M_aug; jitter matches the model's.
struct AugmentedBlock {
    Matrix lower;
    double jitter = 0.0;
    bool refactorized = false; // block update failed and the full matrix was refactorized
    Matrix full_factor;        // only set when refactorized
};

AugmentedBlock augment_block(const GpModel& model, const Matrix& batch, const Vector& batch_noise,
                             const PosteriorWorkspace& workspace);

// Lower Cholesky factor of M_aug = K(x_aug, x_aug) + diag(noise_aug) + jitter I,
// obtained by extending the cached factor of M_D.
Matrix augment_factorization(const GpModel& model, const Matrix& batch, const Vector& batch_noise);

// Covariance at the batch after conditioning on hypothetical observations at
// the batch itself with the given noise. Independent of y.
Matrix augmented_covariance(const GpModel& model, const Matrix& batch, const Vector& batch_noise);

// -1/2 y^T M^{-1} y - 1/2 logdet M - N/2 log 2 pi.
double log_marginal_likelihood(const TrainingData& data, const KernelParams& params);

struct LikelihoodGradient {
    double value = 0.0;
    Vector gradient; // d/d log A, then d/d log l_j
};

LikelihoodGradient log_marginal_likelihood_gradient(const TrainingData& data,
                                                    const KernelParams& params);

// Gamma(shape, rate) priors on lengthscales and amplitude plus the MAP fit
// schedule (Adam in log space).
struct FitOptions {
    double lengthscale_shape = 3.0;
    double lengthscale_rate = 6.0;
    double amplitude_shape = 2.0;
    double amplitude_rate = 0.15;
    int restarts = 8;
    int steps = 200;
    double learning_rate = 0.05;
};

double log_prior(const KernelParams& params, const FitOptions& options = {});

// MAP estimate of the kernel hyperparameters. Deterministic given seed.
KernelParams fit_hyperparameters(const TrainingData& data, std::uint64_t seed,
                                 const FitOptions& options = {});

// Affine maps between problem coordinates and model coordinates.
struct InputScaling {
    Vector lower;
    Vector upper;

    Matrix to_unit(const Matrix& x) const;
    Matrix from_unit(const Matrix& u) const;
};

struct OutputScaling {
    double mean = 0.0;
    double scale = 1.0; // standard deviation, 1 for constant outputs

    static OutputScaling fit(const Vector& y);
    Vector forward(const Vector& y) const { return (y.array() - mean) / scale; }
    Vector inverse(const Vector& z) const { return z.array() * scale + mean; }
    Vector forward_variance(const Vector& v) const { return v / (scale * scale); }
};

} // namespace beebo
