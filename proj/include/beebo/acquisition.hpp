#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "beebo/gp_core.hpp"

namespace beebo {

enum class EnergyVariant { mean, max };

// Inverse temperature of the softmax energy: either a fixed value or
// A^{-1/2} from the fitted kernel amplitude.
struct SoftmaxBeta {
    enum class Kind { fixed, amplitude_scaled };
    Kind kind = Kind::amplitude_scaled;
    double value = 0.0;

    static SoftmaxBeta fixed(double beta) { return {Kind::fixed, beta}; }
    static SoftmaxBeta amplitude_scaled() { return {Kind::amplitude_scaled, 0.0}; }

    double resolve(double amplitude) const;
};

// Above this inverse temperature the closed-form expectation is unreliable;
// requests are clamped and flagged.
inline constexpr double kMaxSoftmaxBeta = 5.0;

struct AcquisitionConfig {
    EnergyVariant variant = EnergyVariant::mean;
    double temperature = 0.0;
    SoftmaxBeta beta = SoftmaxBeta::amplitude_scaled();
    double alpha = 0.05;
    std::optional<double> y_max_reference; // standardized scale
    int mc_samples = 128;

    void validate() const;
};

// -sum(mu). The acquisition adds sum(mu), i.e. a = -E + T I.
double mean_energy(const Vector& mean);

// ½ logdet C - ½ logdet C_aug, both log-determinants from singular values.
double information_gain(const Matrix& covariance, const Matrix& augmented_covariance);

// log-determinant from the singular values of m. Throws NumericalError when
// a singular value is zero or the result is not finite.
double logdet_svd(const Matrix& m);

// Mass exp(beta_y * dy_max) given to the reference value, capped so the real
// points keep at least alpha of the total:
// min((1 - alpha) / alpha * N, exp(beta * dy_max)).
double beta_y(double beta, double delta_y_max, double softmax_partial_sum, double alpha);

// Same quantity in log space.
double log_beta_y(double beta, double delta_y_max, double log_softmax_partial_sum, double alpha);

// Second-order expansion of log sum exp(beta f) around f = mu.
struct SoftmaxExpansion {
    double beta = 0.0;
    bool beta_clamped = false;
    Vector weights;               // w, softmax of beta mu (plus reference mass)
    double reference_weight = 0.0;
    bool reference_capped = false; // the alpha cap on the reference mass is active
    Matrix coupling;              // W = diag(w) - w w^T
    Eigen::PartialPivLU<Matrix> solve_handle; // LU of U^{-1} = I + beta^2 C W
    double log_det_U = 0.0;       // log det U = -log det(I + beta^2 C W)
};

struct SoftmaxExpectation {
    double value = 0.0;
    SoftmaxExpansion expansion;
};

// Closed-form approximation of E[sum_i softmax(beta f)_i f_i] for
// f ~ N(mean, covariance), expanded at f = mean.
SoftmaxExpectation softmax_expectation(const Vector& mean, const Matrix& covariance, double beta,
                                       std::optional<double> y_max = std::nullopt,
                                       double alpha = 0.05);

struct SoftmaxExpectationGradient {
    double value = 0.0;
    Vector mean_gradient;       // d value / d mean
    Matrix covariance_gradient; // d value / d C, entrywise
    SoftmaxExpansion expansion;
};

SoftmaxExpectationGradient softmax_expectation_gradient(const Vector& mean, const Matrix& covariance,
                                                        double beta,
                                                        std::optional<double> y_max = std::nullopt,
                                                        double alpha = 0.05);

// exp(entropy) of the softmax weights, reference mass included when present.
double effective_points(const SoftmaxExpansion& expansion);

// Observation variance at candidate batch points and its gradient with
// respect to each point's own coordinates.
struct NoiseEvaluation {
    Vector variance; // Q
    Matrix gradient; // Q x d
};

using NoiseField = std::function<NoiseEvaluation(const Matrix& batch)>;

struct BeeboEvaluation {
    double value = 0.0;
    double energy_term = 0.0;      // sum mu, or Q * softmax expectation
    double information_gain = 0.0; // 0 when the temperature is 0
    double beta = 0.0;             // effective softmax beta (max variant)
    bool beta_clamped = false;
    Matrix gradient;               // Q x d, empty when not requested
};

BeeboEvaluation beebo_evaluate(const GpModel& model, const Matrix& batch, const Vector& batch_noise,
                               const AcquisitionConfig& config, bool with_gradient);

BeeboEvaluation beebo_evaluate(const GpModel& model, const Matrix& batch, const NoiseField& noise,
                               const AcquisitionConfig& config, bool with_gradient);

double beebo_score(const GpModel& model, const Matrix& batch, const Vector& batch_noise,
                   const AcquisitionConfig& config);

Matrix beebo_gradient(const GpModel& model, const Matrix& batch, const Vector& batch_noise,
                      const AcquisitionConfig& config);

Matrix beebo_gradient(const GpModel& model, const Matrix& batch, const NoiseField& noise,
                      const AcquisitionConfig& config);

struct Temperature {
    double T = 0.0;
    double T_prime = 0.0;
};

// T = nu sqrt(A) sqrt(kappa) with nu = 1/2; T' = T / sqrt(A).
Temperature temperature_from_kappa(double kappa, double amplitude);

// kappa such that T' = ½ sqrt(kappa).
double kappa_from_scaled_temperature(double t_prime);

// Monte-Carlo q-UCB with scrambled Sobol standard-normal draws:
// mean_s max_q [mu_q + sqrt(kappa pi / 2) |(L z_s)_q|].
double qucb_score(const GpModel& model, const Matrix& batch, double kappa, int mc_samples,
                  std::uint64_t seed);

struct QucbEvaluation {
    double value = 0.0;
    Matrix gradient; // Q x d
};

// Fixed base samples, so repeated calls with one seed define a smooth
// (piecewise) deterministic objective.
class QucbObjective {
public:
    QucbObjective(const GpModel& model, Eigen::Index batch_size, double kappa, int mc_samples,
                  std::uint64_t seed);

    QucbEvaluation evaluate(const Matrix& batch, bool with_gradient) const;

private:
    const GpModel* model_;
    double kappa_;
    Matrix base_samples_; // S x Q
};

} // namespace beebo
