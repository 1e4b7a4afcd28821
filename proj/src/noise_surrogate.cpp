#include "beebo/errors.hpp"
#include "beebo/problems.hpp"
#include "kernel_detail.hpp"

namespace beebo {

namespace {

TrainingData noise_training_data(const Matrix& x, const Vector& variances, const OutputScaling& scaling) {
    TrainingData data;
    data.inputs = x;
    data.outputs = scaling.forward(variances);
    data.noise_variances = Vector::Constant(x.rows(), NoiseSurrogate::kObservationNoise);
    return data;
}

GpModel fit_noise_model(const Matrix& x, const Vector& variances, const OutputScaling& scaling,
                        std::uint64_t seed, const FitOptions& options) {
    if (x.rows() != variances.size()) {
        throw InvalidArgument("NoiseSurrogate: inputs and variances differ in length");
    }
    auto data = noise_training_data(x, variances, scaling);
    auto params = fit_hyperparameters(data, seed, options);
    return GpModel(std::move(data), std::move(params));
}

} // namespace

NoiseSurrogate::NoiseSurrogate(const Matrix& unit_inputs, const Vector& variances, std::uint64_t seed,
                               const FitOptions& options)
    : scaling_(OutputScaling::fit(variances)),
      model_(fit_noise_model(unit_inputs, variances, scaling_, seed, options)) {}

Vector NoiseSurrogate::predict(const Matrix& unit_points) const {
    const Vector mean = posterior(model_, unit_points).mean;
    return scaling_.inverse(mean).cwiseMax(0.0);
}

NoiseEvaluation NoiseSurrogate::predict_with_gradient(const Matrix& unit_points) const {
    const auto q = unit_points.rows();
    const auto d = unit_points.cols();
    const Matrix cross = kernel_matrix(unit_points, model_.data().inputs, model_.kernel());
    const Vector raw = scaling_.inverse(cross * model_.weights());
    NoiseEvaluation out;
    out.variance = raw.cwiseMax(0.0);
    out.gradient = Matrix::Zero(q, d);
    Vector dk(d);
    const Matrix& xd = model_.data().inputs;
    for (Eigen::Index i = 0; i < q; ++i) {
        if (raw(i) <= 0.0) continue; // clamped
        for (Eigen::Index j = 0; j < xd.rows(); ++j) {
            detail::matern52_grad_first(unit_points.row(i), xd.row(j), model_.kernel(), dk);
            out.gradient.row(i) += (scaling_.scale * model_.weights()(j)) * dk.transpose();
        }
    }
    return out;
}

} // namespace beebo
