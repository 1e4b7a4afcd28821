#include "beebo/gp_core.hpp"

#include <cmath>
#include <string>

#include "beebo/errors.hpp"
#include "kernel_detail.hpp"

namespace beebo {

void TrainingData::validate() const {
    const auto n = inputs.rows();
    if (outputs.size() != n || noise_variances.size() != n) {
        throw InvalidArgument("TrainingData: inputs, outputs and noise_variances disagree in length");
    }
    if (!inputs.allFinite() || !outputs.allFinite() || !noise_variances.allFinite()) {
        throw InvalidArgument("TrainingData: non-finite entries");
    }
    if (n > 0 && (noise_variances.array() < 0.0).any()) {
        throw InvalidArgument("TrainingData: negative noise variance");
    }
    if (n > 0 && ((inputs.array() < 0.0).any() || (inputs.array() > 1.0).any())) {
        throw InvalidArgument("TrainingData: inputs must lie in the unit cube");
    }
}

void KernelParams::validate() const {
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
        throw InvalidArgument("KernelParams: amplitude must be positive");
    }
    if (lengthscales.size() == 0 || !lengthscales.allFinite() || (lengthscales.array() <= 0.0).any()) {
        throw InvalidArgument("KernelParams: lengthscales must be positive");
    }
}

double matern52(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x2,
                const KernelParams& params) {
    if (x.size() != params.dim() || x2.size() != params.dim()) {
        throw InvalidArgument("matern52: dimension mismatch");
    }
    if (!x.allFinite() || !x2.allFinite()) {
        throw InvalidArgument("matern52: non-finite input");
    }
    const double r = std::sqrt(((x - x2).array() / params.lengthscales.array()).square().sum());
    return detail::matern52_of_r(r, params.amplitude);
}

Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelParams& params) {
    if (a.cols() != params.dim() || b.cols() != params.dim()) {
        throw InvalidArgument("kernel_matrix: dimension mismatch");
    }
    const Eigen::RowVectorXd inv_ls = params.lengthscales.cwiseInverse().transpose();
    const Matrix sa = a.array().rowwise() * inv_ls.array();
    const Matrix sb = b.array().rowwise() * inv_ls.array();
    Matrix k(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const double r = std::sqrt((sa.row(i) - sb.row(j)).squaredNorm());
            k(i, j) = detail::matern52_of_r(r, params.amplitude);
        }
    }
    return k;
}

JitteredCholesky cholesky_with_jitter(const Matrix& m, double amplitude, double start_relative) {
    const auto n = m.rows();
    for (double rel = start_relative; rel <= kMaxJitter * (1.0 + 1e-9); rel *= 10.0) {
        const double jitter = rel * amplitude;
        Matrix shifted = m;
        shifted.diagonal().array() += jitter;
        Eigen::LLT<Matrix> llt(shifted);
        if (llt.info() == Eigen::Success) {
            Matrix lower = llt.matrixL();
            if (lower.diagonal().allFinite() && (lower.diagonal().array() > 0.0).all()) {
                return {std::move(lower), jitter};
            }
        }
    }
    throw NumericalError("Cholesky factorization failed at every jitter level (n=" + std::to_string(n) + ")");
}

GpModel::GpModel(TrainingData data, KernelParams kernel)
    : data_(std::move(data)), kernel_(std::move(kernel)) {
    kernel_.validate();
    data_.validate();
    if (data_.size() > 0 && data_.dim() != kernel_.dim()) {
        throw InvalidArgument("GpModel: data dimension does not match the kernel");
    }
    if (data_.size() == 0) {
        data_.inputs.resize(0, kernel_.dim());
        factor_.resize(0, 0);
        weights_.resize(0);
        jitter_ = kInitialJitter * kernel_.amplitude;
        return;
    }
    Matrix m = kernel_matrix(data_.inputs, data_.inputs, kernel_);
    m.diagonal() += data_.noise_variances;
    auto chol = cholesky_with_jitter(m, kernel_.amplitude);
    factor_ = std::move(chol.lower);
    jitter_ = chol.jitter;
    weights_ = factor_.triangularView<Eigen::Lower>().solve(data_.outputs);
    factor_.triangularView<Eigen::Lower>().transpose().solveInPlace(weights_);
}

namespace {

void check_batch(const GpModel& model, const Matrix& batch) {
    if (batch.rows() < 1) {
        throw InvalidArgument("batch must contain at least one point");
    }
    if (batch.cols() != model.dim()) {
        throw InvalidArgument("batch dimension does not match the model");
    }
    if (!batch.allFinite()) {
        throw InvalidArgument("batch contains non-finite coordinates");
    }
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

} // namespace

PosteriorWorkspace posterior_workspace(const GpModel& model, const Matrix& batch) {
    check_batch(model, batch);
    PosteriorWorkspace ws;
    const Matrix kxx = kernel_matrix(batch, batch, model.kernel());
    if (model.size() == 0) {
        ws.cross_kernel.resize(batch.rows(), 0);
        ws.whitened.resize(0, batch.rows());
        ws.posterior.mean = Vector::Zero(batch.rows());
        ws.posterior.covariance = kxx;
        return ws;
    }
    ws.cross_kernel = kernel_matrix(batch, model.data().inputs, model.kernel());
    ws.whitened = model.factor().triangularView<Eigen::Lower>().solve(ws.cross_kernel.transpose());
    ws.posterior.mean = ws.cross_kernel * model.weights();
    Matrix cov = kxx;
    cov.noalias() -= ws.whitened.transpose() * ws.whitened;
    ws.posterior.covariance = symmetrized(cov);
    return ws;
}

PosteriorGaussian posterior(const GpModel& model, const Matrix& test_points) {
    return posterior_workspace(model, test_points).posterior;
}

Matrix posterior_backprop(const GpModel& model, const Matrix& batch,
                          const PosteriorWorkspace& workspace, const Vector& mean_adjoint,
                          const Matrix& covariance_adjoint) {
    const auto q = batch.rows();
    const auto n = model.size();
    const auto& params = model.kernel();
    const Matrix cov_bar = symmetrized(covariance_adjoint);

    Matrix grad = Matrix::Zero(q, batch.cols());
    Vector dk(batch.cols());
    for (Eigen::Index i = 0; i < q; ++i) {
        for (Eigen::Index r = 0; r < q; ++r) {
            if (r == i || cov_bar(i, r) == 0.0) continue;
            detail::matern52_grad_first(batch.row(i), batch.row(r), params, dk);
            grad.row(i) += 2.0 * cov_bar(i, r) * dk.transpose();
        }
    }
    if (n == 0) return grad;

    // Z = M_D^{-1} K(x_D, x)
    const Matrix z = model.factor().triangularView<Eigen::Lower>().transpose().solve(workspace.whitened);
    Matrix cross_bar = mean_adjoint * model.weights().transpose();
    cross_bar.noalias() -= 2.0 * cov_bar * z.transpose();

    const Matrix& xd = model.data().inputs;
    for (Eigen::Index i = 0; i < q; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double w = cross_bar(i, j);
            if (w == 0.0) continue;
            detail::matern52_grad_first(batch.row(i), xd.row(j), params, dk);
            grad.row(i) += w * dk.transpose();
        }
    }
    return grad;
}

namespace {

Matrix full_augmented_matrix(const GpModel& model, const Matrix& batch, const Vector& batch_noise) {
    const auto n = model.size();
    const auto q = batch.rows();
    Matrix x_aug(n + q, batch.cols());
    if (n > 0) x_aug.topRows(n) = model.data().inputs;
    x_aug.bottomRows(q) = batch;
    Matrix m = kernel_matrix(x_aug, x_aug, model.kernel());
    if (n > 0) m.diagonal().head(n) += model.data().noise_variances;
    m.diagonal().tail(q) += batch_noise;
    return m;
}

void check_noise(const Matrix& batch, const Vector& batch_noise) {
    if (batch_noise.size() != batch.rows()) {
        throw InvalidArgument("batch_noise must have one entry per batch point");
    }
    if (!batch_noise.allFinite() || (batch_noise.array() < 0.0).any()) {
        throw InvalidArgument("batch_noise entries must be finite and nonnegative");
    }
}

} // namespace

AugmentedBlock augment_block(const GpModel& model, const Matrix& batch, const Vector& batch_noise,
                             const PosteriorWorkspace& workspace) {
    check_noise(batch, batch_noise);
    AugmentedBlock block;
    Matrix schur = workspace.posterior.covariance;
    schur.diagonal() += batch_noise;
    schur.diagonal().array() += model.jitter();
    Eigen::LLT<Matrix> llt(schur);
    if (llt.info() == Eigen::Success && (Matrix(llt.matrixL()).diagonal().array() > 0.0).all()) {
        block.lower = llt.matrixL();
        block.jitter = model.jitter();
        return block;
    }
    // Escalate the jitter on the whole augmented matrix.
    const double amplitude = model.kernel().amplitude;
    const double start = 10.0 * model.jitter() / amplitude;
    if (start > kMaxJitter * (1.0 + 1e-9)) {
        throw NumericalError("augmented factorization failed at the maximal jitter level");
    }
    auto chol = cholesky_with_jitter(full_augmented_matrix(model, batch, batch_noise), amplitude, start);
    const auto n = model.size();
    const auto q = batch.rows();
    block.lower = chol.lower.bottomRightCorner(q, q);
    block.jitter = chol.jitter;
    block.refactorized = true;
    block.full_factor = std::move(chol.lower);
    (void)n;
    return block;
}

Matrix augment_factorization(const GpModel& model, const Matrix& batch, const Vector& batch_noise) {
    const auto ws = posterior_workspace(model, batch);
    auto block = augment_block(model, batch, batch_noise, ws);
    if (block.refactorized) return block.full_factor;
    const auto n = model.size();
    const auto q = batch.rows();
    Matrix lower = Matrix::Zero(n + q, n + q);
    if (n > 0) {
        lower.topLeftCorner(n, n) = model.factor();
        lower.bottomLeftCorner(q, n) = ws.whitened.transpose();
    }
    lower.bottomRightCorner(q, q) = block.lower;
    return lower;
}

Matrix augmented_covariance(const GpModel& model, const Matrix& batch, const Vector& batch_noise) {
    const auto ws = posterior_workspace(model, batch);
    const auto block = augment_block(model, batch, batch_noise, ws);
    const Matrix& cov = ws.posterior.covariance;
    if (!block.refactorized) {
        // C_aug = C - C (C + S)^{-1} C
        const Matrix g = block.lower.triangularView<Eigen::Lower>().solve(cov);
        Matrix out = cov;
        out.noalias() -= g.transpose() * g;
        return symmetrized(out);
    }
    const auto n = model.size();
    const auto q = batch.rows();
    Matrix x_aug(n + q, batch.cols());
    if (n > 0) x_aug.topRows(n) = model.data().inputs;
    x_aug.bottomRows(q) = batch;
    const Matrix k_aug_x = kernel_matrix(x_aug, batch, model.kernel());
    const Matrix w = block.full_factor.triangularView<Eigen::Lower>().solve(k_aug_x);
    Matrix out = kernel_matrix(batch, batch, model.kernel());
    out.noalias() -= w.transpose() * w;
    return symmetrized(out);
}

Matrix InputScaling::to_unit(const Matrix& x) const {
    const Eigen::RowVectorXd span = (upper - lower).transpose();
    return (x.rowwise() - lower.transpose()).array().rowwise() / span.array();
}

Matrix InputScaling::from_unit(const Matrix& u) const {
    const Eigen::RowVectorXd span = (upper - lower).transpose();
    return (u.array().rowwise() * span.array()).matrix().rowwise() + lower.transpose();
}

OutputScaling OutputScaling::fit(const Vector& y) {
    OutputScaling s;
    if (y.size() == 0) return s;
    s.mean = y.mean();
    if (y.size() > 1) {
        const double var = (y.array() - s.mean).square().sum() / static_cast<double>(y.size() - 1);
        const double sd = std::sqrt(var);
        s.scale = (sd > 0.0 && std::isfinite(sd)) ? sd : 1.0;
    }
    return s;
}

} // namespace beebo
