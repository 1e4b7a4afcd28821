#include <chrono>
#include <random>

#include <gtest/gtest.h>

#include "beebo/errors.hpp"
#include "beebo/gp_core.hpp"
#include "fixtures.hpp"

using namespace beebo;
using beebo::testing::dense_augmented_covariance;
using beebo::testing::dense_kernel;
using beebo::testing::dense_posterior;
using beebo::testing::finite_difference;
using beebo::testing::random_model;
using beebo::testing::random_points;

namespace {

KernelParams iso(double amplitude, double l, int d) {
    KernelParams k;
    k.amplitude = amplitude;
    k.lengthscales = Vector::Constant(d, l);
    return k;
}

} // namespace

TEST(Matern52, ValueAtZeroDistanceIsAmplitude) {
    const Vector x = Vector::Constant(3, 0.4);
    EXPECT_DOUBLE_EQ(matern52(x, x, iso(2.5, 0.3, 3)), 2.5);
}

TEST(Matern52, KnownValueAtUnitScaledDistance) {
    // r = 1: (1 + sqrt5 + 5/3) exp(-sqrt5)
    Vector a(1), b(1);
    a << 0.0;
    b << 0.5;
    const double expected = (1.0 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0));
    EXPECT_NEAR(matern52(a, b, iso(1.0, 0.5, 1)), expected, 1e-15);
}

TEST(Matern52, KernelMatrixMatchesPointwiseOracle) {
    std::mt19937_64 rng(1);
    const Matrix a = random_points(rng, 4, 3), b = random_points(rng, 5, 3);
    KernelParams k;
    k.amplitude = 1.7;
    k.lengthscales = Vector::LinSpaced(3, 0.2, 0.9);
    EXPECT_LT((kernel_matrix(a, b, k) - dense_kernel(a, b, k)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Matern52, RejectsDimensionMismatch) {
    EXPECT_THROW(matern52(Vector::Zero(2), Vector::Zero(3), iso(1, 1, 2)), InvalidArgument);
}

TEST(KernelParams, RejectsNonPositiveValues) {
    EXPECT_THROW(iso(0.0, 1.0, 2).validate(), InvalidArgument);
    EXPECT_THROW(iso(1.0, -1.0, 2).validate(), InvalidArgument);
}

TEST(TrainingData, Validation) {
    TrainingData d{Matrix::Constant(2, 1, 0.5), Vector::Zero(3), Vector::Zero(2)};
    EXPECT_THROW(d.validate(), InvalidArgument);
    d.outputs = Vector::Zero(2);
    d.noise_variances << 0.1, -0.1;
    EXPECT_THROW(d.validate(), InvalidArgument);
    d.noise_variances << 0.1, 0.1;
    d.inputs(0, 0) = 1.5;
    EXPECT_THROW(d.validate(), InvalidArgument);
}

TEST(Cholesky, EscalatesJitterOnSingularMatrix) {
    const Matrix ones = Matrix::Ones(3, 3); // rank one
    const auto chol = cholesky_with_jitter(ones, 1.0);
    EXPECT_GT(chol.jitter, 0.0);
    Matrix shifted = ones;
    shifted.diagonal().array() += chol.jitter;
    EXPECT_LT((chol.lower * chol.lower.transpose() - shifted).norm(), 1e-10);
}

TEST(Cholesky, ThrowsWhenMatrixIsIndefinite) {
    Matrix m = Matrix::Identity(2, 2);
    m(1, 1) = -1.0;
    EXPECT_THROW(cholesky_with_jitter(m, 1.0), NumericalError);
}

TEST(Posterior, MatchesDenseInverseOnRandomInstances) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const GpModel model = random_model(rng, 3 + trial % 8, 1 + trial % 3);
        const Matrix x = random_points(rng, 1 + trial % 5, static_cast<int>(model.dim()));
        const auto post = posterior(model, x);
        const auto& d = model.data();
        const auto ref = dense_posterior(d.inputs, d.outputs, d.noise_variances, model.jitter(), model.kernel(), x);
        EXPECT_LT((post.mean - ref.mean).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((post.covariance - ref.covariance).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Posterior, EmptyDataGivesThePrior) {
    TrainingData empty{Matrix(0, 2), Vector(0), Vector(0)};
    const GpModel model(empty, iso(3.0, 0.4, 2));
    std::mt19937_64 rng(3);
    const Matrix x = random_points(rng, 4, 2);
    const auto post = posterior(model, x);
    EXPECT_TRUE(post.mean.isZero());
    EXPECT_LT((post.covariance - dense_kernel(x, x, model.kernel())).norm(), 1e-14);
}

TEST(Posterior, InterpolatesNearlyNoiselessData) {
    TrainingData d{Matrix::Constant(1, 1, 0.3), Vector::Constant(1, 2.0), Vector::Constant(1, 1e-10)};
    const GpModel model(d, iso(1.0, 0.2, 1));
    const auto post = posterior(model, d.inputs);
    EXPECT_NEAR(post.mean(0), 2.0, 1e-6);
    EXPECT_NEAR(post.covariance(0, 0), 0.0, 1e-6);
}

TEST(Posterior, RejectsWrongBatchDimension) {
    std::mt19937_64 rng(4);
    const GpModel model = random_model(rng, 4, 2);
    EXPECT_THROW(posterior(model, Matrix::Zero(2, 3)), InvalidArgument);
    EXPECT_THROW(posterior(model, Matrix(0, 2)), InvalidArgument);
}

TEST(AugmentedCovariance, MatchesDenseConditioning) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const GpModel model = random_model(rng, 2 + trial % 9, 1 + trial % 4);
        const int q = 1 + trial % 5;
        const Matrix x = random_points(rng, q, static_cast<int>(model.dim()));
        const Vector noise = Vector::Constant(q, 1e-2 + 0.01 * trial);
        const Matrix got = augmented_covariance(model, x, noise);
        EXPECT_LT((got - dense_augmented_covariance(model, x, noise)).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(AugmentedCovariance, FactorMatchesFullCholesky) {
    std::mt19937_64 rng(6);
    const GpModel model = random_model(rng, 7, 2);
    const Matrix x = random_points(rng, 3, 2);
    const Vector noise = Vector::Constant(3, 0.05);
    const Matrix l = augment_factorization(model, x, noise);
    Matrix xa(10, 2);
    xa << model.data().inputs, x;
    Matrix m = dense_kernel(xa, xa, model.kernel());
    Vector na(10);
    na << model.data().noise_variances, noise;
    m.diagonal() += na + Vector::Constant(10, model.jitter());
    EXPECT_LT((l * l.transpose() - m).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(AugmentedCovariance, DuplicatePointsWithZeroNoiseStillFactorize) {
    std::mt19937_64 rng(7);
    const GpModel model = random_model(rng, 5, 2);
    Matrix x(2, 2);
    x << 0.3, 0.3, 0.3, 0.3;
    const Matrix c = augmented_covariance(model, x, Vector::Zero(2));
    EXPECT_TRUE(c.allFinite());
    EXPECT_LT(c.diagonal().maxCoeff(), 1e-3);
}

TEST(MarginalLikelihood, MatchesDenseFormula) {
    std::mt19937_64 rng(8);
    const GpModel model = random_model(rng, 9, 2);
    const auto& d = model.data();
    Matrix m = dense_kernel(d.inputs, d.inputs, model.kernel());
    m.diagonal() += d.noise_variances + Vector::Constant(d.size(), model.jitter());
    const double dense = -0.5 * d.outputs.dot(m.inverse() * d.outputs) - 0.5 * std::log(m.determinant()) -
                         0.5 * d.size() * std::log(2.0 * std::acos(-1.0));
    EXPECT_NEAR(log_marginal_likelihood(d, model.kernel()), dense, 1e-9);
}

TEST(MarginalLikelihood, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        const GpModel model = random_model(rng, 8, 3, 1.3);
        const auto& d = model.data();
        const KernelParams k = model.kernel();
        Matrix theta(1, 4);
        theta(0, 0) = std::log(k.amplitude);
        theta.block(0, 1, 1, 3) = k.lengthscales.array().log().transpose();
        auto f = [&](const Matrix& t) {
            KernelParams p;
            p.amplitude = std::exp(t(0, 0));
            p.lengthscales = t.block(0, 1, 1, 3).transpose().array().exp();
            return log_marginal_likelihood(d, p);
        };
        const auto g = log_marginal_likelihood_gradient(d, k);
        const Matrix fd = finite_difference(f, theta, 1e-6);
        EXPECT_NEAR(g.value, f(theta), 1e-12);
        EXPECT_LT(beebo::testing::relative_error(g.gradient.transpose(), fd), 1e-5);
    }
}

TEST(HyperparameterFit, DeterministicAndImprovesPosterior) {
    std::mt19937_64 rng(10);
    TrainingData d;
    d.inputs = random_points(rng, 20, 2);
    d.outputs = (3.0 * d.inputs.col(0).array()).sin() + d.inputs.col(1).array().square();
    d.noise_variances = Vector::Constant(20, 1e-4);
    FitOptions opts;
    opts.restarts = 3;
    opts.steps = 100;
    const KernelParams a = fit_hyperparameters(d, 11, opts);
    const KernelParams b = fit_hyperparameters(d, 11, opts);
    EXPECT_EQ(a.amplitude, b.amplitude);
    EXPECT_EQ(a.lengthscales, b.lengthscales);
    KernelParams start = iso(1.0, 0.5, 2);
    EXPECT_GE(log_marginal_likelihood(d, a) + log_prior(a, opts),
              log_marginal_likelihood(d, start) + log_prior(start, opts));
    EXPECT_GE(a.amplitude, 1e-6);
    EXPECT_LE(a.amplitude, 1e4);
}

TEST(HyperparameterFit, RequiresData) {
    TrainingData empty{Matrix(0, 2), Vector(0), Vector(0)};
    EXPECT_THROW(fit_hyperparameters(empty, 1), InsufficientData);
}

TEST(Scaling, InputRoundTrip) {
    const InputScaling s{Vector::Constant(2, -5.0), Vector::Constant(2, 10.0)};
    Matrix x(2, 2);
    x << -5.0, 10.0, 2.5, 0.0;
    const Matrix u = s.to_unit(x);
    EXPECT_DOUBLE_EQ(u(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(u(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(u(1, 0), 0.5);
    EXPECT_LT((s.from_unit(u) - x).norm(), 1e-12);
}

TEST(Scaling, OutputStandardizes) {
    Vector y(4);
    y << 1.0, 2.0, 3.0, 4.0;
    const auto s = OutputScaling::fit(y);
    const Vector z = s.forward(y);
    EXPECT_NEAR(z.mean(), 0.0, 1e-15);
    EXPECT_LT((s.inverse(z) - y).norm(), 1e-14);
    const auto c = OutputScaling::fit(Vector::Constant(3, 7.0));
    EXPECT_EQ(c.scale, 1.0);
}

TEST(Matern52, Symmetric) {
    std::mt19937_64 rng(20);
    KernelParams k;
    k.amplitude = 1.3;
    k.lengthscales = Vector::LinSpaced(4, 0.1, 0.7);
    for (int t = 0; t < 10; ++t) {
        const Matrix p = random_points(rng, 2, 4);
        const Vector a = p.row(0).transpose(), b = p.row(1).transpose();
        EXPECT_NEAR(matern52(a, b, k), matern52(b, a, k), 1e-15);
    }
}

TEST(MarginalLikelihood, ScalarHandComputation) {
    // K = 0.5, sigma^2 = 0.5, so M = 1 (+ jitter)
    const double y = 0.7;
    TrainingData d{Matrix::Constant(1, 1, 0.5), Vector::Constant(1, y), Vector::Constant(1, 0.5)};
    const double m = 1.0 + kInitialJitter * 0.5;
    const double expected = -0.5 * y * y / m - 0.5 * std::log(m) - 0.5 * std::log(2.0 * std::acos(-1.0));
    EXPECT_NEAR(log_marginal_likelihood(d, iso(0.5, 0.3, 1)), expected, 1e-14);
}

TEST(MarginalLikelihood, DuplicateWithLargeNoiseIsContinuous) {
    std::mt19937_64 rng(21);
    const GpModel model = random_model(rng, 5, 2);
    TrainingData d = model.data();
    const double base = log_marginal_likelihood(d, model.kernel());
    d.inputs.conservativeResize(6, 2);
    d.inputs.row(5) = d.inputs.row(0);
    d.outputs.conservativeResize(6);
    d.outputs(5) = d.outputs(0);
    d.noise_variances.conservativeResize(6);
    d.noise_variances(5) = 1e8;
    const double with_dup = log_marginal_likelihood(d, model.kernel());
    // the extra point contributes roughly -½ log(2 pi 1e8)
    EXPECT_NEAR(with_dup - base, -0.5 * std::log(2.0 * std::acos(-1.0) * 1e8), 1e-3);
}

TEST(HyperparameterFit, RecoversLengthscaleOfSampledFunction) {
    std::mt19937_64 rng(22);
    const int n = 200;
    TrainingData d;
    d.inputs = random_points(rng, n, 1);
    const KernelParams truth = iso(1.0, 0.2, 1);
    Matrix k = dense_kernel(d.inputs, d.inputs, truth);
    k.diagonal().array() += 1e-6;
    const Matrix l = k.llt().matrixL();
    std::normal_distribution<double> z(0.0, 1.0);
    d.outputs = l * Vector::NullaryExpr(n, [&] { return z(rng); });
    d.noise_variances = Vector::Constant(n, 1e-6);
    FitOptions opts;
    opts.restarts = 2;
    opts.steps = 150;
    const KernelParams fit = fit_hyperparameters(d, 3, opts);
    EXPECT_GT(fit.lengthscales(0), 0.1);
    EXPECT_LT(fit.lengthscales(0), 0.4);
}

TEST(HyperparameterFit, ConstantOutputsGiveNearZeroSignal) {
    std::mt19937_64 rng(23);
    TrainingData d{random_points(rng, 20, 2), Vector::Zero(20), Vector::Constant(20, 1e-6)};
    FitOptions opts;
    opts.restarts = 2;
    opts.steps = 200;
    EXPECT_LE(fit_hyperparameters(d, 1, opts).amplitude, 1e-2);
}

TEST(Posterior, CovarianceInvariants) {
    std::mt19937_64 rng(24);
    for (int t = 0; t < 20; ++t) {
        const GpModel model = random_model(rng, 2 + t % 9, 2, 0.5 + t * 0.1, 1e-6, 1e-2);
        const auto post = posterior(model, random_points(rng, 5, 2));
        const Matrix& c = post.covariance;
        EXPECT_LT((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-10);
        const Eigen::SelfAdjointEigenSolver<Matrix> es(c);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * model.kernel().amplitude);
        EXPECT_GE(c.diagonal().minCoeff(), 0.0);
        EXPECT_LE(c.diagonal().maxCoeff(), model.kernel().amplitude + 1e-8);
    }
}

TEST(Posterior, CovariancesDoNotDependOnOutputs) {
    std::mt19937_64 rng(25);
    const GpModel a = random_model(rng, 8, 3);
    TrainingData other = a.data();
    other.outputs = Vector::LinSpaced(8, -50.0, 50.0);
    const GpModel b(other, a.kernel());
    const Matrix x = random_points(rng, 4, 3);
    const Vector noise = Vector::Constant(4, 0.01);
    EXPECT_EQ(posterior(a, x).covariance, posterior(b, x).covariance);
    EXPECT_EQ(augmented_covariance(a, x, noise), augmented_covariance(b, x, noise));
}

TEST(AugmentedCovariance, ScalarPriorCase) {
    TrainingData empty{Matrix(0, 1), Vector(0), Vector(0)};
    const GpModel model(empty, iso(2.0, 0.3, 1));
    const double s2 = 0.3, a = 2.0;
    const Matrix c = augmented_covariance(model, Matrix::Constant(1, 1, 0.4), Vector::Constant(1, s2));
    EXPECT_NEAR(c(0, 0), a * s2 / (a + s2), 1e-7);
}

TEST(AugmentedCovariance, ConditioningReducesVariance) {
    std::mt19937_64 rng(26);
    for (int t = 0; t < 20; ++t) {
        const GpModel model = random_model(rng, 1 + t % 10, 2);
        const Matrix x = random_points(rng, 1 + t % 4, 2);
        const Vector noise = Vector::Constant(x.rows(), 0.01 * (1 + t));
        const Matrix c = posterior(model, x).covariance;
        const Matrix ca = augmented_covariance(model, x, noise);
        EXPECT_TRUE(((ca.diagonal() - c.diagonal()).array() <= 1e-12).all());
    }
}

TEST(AugmentedCovariance, ReconstructsLargerSystems) {
    std::mt19937_64 rng(27);
    const GpModel model = random_model(rng, 50, 3);
    const Matrix x = random_points(rng, 5, 3);
    const Vector noise = Vector::Constant(5, 0.02);
    const Matrix l = augment_factorization(model, x, noise);
    Matrix xa(55, 3);
    xa << model.data().inputs, x;
    Vector na(55);
    na << model.data().noise_variances, noise;
    Matrix m = dense_kernel(xa, xa, model.kernel());
    m.diagonal() += na + Vector::Constant(55, model.jitter());
    EXPECT_LT((l * l.transpose() - m).norm(), 1e-10);
}

TEST(AugmentedCovariance, EmptyModelIsPlainCholesky) {
    TrainingData empty{Matrix(0, 2), Vector(0), Vector(0)};
    const GpModel model(empty, iso(1.0, 0.4, 2));
    std::mt19937_64 rng(28);
    const Matrix x = random_points(rng, 4, 2);
    const Vector noise = Vector::Constant(4, 0.1);
    Matrix m = dense_kernel(x, x, model.kernel());
    m.diagonal() += noise + Vector::Constant(4, model.jitter());
    const Matrix expected = m.llt().matrixL();
    EXPECT_LT((augment_factorization(model, x, noise) - expected).norm(), 1e-12);
}

TEST(AugmentedCovariance, BlockUpdateBeatsRefactorizationAtScale) {
    std::mt19937_64 rng(29);
    const GpModel model = random_model(rng, 2000, 4, 1.0, 1e-2, 1e-1);
    const Matrix x = random_points(rng, 100, 4);
    const Vector noise = Vector::Constant(100, 0.05);
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const Matrix block = augment_factorization(model, x, noise);
    const auto t1 = clock::now();
    Matrix xa(2100, 4);
    xa << model.data().inputs, x;
    Vector na(2100);
    na << model.data().noise_variances, noise;
    Matrix m = kernel_matrix(xa, xa, model.kernel());
    m.diagonal() += na;
    const auto full = cholesky_with_jitter(m, 1.0);
    const auto t2 = clock::now();
    EXPECT_LT(t1 - t0, t2 - t1);
    EXPECT_LT((block - full.lower).cwiseAbs().maxCoeff(), 1e-8);
}
