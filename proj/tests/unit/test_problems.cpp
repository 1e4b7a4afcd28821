#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "beebo/errors.hpp"
#include "beebo/problems.hpp"

using namespace beebo;

namespace {

struct Known {
    const char* id;
    double optimum;
    double tolerance;
};

} // namespace

TEST(Problems, OptimumValuesMatchLiterature) {
    const Known known[] = {
        {"ackley-2", 0.0, 1e-12},          {"ackley-10", 0.0, 1e-12},
        {"levy-10", 0.0, 1e-12},           {"rastrigin-20", 0.0, 1e-12},
        {"rosenbrock-2", 0.0, 1e-12},      {"styblinski_tang-2", 2 * 39.16616570377142, 1e-9},
        {"powell-10", 0.0, 1e-12},         {"shekel-4", 10.5364, 1e-4},
        {"hartmann-6", 3.32237, 1e-5},     {"embedded_hartmann-100", 3.32237, 1e-5},
        {"cosine-8", 0.8, 1e-12},          {"branin-2", -0.397887, 1e-6},
        {"branin_hetero-2", -0.397887, 1e-6},
    };
    for (const auto& k : known) {
        const ProblemSpec p = make_problem(k.id);
        EXPECT_NEAR(p.optimum_value, k.optimum, k.tolerance) << k.id;
        for (const auto& x : p.optima) {
            EXPECT_NEAR(p.evaluate(x), p.optimum_value, 1e-6) << k.id;
            EXPECT_TRUE(p.contains(x)) << k.id;
        }
    }
}

TEST(Problems, OptimumDominatesRandomPoints) {
    std::mt19937_64 rng(1);
    for (const auto& id : list_problems()) {
        const ProblemSpec p = make_problem(id);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int s = 0; s < 200; ++s) {
            Vector x(p.dimension);
            for (int j = 0; j < p.dimension; ++j)
                x(j) = p.bounds.lower(j) + u(rng) * (p.bounds.upper(j) - p.bounds.lower(j));
            EXPECT_LE(p.evaluate(x), p.optimum_value + 1e-9) << id;
        }
    }
}

TEST(Problems, BraninHasThreeEqualOptima) {
    const ProblemSpec p = make_problem("branin-2");
    ASSERT_EQ(p.optima.size(), 3u);
    EXPECT_NEAR(p.optima[0](0), 3 * std::numbers::pi, 1e-12);
    EXPECT_NEAR(p.optima[1](0), -std::numbers::pi, 1e-12);
    EXPECT_NEAR(p.optima[2](1), 2.275, 1e-12);
    for (const auto& x : p.optima) EXPECT_NEAR(p.evaluate(x), -0.39788735772973816, 1e-12);
}

TEST(Problems, UnknownIdsAreRejected) {
    EXPECT_THROW(make_problem("nope-2"), UnknownProblem);
    EXPECT_THROW(make_problem("ackley"), UnknownProblem);
    EXPECT_THROW(make_problem("ackley-0"), UnknownProblem);
    EXPECT_THROW(make_problem("hartmann-3"), UnknownProblem);
    EXPECT_THROW(make_problem("powell-3"), UnknownProblem);
}

TEST(Problems, EvaluateBatchRejectsOutOfBoundsPoints) {
    const ProblemSpec p = make_problem("branin-2");
    Matrix x(1, 2);
    x << 11.0, 1.0;
    EXPECT_THROW(evaluate_batch(p, x), DomainError);
}

TEST(BraninNoise, PeaksAtNoisedOptimaAndDecays) {
    const ProblemSpec p = make_problem("branin_hetero-2");
    EXPECT_NEAR(branin_noise(p.optima[1]), 100.0, 1e-12);
    EXPECT_NEAR(branin_noise(p.optima[2]), 100.0, 1e-12);
    const double at_first = branin_noise(p.optima[0]);
    EXPECT_NEAR(at_first, 100.0 * std::exp(-0.05 * 2.0 * std::numbers::pi * std::hypot(1.0, 0.2 / (2 * std::numbers::pi))), 1e-9);
    EXPECT_LT(at_first, 100.0);
    EXPECT_EQ(p.noise_kind, NoiseKind::heteroskedastic);
    EXPECT_EQ(make_problem("branin_homo-2").noise_field(p.optima[0]), kBraninHomoskedasticNoise);
}

TEST(Observe, NoiseFreeProblemsReturnExactValues) {
    const ProblemSpec p = make_problem("hartmann-6");
    const Matrix x = Matrix::Constant(3, 6, 0.25);
    const auto obs = observe(p, x, 1);
    EXPECT_TRUE(obs.sigma2.isZero());
    EXPECT_EQ(obs.y, evaluate_batch(p, x));
}

TEST(Observe, NoisyObservationsAreDeterministicAndCarryTrueVariance) {
    const ProblemSpec p = make_problem("branin_hetero-2");
    Matrix x(2, 2);
    x << 0.0, 5.0, 9.0, 3.0;
    const auto a = observe(p, x, 5), b = observe(p, x, 5);
    EXPECT_EQ(a.y, b.y);
    EXPECT_NEAR(a.sigma2(0), branin_noise(x.row(0).transpose()), 1e-12);
    EXPECT_NE(a.y, observe(p, x, 6).y);
}

TEST(SeedPoints, RespectMinimumDistanceAndBounds) {
    const ProblemSpec p = make_problem("branin-2");
    const Matrix x = sample_seed_points(p, 200, 0.5, 3);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        EXPECT_TRUE(p.contains(x.row(i).transpose()));
        for (const auto& opt : p.optima) EXPECT_GE((x.row(i).transpose() - opt).norm(), 0.5);
    }
    EXPECT_EQ(x, sample_seed_points(p, 200, 0.5, 3));
}

TEST(SeedPoints, InfeasibleDistanceThrows) {
    const ProblemSpec p = make_problem("hartmann-6");
    EXPECT_THROW(sample_seed_points(p, 1, 100.0, 1), InfeasibleConstraint);
}

TEST(NoiseSurrogate, RecoversSmoothVarianceField) {
    const ProblemSpec p = make_problem("branin_hetero-2");
    const Matrix x = sample_seed_points(p, 40, 0.0, 9);
    const InputScaling s{p.bounds.lower, p.bounds.upper};
    Vector v(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) v(i) = branin_noise(x.row(i).transpose());
    const NoiseSurrogate ns(s.to_unit(x), v, 4);
    Matrix probe(3, 2);
    for (int j = 0; j < 3; ++j) probe.row(j) = p.optima[static_cast<std::size_t>(j)].transpose();
    const Vector pred = ns.predict(s.to_unit(probe));
    for (int j = 0; j < 3; ++j) {
        EXPECT_NEAR(pred(j), branin_noise(probe.row(j).transpose()), 5.0);
    }
    EXPECT_LT(pred(0), pred(1));
    EXPECT_LT(pred(0), pred(2));
}

TEST(NoiseSurrogate, GradientMatchesFiniteDifferences) {
    const ProblemSpec p = make_problem("branin_hetero-2");
    const Matrix x = sample_seed_points(p, 20, 0.0, 2);
    const InputScaling s{p.bounds.lower, p.bounds.upper};
    Vector v(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) v(i) = branin_noise(x.row(i).transpose());
    const NoiseSurrogate ns(s.to_unit(x), v, 4);
    Matrix u(2, 2);
    u << 0.3, 0.4, 0.7, 0.2;
    const auto ev = ns.predict_with_gradient(u);
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            Matrix up = u, um = u;
            up(i, j) += h;
            um(i, j) -= h;
            const double fd = (ns.predict(up)(i) - ns.predict(um)(i)) / (2 * h);
            EXPECT_NEAR(ev.gradient(i, j), fd, 1e-4 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(Problems, StyblinskiTangTenDimensions) {
    const ProblemSpec p = make_problem("styblinski_tang-10");
    EXPECT_NEAR(p.evaluate(Vector::Constant(10, -2.903534)), 39.16617 * 10, 1e-4);
}

TEST(EmbeddedHartmann, InertDimensionsAndEmbeddingIdentity) {
    const ProblemSpec big = make_embedded_hartmann(100);
    const ProblemSpec h6 = make_problem("hartmann-6");
    EXPECT_NEAR(big.optimum_value, 3.32237, 1e-5);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 10; ++t) {
        Vector x = Vector::NullaryExpr(100, [&] { return u(rng); });
        const double v = big.evaluate(x);
        EXPECT_DOUBLE_EQ(v, h6.evaluate(x.head(6)));
        x(50) = u(rng);
        EXPECT_DOUBLE_EQ(big.evaluate(x), v);
    }
    EXPECT_THROW(make_embedded_hartmann(5), InvalidArgument);
}

TEST(BraninNoise, HandValues) {
    const ProblemSpec p = make_problem("branin_hetero-2");
    EXPECT_DOUBLE_EQ(branin_noise(p.optima[1]), 100.0);
    EXPECT_DOUBLE_EQ(branin_noise(p.optima[2]), 100.0);
    Vector far = p.optima[2];
    far(1) -= 20.0;
    EXPECT_NEAR(branin_noise(far), 36.788, 1e-3);
}

TEST(BraninNoise, GridMaximumSitsNextToTheNoisedOptima) {
    const ProblemSpec p = make_problem("branin_hetero-2");
    const int n = 200;
    double best = -1.0;
    Vector arg(2);
    std::vector<Vector> grid;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Vector x(2);
            x << p.bounds.lower(0) + (p.bounds.upper(0) - p.bounds.lower(0)) * i / (n - 1),
                p.bounds.lower(1) + (p.bounds.upper(1) - p.bounds.lower(1)) * j / (n - 1);
            const double v = branin_noise(x);
            EXPECT_GT(v, 0.0);
            EXPECT_LE(v, 100.0);
            if (v > best) {
                best = v;
                arg = x;
            }
            grid.push_back(x);
        }
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& x : grid)
        nearest = std::min({nearest, (x - p.optima[1]).norm(), (x - p.optima[2]).norm()});
    EXPECT_NEAR(std::min((arg - p.optima[1]).norm(), (arg - p.optima[2]).norm()), nearest, 1e-12);
}

TEST(Observe, RepeatedObservationsHaveTheTrueVariance) {
    const ProblemSpec p = make_problem("branin_hetero-2");
    Vector x(2);
    x << 2.0, 5.0;
    const int n = 10'000;
    const Matrix batch = x.transpose().replicate(n, 1);
    const auto obs = observe(p, batch, 77);
    const double mean = obs.y.mean();
    const double var = (obs.y.array() - mean).square().sum() / (n - 1);
    EXPECT_NEAR(var, branin_noise(x), 0.05 * branin_noise(x));
    EXPECT_EQ(obs.y, observe(p, batch, 77).y);
}

TEST(NoiseSurrogate, ReproducesTrainingTargets) {
    const ProblemSpec p = make_problem("branin_hetero-2");
    const Matrix x = sample_seed_points(p, 30, 0.0, 12);
    const InputScaling s{p.bounds.lower, p.bounds.upper};
    Vector v(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) v(i) = branin_noise(x.row(i).transpose());
    const NoiseSurrogate ns(s.to_unit(x), v, 5);
    const double noise_sd = std::sqrt(NoiseSurrogate::kObservationNoise) * ns.scaling().scale;
    const Vector pred = ns.predict(s.to_unit(x));
    EXPECT_LE((pred - v).cwiseAbs().maxCoeff(), 2.0 * noise_sd);
}
