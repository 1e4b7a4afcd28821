#include <random>

#include <benchmark/benchmark.h>

#include "beebo/acquisition.hpp"
#include "beebo/gp_core.hpp"

using namespace beebo;

namespace {

GpModel model(int n, int d) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TrainingData data;
    data.inputs = Matrix::NullaryExpr(n, d, [&] { return u(rng); });
    data.outputs = Vector::NullaryExpr(n, [&] { return u(rng); });
    data.noise_variances = Vector::Constant(n, 1e-2);
    KernelParams k;
    k.lengthscales = Vector::Constant(d, 0.3);
    return GpModel(std::move(data), k);
}

Matrix batch(int q, int d) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return Matrix::NullaryExpr(q, d, [&] { return u(rng); });
}

void BlockAugmentation(benchmark::State& state) {
    const GpModel m = model(static_cast<int>(state.range(0)), 4);
    const Matrix x = batch(static_cast<int>(state.range(1)), 4);
    const Vector noise = Vector::Constant(x.rows(), 1e-2);
    for (auto _ : state) benchmark::DoNotOptimize(augment_factorization(m, x, noise));
}

void FullRefactorization(benchmark::State& state) {
    const GpModel m = model(static_cast<int>(state.range(0)), 4);
    const Matrix x = batch(static_cast<int>(state.range(1)), 4);
    Matrix xa(m.size() + x.rows(), 4);
    xa << m.data().inputs, x;
    for (auto _ : state) {
        Matrix k = kernel_matrix(xa, xa, m.kernel());
        k.diagonal().array() += 1e-2;
        benchmark::DoNotOptimize(cholesky_with_jitter(k, 1.0));
    }
}

void BeeboScoreAndGradient(benchmark::State& state) {
    const GpModel m = model(static_cast<int>(state.range(0)), 4);
    const Matrix x = batch(static_cast<int>(state.range(1)), 4);
    const Vector noise = Vector::Constant(x.rows(), 1e-2);
    AcquisitionConfig cfg;
    cfg.variant = state.range(2) ? EnergyVariant::max : EnergyVariant::mean;
    cfg.temperature = 0.5;
    for (auto _ : state) benchmark::DoNotOptimize(beebo_evaluate(m, x, noise, cfg, true));
}

} // namespace

BENCHMARK(BlockAugmentation)->Args({500, 20})->Args({2000, 100})->Unit(benchmark::kMillisecond);
BENCHMARK(FullRefactorization)->Args({500, 20})->Args({2000, 100})->Unit(benchmark::kMillisecond);
BENCHMARK(BeeboScoreAndGradient)->Args({200, 20, 0})->Args({200, 20, 1})->Args({1000, 100, 0})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
