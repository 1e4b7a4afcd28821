#include "beebo/bo_loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "beebo/quasi_random.hpp"

namespace beebo {

namespace {

// Stream keys for derive_seed; round-0 streams depend on the replicate only.
enum Stream : std::uint64_t {
    kSeedPointStream = 1,
    kObserveStream = 2,
    kFitStream = 3,
    kNoiseFitStream = 4,
    kOptimizeStream = 5,
    kMonteCarloStream = 6,
};

Matrix clamp_to_box(Matrix x, const Box& box) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        x.col(j) = x.col(j).cwiseMax(box.lower(j)).cwiseMin(box.upper(j));
    }
    return x;
}

Vector floor_variance(const Vector& v, double floor) { return v.cwiseMax(floor); }

double best_of(const Vector& v) { return v.maxCoeff(); }

} // namespace

std::string to_string(Method method) {
    switch (method) {
    case Method::mean_beebo:
        return "meanBEEBO";
    case Method::max_beebo:
        return "maxBEEBO";
    case Method::qucb:
        return "qUCB";
    }
    return "unknown";
}

Method method_from_string(std::string_view name) {
    if (name == "meanBEEBO") return Method::mean_beebo;
    if (name == "maxBEEBO") return Method::max_beebo;
    if (name == "qUCB") return Method::qucb;
    throw InvalidArgument("unknown method '" + std::string(name) +
                          "' (expected meanBEEBO, maxBEEBO or qUCB)");
}

void ExperimentConfig::validate() const {
    if (batch_size < 1) throw InvalidArgument("Q ≥ 1 required");
    if (rounds < 1) throw InvalidArgument("rounds ≥ 1 required");
    if (!(trade_off >= 0.0) || !std::isfinite(trade_off)) {
        throw InvalidArgument("trade_off must be finite and non-negative");
    }
    if (initial_points < 0) throw InvalidArgument("initial_points must be non-negative");
    if (!(seed_min_distance >= 0.0)) throw InvalidArgument("seed_min_distance must be non-negative");
    if (softmax_beta && !(*softmax_beta >= 0.0)) throw InvalidArgument("softmax_beta must be non-negative");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (mc_samples < 1) throw InvalidArgument("mc_samples must be positive");
    if (!(noise_floor > 0.0)) throw InvalidArgument("noise_floor must be positive");
    optimizer.validate();
}

Matrix replicate_seed_points(const ProblemSpec& problem, Eigen::Index count, double min_dist,
                             std::uint64_t replicate_seed) {
    return sample_seed_points(problem, count, min_dist, derive_seed(replicate_seed, {kSeedPointStream}));
}

Proposal propose_batch(const ProblemSpec& problem, const ObservedData& data, const ExperimentConfig& config,
                       int round_index, bool exploit, const RoundObserver& observer) {
    const auto round = static_cast<std::uint64_t>(round_index);
    const InputScaling input_scaling{problem.bounds.lower, problem.bounds.upper};
    const Matrix unit_x = input_scaling.to_unit(data.x).cwiseMax(0.0).cwiseMin(1.0);
    const OutputScaling output_scaling = OutputScaling::fit(data.y);

    TrainingData training{unit_x, output_scaling.forward(data.y),
                          floor_variance(output_scaling.forward_variance(data.sigma2), config.noise_floor)};
    const KernelParams kernel =
        fit_hyperparameters(training, derive_seed(config.replicate_seed, {kFitStream, round}), config.fit);
    const GpModel model(std::move(training), kernel);

    OptimizerConfig opt = config.optimizer;
    opt.seed = derive_seed(config.replicate_seed, {kOptimizeStream, round});
    const Box domain = Box::unit(problem.dimension);
    const Eigen::Index q = config.batch_size;

    double temperature = 0.0;
    OptimizationResult result;
    if (config.method == Method::qucb) {
        temperature = exploit ? 0.0 : kappa_from_scaled_temperature(config.trade_off);
        const QucbObjective acquisition(model, q, temperature, config.mc_samples,
                                        derive_seed(config.replicate_seed, {kMonteCarloStream, round}));
        result = optimize_batch(
            [&](const Matrix& batch, Matrix* gradient) {
                QucbEvaluation ev = acquisition.evaluate(batch, gradient != nullptr);
                if (gradient) *gradient = std::move(ev.gradient);
                return ev.value;
            },
            domain, q, opt);
    } else {
        AcquisitionConfig acq;
        acq.variant = config.method == Method::max_beebo ? EnergyVariant::max : EnergyVariant::mean;
        acq.temperature = exploit ? 0.0 : config.trade_off * std::sqrt(kernel.amplitude);
        acq.alpha = config.alpha;
        acq.mc_samples = config.mc_samples;
        if (exploit) {
            acq.beta = SoftmaxBeta::fixed(0.0);
        } else if (config.softmax_beta) {
            acq.beta = SoftmaxBeta::fixed(*config.softmax_beta);
        }
        if (config.use_y_max_reference) acq.y_max_reference = model.data().outputs.maxCoeff();
        temperature = acq.temperature;

        const double scale2 = output_scaling.scale * output_scaling.scale;
        NoiseField noise;
        if (problem.noise_kind == NoiseKind::heteroskedastic) {
            auto surrogate = std::make_shared<NoiseSurrogate>(
                unit_x, data.sigma2, derive_seed(config.replicate_seed, {kNoiseFitStream, round}), config.fit);
            const double floor = config.noise_floor;
            noise = [surrogate, scale2, floor](const Matrix& batch) {
                NoiseEvaluation ev = surrogate->predict_with_gradient(batch);
                for (Eigen::Index i = 0; i < ev.variance.size(); ++i) {
                    ev.variance(i) /= scale2;
                    ev.gradient.row(i) /= scale2;
                    if (ev.variance(i) < floor) {
                        ev.variance(i) = floor;
                        ev.gradient.row(i).setZero();
                    }
                }
                return ev;
            };
        } else {
            // Known constant noise: the observed variance (zero on noise-free problems).
            const double level =
                std::max(data.sigma2.size() > 0 ? data.sigma2.mean() / scale2 : 0.0, config.noise_floor);
            const Eigen::Index d = problem.dimension;
            noise = [level, d](const Matrix& batch) {
                return NoiseEvaluation{Vector::Constant(batch.rows(), level), Matrix::Zero(batch.rows(), d)};
            };
        }
        result = optimize_batch(
            [&](const Matrix& batch, Matrix* gradient) {
                BeeboEvaluation ev = beebo_evaluate(model, batch, noise, acq, gradient != nullptr);
                if (gradient) *gradient = std::move(ev.gradient);
                return ev.value;
            },
            domain, q, opt);
    }

    if (observer) {
        RoundContext ctx;
        ctx.round_index = round_index;
        ctx.exploit = exploit;
        ctx.model = &model;
        ctx.input_scaling = &input_scaling;
        ctx.output_scaling = &output_scaling;
        ctx.unit_batch = &result.batch;
        ctx.acquisition_value = result.value;
        ctx.temperature = temperature;
        observer(ctx);
    }

    return {clamp_to_box(input_scaling.from_unit(result.batch), problem.bounds), result.value, kernel,
            temperature};
}

std::vector<RoundRecord> run_experiment(const ExperimentConfig& config, const RoundObserver& observer) {
    config.validate();
    const ProblemSpec problem = make_problem(config.problem_id);
    using clock = std::chrono::steady_clock;

    std::vector<RoundRecord> records;
    records.reserve(static_cast<std::size_t>(config.rounds) + 1);
    ObservedData data;

    auto append = [&](RoundRecord rec, const Observation& obs, clock::time_point start) {
        const Eigen::Index n = data.x.rows(), q = rec.batch.rows();
        data.x.conservativeResize(n + q, problem.dimension);
        data.x.bottomRows(q) = rec.batch;
        data.y.conservativeResize(n + q);
        data.y.tail(q) = obs.y;
        data.sigma2.conservativeResize(n + q);
        data.sigma2.tail(q) = obs.sigma2;

        rec.observations = obs.y;
        rec.sigma2 = obs.sigma2;
        rec.true_values = evaluate_batch(problem, rec.batch);
        const double batch_best = best_of(rec.true_values);
        rec.best_so_far = records.empty() ? batch_best : std::max(records.back().best_so_far, batch_best);
        rec.wall_time = std::chrono::duration<double>(clock::now() - start).count();
        records.push_back(std::move(rec));
    };

    const Eigen::Index n_seed = config.initial_points > 0 ? config.initial_points : config.batch_size;
    {
        const auto start = clock::now();
        RoundRecord rec;
        rec.round_index = 0;
        rec.batch = replicate_seed_points(problem, n_seed, config.seed_min_distance, config.replicate_seed);
        const Observation obs = observe(problem, rec.batch, derive_seed(config.replicate_seed, {kObserveStream, 0}));
        append(std::move(rec), obs, start);
    }

    for (int r = 1; r <= config.rounds; ++r) {
        const auto start = clock::now();
        const bool exploit = config.final_round_exploit && r == config.rounds;
        try {
            Proposal proposal = propose_batch(problem, data, config, r, exploit, observer);
            const Observation obs = observe(
                problem, proposal.batch,
                derive_seed(config.replicate_seed, {kObserveStream, static_cast<std::uint64_t>(r)}));
            RoundRecord rec;
            rec.round_index = r;
            rec.batch = std::move(proposal.batch);
            rec.acquisition_value = proposal.acquisition_value;
            append(std::move(rec), obs, start);
        } catch (const NumericalError& e) {
            throw ExperimentAborted("round " + std::to_string(r) + ": " + e.what(), records, true);
        } catch (const OptimizationFailed& e) {
            throw ExperimentAborted("round " + std::to_string(r) + ": " + e.what(), records, true);
        } catch (const ExperimentAborted&) {
            throw;
        } catch (const Error& e) {
            throw ExperimentAborted("round " + std::to_string(r) + ": " + e.what(), records, false);
        }
    }
    return records;
}

} // namespace beebo
