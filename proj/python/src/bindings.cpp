#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "beebo/acquisition.hpp"
#include "beebo/bo_loop.hpp"
#include "beebo/errors.hpp"
#include "beebo/gp_core.hpp"
#include "beebo/problems.hpp"
#include "beebo/runner.hpp"

namespace py = pybind11;
using namespace beebo;

namespace {

KernelParams kernel(double amplitude, const Vector& lengthscales) {
    KernelParams k;
    k.amplitude = amplitude;
    k.lengthscales = lengthscales;
    k.validate();
    return k;
}

py::dict record_to_dict(const RoundRecord& r) {
    py::dict d;
    d["round"] = r.round_index;
    d["batch"] = r.batch;
    d["observations"] = r.observations;
    d["sigma2"] = r.sigma2;
    d["true_values"] = r.true_values;
    d["best_so_far"] = r.best_so_far;
    d["acquisition_value"] = r.acquisition_value;
    d["wall_time"] = r.wall_time;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "BEEBO batch acquisition, exact GP surrogates and benchmark problems";

    auto base = py::register_exception<Error>(m, "BeeboError", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<UnknownProblem>(m, "UnknownProblem", PyExc_KeyError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    // problems
    py::class_<ProblemSpec>(m, "Problem")
        .def_property_readonly("id", &ProblemSpec::id)
        .def_readonly("name", &ProblemSpec::name)
        .def_readonly("dimension", &ProblemSpec::dimension)
        .def_property_readonly("lower", [](const ProblemSpec& p) { return p.bounds.lower; })
        .def_property_readonly("upper", [](const ProblemSpec& p) { return p.bounds.upper; })
        .def_readonly("optimum_value", &ProblemSpec::optimum_value)
        .def_readonly("optima", &ProblemSpec::optima)
        .def_property_readonly("noisy", [](const ProblemSpec& p) { return p.noise_kind != NoiseKind::none; })
        .def("evaluate", [](const ProblemSpec& p, const Matrix& x) { return evaluate_batch(p, x); }, py::arg("batch"))
        .def(
            "observe",
            [](const ProblemSpec& p, const Matrix& x, std::uint64_t seed) {
                auto o = observe(p, x, seed);
                return py::make_tuple(o.y, o.sigma2);
            },
            py::arg("batch"), py::arg("seed"))
        .def(
            "noise_variance",
            [](const ProblemSpec& p, const Vector& x) { return p.noise_field ? p.noise_field(x) : 0.0; },
            py::arg("x"))
        .def("__repr__", [](const ProblemSpec& p) { return "<Problem " + p.id() + ">"; });

    m.def("make_problem", [](const std::string& id) { return make_problem(id); }, py::arg("id"));
    m.def("list_problems", &list_problems);

    // GP
    py::class_<GpModel>(m, "GpModel")
        .def(py::init([](const Matrix& x, const Vector& y, const Vector& noise, double amplitude,
                         const Vector& lengthscales) {
                 return GpModel(TrainingData{x, y, noise}, kernel(amplitude, lengthscales));
             }),
             py::arg("inputs"), py::arg("outputs"), py::arg("noise_variances"), py::arg("amplitude"),
             py::arg("lengthscales"))
        .def_property_readonly("amplitude", [](const GpModel& g) { return g.kernel().amplitude; })
        .def_property_readonly("lengthscales", [](const GpModel& g) { return g.kernel().lengthscales; })
        .def_property_readonly("jitter", &GpModel::jitter)
        .def(
            "posterior",
            [](const GpModel& g, const Matrix& x) {
                auto p = posterior(g, x);
                return py::make_tuple(p.mean, p.covariance);
            },
            py::arg("points"))
        .def(
            "augmented_covariance",
            [](const GpModel& g, const Matrix& x, const Vector& noise) { return augmented_covariance(g, x, noise); },
            py::arg("batch"), py::arg("batch_noise"))
        .def("log_marginal_likelihood",
             [](const GpModel& g) { return log_marginal_likelihood(g.data(), g.kernel()); });

    m.def(
        "fit_hyperparameters",
        [](const Matrix& x, const Vector& y, const Vector& noise, std::uint64_t seed, int restarts, int steps) {
            FitOptions o;
            o.restarts = restarts;
            o.steps = steps;
            const KernelParams k = fit_hyperparameters(TrainingData{x, y, noise}, seed, o);
            return py::make_tuple(k.amplitude, k.lengthscales);
        },
        py::arg("inputs"), py::arg("outputs"), py::arg("noise_variances"), py::arg("seed") = 0,
        py::arg("restarts") = 8, py::arg("steps") = 200,
        "MAP kernel hyperparameters; returns (amplitude, lengthscales).");

    // acquisition
    py::enum_<EnergyVariant>(m, "EnergyVariant")
        .value("mean", EnergyVariant::mean)
        .value("max", EnergyVariant::max);

    py::class_<AcquisitionConfig>(m, "AcquisitionConfig")
        .def(py::init([](EnergyVariant variant, double temperature, std::optional<double> beta, double alpha,
                         std::optional<double> y_max) {
                 AcquisitionConfig c;
                 c.variant = variant;
                 c.temperature = temperature;
                 c.beta = beta ? SoftmaxBeta::fixed(*beta) : SoftmaxBeta::amplitude_scaled();
                 c.alpha = alpha;
                 c.y_max_reference = y_max;
                 c.validate();
                 return c;
             }),
             py::arg("variant") = EnergyVariant::mean, py::arg("temperature") = 0.0, py::arg("beta") = py::none(),
             py::arg("alpha") = 0.05, py::arg("y_max") = py::none())
        .def_readwrite("variant", &AcquisitionConfig::variant)
        .def_readwrite("temperature", &AcquisitionConfig::temperature);

    m.def("beebo_score", &beebo_score, py::arg("model"), py::arg("batch"), py::arg("batch_noise"), py::arg("config"));
    m.def("beebo_gradient",
          py::overload_cast<const GpModel&, const Matrix&, const Vector&, const AcquisitionConfig&>(&beebo_gradient),
          py::arg("model"), py::arg("batch"), py::arg("batch_noise"), py::arg("config"));
    m.def("information_gain", &information_gain, py::arg("covariance"), py::arg("augmented_covariance"));
    m.def(
        "softmax_expectation",
        [](const Vector& mean, const Matrix& cov, double beta) { return softmax_expectation(mean, cov, beta).value; },
        py::arg("mean"), py::arg("covariance"), py::arg("beta"));
    m.def(
        "effective_points",
        [](const Vector& mean, const Matrix& cov, double beta) {
            return effective_points(softmax_expectation(mean, cov, beta).expansion);
        },
        py::arg("mean"), py::arg("covariance"), py::arg("beta"));
    m.def(
        "temperature_from_kappa",
        [](double kappa, double amplitude) {
            auto t = temperature_from_kappa(kappa, amplitude);
            return py::make_tuple(t.T, t.T_prime);
        },
        py::arg("kappa"), py::arg("amplitude"), "Returns (T, T').");
    m.def("qucb_score", &qucb_score, py::arg("model"), py::arg("batch"), py::arg("kappa"),
          py::arg("mc_samples") = 128, py::arg("seed") = 0);

    // experiments
    py::enum_<Method>(m, "Method")
        .value("mean_beebo", Method::mean_beebo)
        .value("max_beebo", Method::max_beebo)
        .value("qucb", Method::qucb);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("problem_id", &ExperimentConfig::problem_id)
        .def_readwrite("batch_size", &ExperimentConfig::batch_size)
        .def_readwrite("rounds", &ExperimentConfig::rounds)
        .def_readwrite("method", &ExperimentConfig::method)
        .def_readwrite("trade_off", &ExperimentConfig::trade_off)
        .def_readwrite("replicate_seed", &ExperimentConfig::replicate_seed)
        .def_readwrite("final_round_exploit", &ExperimentConfig::final_round_exploit)
        .def_readwrite("initial_points", &ExperimentConfig::initial_points)
        .def_readwrite("softmax_beta", &ExperimentConfig::softmax_beta)
        .def_readwrite("mc_samples", &ExperimentConfig::mc_samples)
        .def_property(
            "optimizer_restarts", [](const ExperimentConfig& c) { return c.optimizer.restarts; },
            [](ExperimentConfig& c, int v) { c.optimizer.restarts = v; })
        .def_property(
            "raw_candidates", [](const ExperimentConfig& c) { return c.optimizer.raw_candidates; },
            [](ExperimentConfig& c, int v) { c.optimizer.raw_candidates = v; })
        .def_property(
            "max_iters", [](const ExperimentConfig& c) { return c.optimizer.max_iters; },
            [](ExperimentConfig& c, int v) { c.optimizer.max_iters = v; })
        .def_property(
            "fit_restarts", [](const ExperimentConfig& c) { return c.fit.restarts; },
            [](ExperimentConfig& c, int v) { c.fit.restarts = v; })
        .def_property(
            "fit_steps", [](const ExperimentConfig& c) { return c.fit.steps; },
            [](ExperimentConfig& c, int v) { c.fit.steps = v; });

    m.def(
        "run_experiment",
        [](const ExperimentConfig& config) {
            std::vector<RoundRecord> records;
            {
                py::gil_scoped_release release;
                records = run_experiment(config);
            }
            py::list out;
            for (const auto& r : records) out.append(record_to_dict(r));
            return out;
        },
        py::arg("config"), "Seed round plus the acquisition rounds, one dict per round.");
    m.def("optima_distances", &optima_distances, py::arg("batch"), py::arg("problem"));

    m.def(
        "run_spec",
        [](const std::filesystem::path& path, std::optional<std::filesystem::path> output_dir) {
            RunSpec spec = parse_runspec(path);
            if (output_dir) spec.output_dir = *output_dir;
            py::gil_scoped_release release;
            return run(spec).exit_code();
        },
        py::arg("path"), py::arg("output_dir") = py::none(), "Runs a JSON run spec; returns the CLI exit code.");
    m.def(
        "export_plot_data",
        [](const std::filesystem::path& dir) {
            auto r = export_plot_data(dir);
            return py::make_tuple(r.runs_exported, r.failures_skipped);
        },
        py::arg("results_dir"));
}
