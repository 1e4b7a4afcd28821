#include "beebo/problems.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <random>

#include "beebo/errors.hpp"

namespace beebo {

namespace {

constexpr double kPi = std::numbers::pi;

Box uniform_box(int d, double lo, double hi) {
    return {Vector::Constant(d, lo), Vector::Constant(d, hi)};
}

double ackley(const Vector& x) {
    const double d = static_cast<double>(x.size());
    const double a = 20.0, b = 0.2, c = 2.0 * kPi;
    const double s1 = std::sqrt(x.squaredNorm() / d);
    const double s2 = (c * x.array()).cos().sum() / d;
    return -(-a * std::exp(-b * s1) - std::exp(s2) + a + std::numbers::e);
}

double levy(const Vector& x) {
    const Eigen::ArrayXd w = 1.0 + (x.array() - 1.0) / 4.0;
    const auto d = x.size();
    double f = std::pow(std::sin(kPi * w(0)), 2);
    for (Eigen::Index i = 0; i + 1 < d; ++i) {
        f += std::pow(w(i) - 1.0, 2) * (1.0 + 10.0 * std::pow(std::sin(kPi * w(i) + 1.0), 2));
    }
    f += std::pow(w(d - 1) - 1.0, 2) * (1.0 + std::pow(std::sin(2.0 * kPi * w(d - 1)), 2));
    return -f;
}

double rastrigin(const Vector& x) {
    const double d = static_cast<double>(x.size());
    return -(10.0 * d + (x.array().square() - 10.0 * (2.0 * kPi * x.array()).cos()).sum());
}

double rosenbrock(const Vector& x) {
    double f = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
        f += 100.0 * std::pow(x(i + 1) - x(i) * x(i), 2) + std::pow(x(i) - 1.0, 2);
    }
    return -f;
}

double styblinski_tang(const Vector& x) {
    const Eigen::ArrayXd a = x.array();
    return -0.5 * (a.pow(4) - 16.0 * a.square() + 5.0 * a).sum();
}

double powell(const Vector& x) {
    double f = 0.0;
    // trailing coordinates beyond the last full block of four are inert
    for (Eigen::Index i = 0; i + 4 <= x.size(); i += 4) {
        f += std::pow(x(i) + 10.0 * x(i + 1), 2) + 5.0 * std::pow(x(i + 2) - x(i + 3), 2) +
             std::pow(x(i + 1) - 2.0 * x(i + 2), 4) + 10.0 * std::pow(x(i) - x(i + 3), 4);
    }
    return -f;
}

double shekel(const Vector& x) {
    static const double beta[10] = {0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5};
    static const double c[4][10] = {{4, 1, 8, 6, 3, 2, 5, 8, 6, 7},
                                    {4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6},
                                    {4, 1, 8, 6, 3, 2, 5, 8, 6, 7},
                                    {4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6}};
    double f = 0.0;
    for (int i = 0; i < 10; ++i) {
        double s = beta[i];
        for (int j = 0; j < 4; ++j) s += std::pow(x(j) - c[j][i], 2);
        f -= 1.0 / s;
    }
    return -f;
}

double hartmann6(const Vector& x) {
    static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
    static const double a[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                   {0.05, 10, 17, 0.1, 8, 14},
                                   {3, 3.5, 1.7, 10, 17, 8},
                                   {17, 8, 0.05, 10, 0.1, 14}};
    static const double p[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                   {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                   {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                   {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
    double f = 0.0;
    for (int i = 0; i < 4; ++i) {
        double s = 0.0;
        for (int j = 0; j < 6; ++j) s += a[i][j] * std::pow(x(j) - p[i][j], 2);
        f -= alpha[i] * std::exp(-s);
    }
    return -f;
}

double cosine_mixture(const Vector& x) {
    return 0.1 * (5.0 * kPi * x.array()).cos().sum() - x.squaredNorm();
}

double branin(const Vector& x) {
    const double b = 5.1 / (4.0 * kPi * kPi), c = 5.0 / kPi, t = 1.0 / (8.0 * kPi);
    const double f = std::pow(x(1) - b * x(0) * x(0) + c * x(0) - 6.0, 2) + 10.0 * (1.0 - t) * std::cos(x(0)) + 10.0;
    return -f;
}

Vector hartmann6_optimum() {
    Vector x(6);
    x << 0.20168951284088166, 0.15001069121573468, 0.47687397552004734, 0.2753324309510746,
        0.31165161746271286, 0.6573005329659732;
    return x;
}

std::vector<Vector> branin_optima() {
    Vector a(2), b(2), c(2);
    a << 3.0 * kPi, 2.475;
    b << -kPi, 12.275;
    c << kPi, 2.275;
    return {a, b, c};
}

ProblemSpec finish(ProblemSpec p) {
    p.optimum_value = p.evaluate(p.optima.front());
    return p;
}

ProblemSpec make_branin(const std::string& name, NoiseKind kind) {
    ProblemSpec p;
    p.name = name;
    p.dimension = 2;
    p.bounds = {Vector(2), Vector(2)};
    p.bounds.lower << -5.0, 0.0;
    p.bounds.upper << 10.0, 15.0;
    p.evaluate = branin;
    p.optima = branin_optima();
    p.noise_kind = kind;
    if (kind == NoiseKind::heteroskedastic) p.noise_field = branin_noise;
    if (kind == NoiseKind::homoskedastic) p.noise_field = [](const Vector&) { return kBraninHomoskedasticNoise; };
    return finish(std::move(p));
}

ProblemSpec make_named(const std::string& name, int d) {
    auto need = [&](bool ok, const char* what) {
        if (!ok) throw UnknownProblem("problem '" + name + "-" + std::to_string(d) + "': " + what);
    };
    need(d >= 1, "dimension must be positive");
    ProblemSpec p;
    p.name = name;
    p.dimension = d;
    if (name == "ackley") {
        p.bounds = uniform_box(d, -32.768, 32.768);
        p.evaluate = ackley;
        p.optima = {Vector::Zero(d)};
    } else if (name == "levy") {
        p.bounds = uniform_box(d, -10.0, 10.0);
        p.evaluate = levy;
        p.optima = {Vector::Ones(d)};
    } else if (name == "rastrigin") {
        p.bounds = uniform_box(d, -5.12, 5.12);
        p.evaluate = rastrigin;
        p.optima = {Vector::Zero(d)};
    } else if (name == "rosenbrock") {
        need(d >= 2, "needs d >= 2");
        p.bounds = uniform_box(d, -5.0, 10.0);
        p.evaluate = rosenbrock;
        p.optima = {Vector::Ones(d)};
    } else if (name == "styblinski_tang") {
        p.bounds = uniform_box(d, -5.0, 5.0);
        p.evaluate = styblinski_tang;
        p.optima = {Vector::Constant(d, -2.903534018105219)};
    } else if (name == "powell") {
        need(d >= 4, "needs d >= 4");
        p.bounds = uniform_box(d, -4.0, 5.0);
        p.evaluate = powell;
        p.optima = {Vector::Zero(d)};
    } else if (name == "shekel") {
        need(d == 4, "only defined for d = 4");
        p.bounds = uniform_box(4, 0.0, 10.0);
        p.evaluate = shekel;
        Vector x(4);
        x << 4.000746869861146, 3.9995094793127874, 4.0007468664726655, 3.9995094821965758;
        p.optima = {x};
    } else if (name == "hartmann") {
        need(d == 6, "only defined for d = 6");
        p.bounds = uniform_box(6, 0.0, 1.0);
        p.evaluate = hartmann6;
        p.optima = {hartmann6_optimum()};
    } else if (name == "embedded_hartmann") {
        need(d >= 6, "needs d >= 6");
        return make_embedded_hartmann(d);
    } else if (name == "cosine") {
        need(d == 8, "only defined for d = 8");
        p.bounds = uniform_box(8, -1.0, 1.0);
        p.evaluate = cosine_mixture;
        p.optima = {Vector::Zero(8)};
    } else if (name == "branin" || name == "branin_hetero" || name == "branin_homo") {
        need(d == 2, "only defined for d = 2");
        const auto kind = name == "branin" ? NoiseKind::none
                          : name == "branin_hetero" ? NoiseKind::heteroskedastic
                                                    : NoiseKind::homoskedastic;
        return make_branin(name, kind);
    } else {
        throw UnknownProblem("unknown problem name '" + name + "'");
    }
    return finish(std::move(p));
}

} // namespace

bool ProblemSpec::contains(const Vector& x, double tolerance) const {
    if (x.size() != dimension) return false;
    return ((x.array() >= bounds.lower.array() - tolerance) && (x.array() <= bounds.upper.array() + tolerance)).all();
}

ProblemSpec make_embedded_hartmann(int total_dim) {
    if (total_dim < 6) throw InvalidArgument("embedded Hartmann needs at least 6 dimensions");
    ProblemSpec p;
    p.name = "embedded_hartmann";
    p.dimension = total_dim;
    p.bounds = uniform_box(total_dim, 0.0, 1.0);
    p.evaluate = [](const Vector& x) { return hartmann6(x.head(6)); };
    Vector opt = Vector::Zero(total_dim);
    opt.head(6) = hartmann6_optimum();
    p.optima = {opt};
    return finish(std::move(p));
}

ProblemSpec make_problem(std::string_view id) {
    const auto dash = id.rfind('-');
    if (dash == std::string_view::npos || dash == 0 || dash + 1 == id.size()) {
        throw UnknownProblem("problem id '" + std::string(id) + "' is not of the form <name>-<d>");
    }
    int d = 0;
    const auto tail = id.substr(dash + 1);
    const auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), d);
    if (ec != std::errc() || ptr != tail.data() + tail.size()) {
        throw UnknownProblem("problem id '" + std::string(id) + "' has a malformed dimension");
    }
    return make_named(std::string(id.substr(0, dash)), d);
}

std::vector<std::string> list_problems() {
    std::vector<std::string> ids;
    for (const char* name : {"ackley", "levy", "rastrigin", "rosenbrock", "styblinski_tang"}) {
        for (int d : {2, 10, 20, 50, 100}) ids.push_back(std::string(name) + "-" + std::to_string(d));
    }
    for (int d : {10, 20, 50, 100}) ids.push_back("powell-" + std::to_string(d));
    for (const char* id : {"shekel-4", "hartmann-6", "cosine-8", "embedded_hartmann-100", "branin-2",
                           "branin_hetero-2", "branin_homo-2"}) {
        ids.emplace_back(id);
    }
    return ids;
}

double branin_noise(const Vector& x) {
    if (x.size() != 2) throw InvalidArgument("branin_noise expects a 2-vector");
    const auto optima = branin_optima();
    const double dist = std::min((x - optima[1]).norm(), (x - optima[2]).norm());
    return kBraninNoiseMax * std::exp(-kBraninNoiseRate * dist);
}

Vector evaluate_batch(const ProblemSpec& problem, const Matrix& batch) {
    if (batch.cols() != problem.dimension) {
        throw InvalidArgument("evaluate_batch: batch dimension does not match " + problem.id());
    }
    Vector out(batch.rows());
    for (Eigen::Index i = 0; i < batch.rows(); ++i) {
        const Vector x = batch.row(i).transpose();
        if (!problem.contains(x)) {
            throw DomainError("evaluate_batch: point " + std::to_string(i) + " lies outside the bounds of " +
                              problem.id());
        }
        out(i) = problem.evaluate(x);
    }
    return out;
}

Observation observe(const ProblemSpec& problem, const Matrix& batch, std::uint64_t seed) {
    Observation obs;
    obs.y = evaluate_batch(problem, batch);
    obs.sigma2 = Vector::Zero(batch.rows());
    if (!problem.noise_field) return obs;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < batch.rows(); ++i) {
        const double s2 = problem.noise_field(batch.row(i).transpose());
        obs.sigma2(i) = s2;
        obs.y(i) += std::sqrt(s2) * normal(rng);
    }
    return obs;
}

Matrix sample_seed_points(const ProblemSpec& problem, Eigen::Index count, double min_dist,
                          std::uint64_t seed) {
    if (!(min_dist >= 0.0)) throw InvalidArgument("sample_seed_points: min_dist must be nonnegative");
    if (count < 0) throw InvalidArgument("sample_seed_points: negative count");
    const auto d = problem.dimension;
    Matrix out(count, d);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector x(d);
    for (Eigen::Index i = 0; i < count; ++i) {
        int rejections = 0;
        for (;;) {
            for (Eigen::Index j = 0; j < d; ++j) {
                x(j) = problem.bounds.lower(j) + unit(rng) * (problem.bounds.upper(j) - problem.bounds.lower(j));
            }
            bool ok = true;
            for (const auto& opt : problem.optima) {
                if ((x - opt).norm() < min_dist) {
                    ok = false;
                    break;
                }
            }
            if (ok) break;
            if (++rejections >= kMaxConsecutiveRejections) {
                throw InfeasibleConstraint("sample_seed_points: " + std::to_string(rejections) +
                                           " consecutive rejections for " + problem.id());
            }
        }
        out.row(i) = x.transpose();
    }
    return out;
}

} // namespace beebo
