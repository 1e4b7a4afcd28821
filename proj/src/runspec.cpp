#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include <json.hpp>

#include "beebo/quasi_random.hpp"
#include "beebo/runner.hpp"

namespace beebo {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& field, const std::string& message) {
    throw ConfigError(ConfigError::Kind::schema, field + ": " + message);
}

void reject_unknown_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) {
            schema_error(where.empty() ? key : where + "." + key, "unknown key");
        }
    }
}

std::int64_t get_int(const json& v, const std::string& field) {
    if (!v.is_number_integer()) schema_error(field, "expected an integer");
    return v.get<std::int64_t>();
}

double get_number(const json& v, const std::string& field) {
    if (!v.is_number()) schema_error(field, "expected a number");
    return v.get<double>();
}

bool get_bool(const json& v, const std::string& field) {
    if (!v.is_boolean()) schema_error(field, "expected true or false");
    return v.get<bool>();
}

std::string get_string(const json& v, const std::string& field) {
    if (!v.is_string()) schema_error(field, "expected a string");
    return v.get<std::string>();
}

// A scalar or an array of scalars.
std::vector<json> as_list(const json& v, const std::string& field) {
    if (v.is_array()) {
        if (v.empty()) schema_error(field, "must not be empty");
        return {v.begin(), v.end()};
    }
    return {v};
}

int positive_int(const json& v, const std::string& field, const std::string& name) {
    const auto n = get_int(v, field);
    if (n < 1 || n > 1'000'000'000) schema_error(field, name + " ≥ 1");
    return static_cast<int>(n);
}

void parse_optimizer(const json& j, const std::string& where, OptimizerConfig& opt) {
    if (!j.is_object()) schema_error(where, "expected an object");
    reject_unknown_keys(j, where, {"restarts", "raw_candidates", "max_iters", "step_size", "grad_tolerance"});
    if (j.contains("restarts")) opt.restarts = positive_int(j["restarts"], where + ".restarts", "restarts");
    if (j.contains("raw_candidates"))
        opt.raw_candidates = positive_int(j["raw_candidates"], where + ".raw_candidates", "raw_candidates");
    if (j.contains("max_iters")) opt.max_iters = positive_int(j["max_iters"], where + ".max_iters", "max_iters");
    if (j.contains("step_size")) opt.step_size = get_number(j["step_size"], where + ".step_size");
    if (j.contains("grad_tolerance")) opt.grad_tolerance = get_number(j["grad_tolerance"], where + ".grad_tolerance");
    try {
        opt.validate();
    } catch (const InvalidArgument& e) {
        schema_error(where, e.what());
    }
}

void parse_fit(const json& j, const std::string& where, FitOptions& fit) {
    if (!j.is_object()) schema_error(where, "expected an object");
    reject_unknown_keys(j, where, {"restarts", "steps", "learning_rate"});
    if (j.contains("restarts")) fit.restarts = positive_int(j["restarts"], where + ".restarts", "restarts");
    if (j.contains("steps")) fit.steps = positive_int(j["steps"], where + ".steps", "steps");
    if (j.contains("learning_rate")) {
        fit.learning_rate = get_number(j["learning_rate"], where + ".learning_rate");
        if (!(fit.learning_rate > 0.0)) schema_error(where + ".learning_rate", "must be positive");
    }
}

std::vector<CellSpec> parse_cell_group(const json& j, const std::string& where) {
    if (!j.is_object()) schema_error(where, "expected an object");
    reject_unknown_keys(j, where,
                        {"problems", "Q", "rounds", "methods", "trade_offs", "replicates", "final_round_exploit",
                         "initial_points", "softmax_beta", "y_max_reference", "alpha", "mc_samples", "optimizer",
                         "fit"});
    for (const char* required : {"problems", "Q", "methods", "trade_offs", "replicates"}) {
        if (!j.contains(required)) schema_error(where + "." + required, "missing required key");
    }

    CellSpec base;
    const auto qs = as_list(j["Q"], where + ".Q");
    if (j.contains("rounds")) base.rounds = positive_int(j["rounds"], where + ".rounds", "rounds");
    if (j.contains("final_round_exploit"))
        base.final_round_exploit = get_bool(j["final_round_exploit"], where + ".final_round_exploit");
    if (j.contains("initial_points"))
        base.initial_points = positive_int(j["initial_points"], where + ".initial_points", "initial_points");
    if (j.contains("softmax_beta")) {
        const double beta = get_number(j["softmax_beta"], where + ".softmax_beta");
        if (!(beta >= 0.0)) schema_error(where + ".softmax_beta", "must be non-negative");
        base.softmax_beta = beta;
    }
    if (j.contains("y_max_reference")) base.y_max_reference = get_bool(j["y_max_reference"], where + ".y_max_reference");
    if (j.contains("alpha")) {
        base.alpha = get_number(j["alpha"], where + ".alpha");
        if (!(base.alpha > 0.0 && base.alpha < 1.0)) schema_error(where + ".alpha", "must lie in (0, 1)");
    }
    if (j.contains("mc_samples")) base.mc_samples = positive_int(j["mc_samples"], where + ".mc_samples", "mc_samples");
    if (j.contains("optimizer")) parse_optimizer(j["optimizer"], where + ".optimizer", base.optimizer);
    if (j.contains("fit")) parse_fit(j["fit"], where + ".fit", base.fit);

    const json& reps = j["replicates"];
    if (reps.is_number_integer()) {
        const auto n = get_int(reps, where + ".replicates");
        if (n < 1) schema_error(where + ".replicates", "replicates ≥ 1");
        for (std::int64_t r = 0; r < n; ++r) base.replicates.push_back(r);
    } else if (reps.is_array() && !reps.empty()) {
        std::set<std::int64_t> seen;
        for (std::size_t i = 0; i < reps.size(); ++i) {
            const std::string field = where + ".replicates[" + std::to_string(i) + "]";
            const auto r = get_int(reps[i], field);
            if (r < 0) schema_error(field, "replicate index must be non-negative");
            if (!seen.insert(r).second) schema_error(field, "duplicate replicate index");
            base.replicates.push_back(r);
        }
    } else {
        schema_error(where + ".replicates", "expected a count or a non-empty array of indices");
    }

    std::vector<std::string> problems;
    const auto plist = as_list(j["problems"], where + ".problems");
    for (std::size_t i = 0; i < plist.size(); ++i) {
        const std::string field = where + ".problems[" + std::to_string(i) + "]";
        const std::string id = get_string(plist[i], field);
        try {
            make_problem(id);
        } catch (const UnknownProblem& e) {
            throw ConfigError(ConfigError::Kind::unknown_problem, field + ": " + e.what());
        }
        problems.push_back(id);
    }

    std::vector<Method> methods;
    const auto mlist = as_list(j["methods"], where + ".methods");
    for (std::size_t i = 0; i < mlist.size(); ++i) {
        const std::string field = where + ".methods[" + std::to_string(i) + "]";
        try {
            methods.push_back(method_from_string(get_string(mlist[i], field)));
        } catch (const InvalidArgument& e) {
            schema_error(field, e.what());
        }
    }

    std::vector<double> trade_offs;
    const auto tlist = as_list(j["trade_offs"], where + ".trade_offs");
    for (std::size_t i = 0; i < tlist.size(); ++i) {
        const std::string field = where + ".trade_offs[" + std::to_string(i) + "]";
        const double t = get_number(tlist[i], field);
        if (!(t >= 0.0) || !std::isfinite(t)) schema_error(field, "trade-off must be finite and ≥ 0");
        trade_offs.push_back(t);
    }

    std::vector<CellSpec> cells;
    for (std::size_t qi = 0; qi < qs.size(); ++qi) {
        const int q = positive_int(qs[qi], where + ".Q", "Q");
        for (const auto& p : problems) {
            for (Method m : methods) {
                for (double t : trade_offs) {
                    CellSpec cell = base;
                    cell.problem = p;
                    cell.Q = q;
                    cell.method = m;
                    cell.trade_off = t;
                    cells.push_back(std::move(cell));
                }
            }
        }
    }
    return cells;
}

std::string format_double(double v) { return fmt::format("{}", v); }

} // namespace

int ConfigError::exit_code() const noexcept {
    switch (kind_) {
    case Kind::missing_file:
        return kExitMissingFile;
    case Kind::unknown_problem:
        return kExitUnknownProblem;
    case Kind::schema:
        break;
    }
    return kExitConfig;
}

std::string CellSpec::key() const {
    const json settings{{"exploit", final_round_exploit},
                        {"initial_points", initial_points},
                        {"softmax_beta", softmax_beta ? json(*softmax_beta) : json(nullptr)},
                        {"y_max", y_max_reference},
                        {"alpha", alpha},
                        {"mc", mc_samples},
                        {"opt",
                         {optimizer.restarts, optimizer.raw_candidates, optimizer.max_iters, optimizer.step_size,
                          optimizer.grad_tolerance}},
                        {"fit", {fit.restarts, fit.steps, fit.learning_rate}}};
    const std::string blob = settings.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : blob) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << problem << "/Q" << Q << "/R" << rounds << "/" << to_string(method) << "/T" << format_double(trade_off)
       << "/" << std::hex << h;
    return os.str();
}

ExperimentConfig CellSpec::experiment(std::uint64_t meta_seed, std::int64_t replicate) const {
    ExperimentConfig cfg;
    cfg.problem_id = problem;
    cfg.batch_size = Q;
    cfg.rounds = rounds;
    cfg.method = method;
    cfg.trade_off = trade_off;
    cfg.replicate_seed = replicate_seed(meta_seed, replicate);
    cfg.final_round_exploit = final_round_exploit;
    cfg.initial_points = initial_points;
    cfg.softmax_beta = softmax_beta;
    cfg.use_y_max_reference = y_max_reference;
    cfg.alpha = alpha;
    cfg.mc_samples = mc_samples;
    cfg.optimizer = optimizer;
    cfg.fit = fit;
    return cfg;
}

std::uint64_t replicate_seed(std::uint64_t meta_seed, std::int64_t replicate) {
    return derive_seed(meta_seed, {static_cast<std::uint64_t>(replicate)});
}

RunSpec parse_runspec_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(ConfigError::Kind::schema, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) schema_error("<root>", "expected an object");
    reject_unknown_keys(j, "", {"output_dir", "parallelism", "meta_seed", "cells"});
    if (!j.contains("output_dir")) schema_error("output_dir", "missing required key");
    if (!j.contains("cells")) schema_error("cells", "missing required key");

    RunSpec spec;
    spec.output_dir = get_string(j["output_dir"], "output_dir");
    if (spec.output_dir.empty()) schema_error("output_dir", "must not be empty");
    if (j.contains("parallelism")) spec.parallelism = positive_int(j["parallelism"], "parallelism", "parallelism");
    if (j.contains("meta_seed")) {
        const json& s = j["meta_seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
            schema_error("meta_seed", "expected a non-negative integer");
        }
        spec.meta_seed = s.get<std::uint64_t>();
    }
    const json& cells = j["cells"];
    if (!cells.is_array()) schema_error("cells", "expected an array");
    std::set<std::string> keys;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        for (CellSpec& cell : parse_cell_group(cells[i], "cells[" + std::to_string(i) + "]")) {
            if (!keys.insert(cell.key()).second) {
                schema_error("cells[" + std::to_string(i) + "]", "duplicate cell " + cell.key());
            }
            spec.cells.push_back(std::move(cell));
        }
    }
    return spec;
}

RunSpec parse_runspec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(ConfigError::Kind::missing_file, "cannot read run spec " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_runspec_text(text.str());
}

void apply_environment(RunSpec& spec) {
    if (const char* dir = std::getenv("BEEBO_OUTPUT_DIR"); dir && *dir) spec.output_dir = dir;
    if (const char* par = std::getenv("BEEBO_PARALLELISM"); par && *par) {
        char* end = nullptr;
        const long n = std::strtol(par, &end, 10);
        if (*end != '\0' || n < 1 || n > 4096) schema_error("BEEBO_PARALLELISM", "expected an integer ≥ 1");
        spec.parallelism = static_cast<int>(n);
    }
}

} // namespace beebo
