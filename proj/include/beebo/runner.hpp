#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beebo/bo_loop.hpp"

namespace beebo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPartialFailure = 3;
inline constexpr int kExitNumericalFailure = 4;
inline constexpr int kExitMissingFile = 5;
inline constexpr int kExitUnknownProblem = 6;

class ConfigError : public Error {
public:
    enum class Kind { missing_file, schema, unknown_problem };

    ConfigError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }
    int exit_code() const noexcept;

private:
    Kind kind_;
};

// One (problem, Q, method, trade-off) combination with its replicates.
struct CellSpec {
    std::string problem;
    int Q = 1;
    int rounds = 10;
    Method method = Method::mean_beebo;
    double trade_off = 0.5;
    std::vector<std::int64_t> replicates;
    bool final_round_exploit = true;
    int initial_points = 0;
    std::optional<double> softmax_beta;
    bool y_max_reference = false;
    double alpha = 0.05;
    int mc_samples = 128;
    OptimizerConfig optimizer;
    FitOptions fit;

    // Stable identity of the cell, covering every setting that affects results.
    std::string key() const;
    ExperimentConfig experiment(std::uint64_t meta_seed, std::int64_t replicate) const;
};

struct RunSpec {
    std::vector<CellSpec> cells;
    std::filesystem::path output_dir;
    int parallelism = 1;
    std::uint64_t meta_seed = 0;
};

// Strict parse: unknown keys and wrong types raise ConfigError naming the field.
RunSpec parse_runspec(const std::filesystem::path& path);
RunSpec parse_runspec_text(const std::string& text);

// BEEBO_OUTPUT_DIR and BEEBO_PARALLELISM override the run spec.
void apply_environment(RunSpec& spec);

// Replicate seeds depend on the meta-seed and replicate index only, so every
// method sees the same round-0 data and adding cells changes nothing else.
std::uint64_t replicate_seed(std::uint64_t meta_seed, std::int64_t replicate);

// Fixed seed for the uniform-batch regret reference.
inline constexpr std::uint64_t kRandomReferenceSeed = 0x5eed0f7e5e7e11ceULL;

struct RunReport {
    int completed = 0;  // replicate runs computed now
    int skipped = 0;    // already in the manifest
    int failed = 0;
    int numerical_failures = 0;

    int exit_code() const;
};

// Executes every cell and writes results.jsonl, failures.jsonl, summary.csv,
// random_reference.json and manifest.jsonl under spec.output_dir.
RunReport run(const RunSpec& spec);

struct ExportReport {
    int runs_exported = 0;
    int failures_skipped = 0;
};

// Per-run best-so-far curves and per-optimum distance series as CSV under
// results_dir/plots.
ExportReport export_plot_data(const std::filesystem::path& results_dir);

// Results I/O.
std::string to_json_line(const ResultRow& row);
ResultRow result_from_json_line(const std::string& line);
std::vector<ResultRow> read_results(const std::filesystem::path& path);

} // namespace beebo
