#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <thread>

#include <unistd.h>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "beebo/runner.hpp"

namespace beebo {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kReferenceSamples = 10'000;

// Line appender shared by all workers; every line is flushed and synced
// before append() returns.
class Appender {
public:
    explicit Appender(const fs::path& path) : file_(std::fopen(path.c_str(), "a")) {
        if (!file_) throw ConfigError(ConfigError::Kind::schema, "output_dir: cannot write " + path.string());
    }
    ~Appender() { std::fclose(file_); }
    Appender(const Appender&) = delete;
    Appender& operator=(const Appender&) = delete;

    void append(const std::string& line) {
        std::lock_guard lock(mutex_);
        std::fputs(line.c_str(), file_);
        std::fputc('\n', file_);
        std::fflush(file_);
        ::fsync(::fileno(file_));
    }

private:
    std::FILE* file_;
    std::mutex mutex_;
};

std::set<std::string> read_lines(const fs::path& path) {
    std::set<std::string> out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.insert(line);
    }
    return out;
}

std::string run_key(const CellSpec& cell, std::uint64_t meta_seed, std::int64_t replicate) {
    return cell.key() + "/rep" + std::to_string(replicate) + "/seed" + std::to_string(meta_seed);
}

// Per-point expected regret of a uniform random point, cached on disk.
std::map<std::string, double> load_references(const fs::path& path, const RunSpec& spec) {
    std::map<std::string, double> refs;
    if (std::ifstream in(path); in) {
        try {
            const json j = json::parse(in);
            if (j.at("seed").get<std::uint64_t>() == kRandomReferenceSeed &&
                j.at("samples").get<int>() == kReferenceSamples) {
                refs = j.at("per_point_regret").get<std::map<std::string, double>>();
            }
        } catch (const json::exception& e) {
            spdlog::warn("ignoring unreadable {}: {}", path.string(), e.what());
        }
    }
    bool changed = false;
    for (const CellSpec& cell : spec.cells) {
        if (refs.count(cell.problem)) continue;
        refs[cell.problem] =
            estimate_random_reference(make_problem(cell.problem), 1, kRandomReferenceSeed, kReferenceSamples);
        changed = true;
    }
    if (changed) {
        const json j{{"seed", kRandomReferenceSeed}, {"samples", kReferenceSamples}, {"per_point_regret", refs}};
        const fs::path tmp = path.string() + ".tmp";
        std::ofstream(tmp) << j.dump(2) << '\n';
        fs::rename(tmp, path);
    }
    return refs;
}

std::string csv_number(double v) { return fmt::format("{}", v); }

std::pair<double, double> mean_std(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return {mean, sd};
}

void write_summary(const fs::path& path, const RunSpec& spec, const std::vector<ResultRow>& rows) {
    std::ofstream out(path.string() + ".tmp");
    out << "problem,d,Q,rounds,method,trade_off,replicates,normalized_best_mean,normalized_best_std,R_rel_mean,"
           "R_rel_std\n";
    for (const CellSpec& cell : spec.cells) {
        const std::string method = to_string(cell.method);
        const std::set<std::int64_t> wanted(cell.replicates.begin(), cell.replicates.end());
        std::set<std::int64_t> seen;
        std::vector<double> nb, rr;
        int d = 0;
        for (const ResultRow& row : rows) {
            if (row.problem != cell.problem || row.Q != cell.Q || row.method != method ||
                row.trade_off != cell.trade_off ||
                static_cast<int>(row.per_round_best.size()) != cell.rounds + 1 || !wanted.count(row.replicate) ||
                !seen.insert(row.replicate).second) {
                continue;
            }
            d = row.d;
            nb.push_back(row.normalized_best);
            rr.push_back(row.R_rel);
        }
        if (nb.empty()) continue;
        const auto [nb_mean, nb_sd] = mean_std(nb);
        const auto [rr_mean, rr_sd] = mean_std(rr);
        out << cell.problem << ',' << d << ',' << cell.Q << ',' << cell.rounds << ',' << method << ','
            << csv_number(cell.trade_off) << ',' << nb.size() << ',' << csv_number(nb_mean) << ','
            << csv_number(nb_sd) << ',' << csv_number(rr_mean) << ',' << csv_number(rr_sd) << '\n';
    }
    out.close();
    fs::rename(path.string() + ".tmp", path);
}

} // namespace

int RunReport::exit_code() const {
    if (failed == 0) return kExitOk;
    return failed == numerical_failures ? kExitNumericalFailure : kExitPartialFailure;
}

RunReport run(const RunSpec& spec) {
    std::error_code ec;
    fs::create_directories(spec.output_dir, ec);
    if (ec) {
        throw ConfigError(ConfigError::Kind::schema,
                          "output_dir: cannot create " + spec.output_dir.string() + ": " + ec.message());
    }
    const fs::path results_path = spec.output_dir / "results.jsonl";
    const fs::path manifest_path = spec.output_dir / "manifest.jsonl";
    const std::set<std::string> done = read_lines(manifest_path);
    const auto refs = load_references(spec.output_dir / "random_reference.json", spec);

    struct Pending {
        const CellSpec* cell;
        std::vector<std::int64_t> replicates;
    };
    std::vector<Pending> pending;
    RunReport report;
    for (const CellSpec& cell : spec.cells) {
        Pending p{&cell, {}};
        for (std::int64_t r : cell.replicates) {
            if (done.count(run_key(cell, spec.meta_seed, r))) {
                ++report.skipped;
            } else {
                p.replicates.push_back(r);
            }
        }
        if (!p.replicates.empty()) pending.push_back(std::move(p));
    }
    std::size_t n_pending = 0;
    for (const auto& p : pending) n_pending += p.replicates.size();
    spdlog::info("{} cells, {} runs pending, {} already complete", spec.cells.size(), n_pending, report.skipped);

    Appender results(results_path);
    Appender manifest(manifest_path);
    Appender failures(spec.output_dir / "failures.jsonl");
    std::mutex report_mutex;
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < pending.size(); i = next++) {
            const CellSpec& cell = *pending[i].cell;
            const ProblemSpec problem = make_problem(cell.problem);
            const double reference = refs.at(cell.problem) * cell.Q;
            for (std::int64_t rep : pending[i].replicates) {
                const std::string key = run_key(cell, spec.meta_seed, rep);
                const ExperimentConfig config = cell.experiment(spec.meta_seed, rep);
                json failure{{"key", key}, {"problem", cell.problem}, {"Q", cell.Q},
                             {"method", to_string(cell.method)}, {"trade_off", cell.trade_off},
                             {"replicate", rep}};
                bool numerical = false;
                try {
                    const auto records = run_experiment(config);
                    results.append(to_json_line(summarize_run(records, problem, config, rep, reference)));
                    manifest.append(key);
                    std::lock_guard lock(report_mutex);
                    ++report.completed;
                    spdlog::info("done {}", key);
                    continue;
                } catch (const ExperimentAborted& e) {
                    numerical = e.numerical();
                    std::vector<double> partial;
                    for (const auto& rec : e.partial_records()) partial.push_back(rec.best_so_far);
                    failure["error"] = e.what();
                    failure["partial_per_round_best"] = partial;
                } catch (const std::exception& e) {
                    numerical = dynamic_cast<const NumericalError*>(&e) != nullptr;
                    failure["error"] = e.what();
                }
                failure["numerical"] = numerical;
                failures.append(failure.dump());
                std::lock_guard lock(report_mutex);
                ++report.failed;
                if (numerical) ++report.numerical_failures;
                spdlog::error("failed {}: {}", key, failure["error"].get<std::string>());
            }
        }
    };

    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(spec.parallelism), pending.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    write_summary(spec.output_dir / "summary.csv", spec, read_results(results_path));
    spdlog::info("completed {}, skipped {}, failed {}", report.completed, report.skipped, report.failed);
    return report;
}

ExportReport export_plot_data(const fs::path& results_dir) {
    ExportReport report;
    report.failures_skipped = static_cast<int>(read_lines(results_dir / "failures.jsonl").size());
    const auto rows = read_results(results_dir / "results.jsonl");
    if (rows.empty()) {
        spdlog::warn("no completed runs under {}", results_dir.string());
        return report;
    }
    const fs::path curves = results_dir / "plots" / "curves";
    const fs::path distances = results_dir / "plots" / "distances";
    fs::create_directories(curves);
    fs::create_directories(distances);

    std::map<std::string, int> used;
    for (const ResultRow& row : rows) {
        std::string stem = row.problem + "_Q" + std::to_string(row.Q) + "_" + row.method + "_T" +
                           csv_number(row.trade_off) + "_rep" + std::to_string(row.replicate);
        if (const int n = used[stem]++; n > 0) stem += "_" + std::to_string(n);

        std::ofstream curve(curves / (stem + ".csv"));
        curve << "round,best_so_far\n";
        for (std::size_t r = 0; r < row.per_round_best.size(); ++r) {
            curve << r << ',' << csv_number(row.per_round_best[r]) << '\n';
        }

        std::ofstream dist(distances / (stem + ".csv"));
        const std::size_t n_opt = row.distances.empty() ? 0 : row.distances.front().size();
        for (std::size_t j = 0; j < n_opt; ++j) dist << (j ? "," : "") << "optimum_" << j + 1;
        dist << '\n';
        for (const auto& round : row.distances) {
            for (std::size_t j = 0; j < round.size(); ++j) dist << (j ? "," : "") << csv_number(round[j]);
            dist << '\n';
        }
        ++report.runs_exported;
    }
    spdlog::info("exported {} completed runs, skipped {} failed runs", report.runs_exported,
                 report.failures_skipped);
    return report;
}

} // namespace beebo
