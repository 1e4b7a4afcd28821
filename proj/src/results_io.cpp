#include <fstream>

#include <json.hpp>

#include "beebo/runner.hpp"

namespace beebo {

namespace {

using nlohmann::json;

json to_json(const ResultRow& row) {
    return json{{"problem", row.problem},
                {"d", row.d},
                {"Q", row.Q},
                {"method", row.method},
                {"trade_off", row.trade_off},
                {"replicate", row.replicate},
                {"normalized_best", row.normalized_best},
                {"R_rel", row.R_rel},
                {"per_round_best", row.per_round_best},
                {"distances", row.distances}};
}

} // namespace

std::string to_json_line(const ResultRow& row) { return to_json(row).dump(); }

ResultRow result_from_json_line(const std::string& line) {
    try {
        const json j = json::parse(line);
        ResultRow row;
        j.at("problem").get_to(row.problem);
        j.at("d").get_to(row.d);
        j.at("Q").get_to(row.Q);
        j.at("method").get_to(row.method);
        j.at("trade_off").get_to(row.trade_off);
        j.at("replicate").get_to(row.replicate);
        j.at("normalized_best").get_to(row.normalized_best);
        j.at("R_rel").get_to(row.R_rel);
        j.at("per_round_best").get_to(row.per_round_best);
        j.at("distances").get_to(row.distances);
        return row;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed result row: ") + e.what());
    }
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
    std::vector<ResultRow> rows;
    std::ifstream in(path);
    if (!in) return rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(result_from_json_line(line));
    }
    return rows;
}

} // namespace beebo
