#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fas/covariance.hpp"

namespace fas::cli {

using Cell = std::variant<double, long long, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

// Everything a command produces. Tables go to CSV in order, separated by one
// blank line, each with its own header; JSON nests them under their names and
// merges `fields` at the top level.
struct Report {
    std::string command;
    std::vector<Table> tables;
    nlohmann::json fields = nlohmann::json::object();
};

// 17 significant digits; nan, inf and -inf spelled out.
std::string format_number(double v);

void write_csv(std::ostream& os, const Report& report);
void write_json(std::ostream& os, const Report& report);

struct RunManifest {
    std::string command;
    FasConfig config;
    std::vector<std::uint64_t> seeds;
    nlohmann::json evaluator_params = nlohmann::json::object();
    std::string output_path;
    std::string tool_version;
    std::vector<std::string> argv;
};

nlohmann::json to_json(const RunManifest& m);

// <output_path>.manifest.json
std::string manifest_path(const std::string& output_path);

// Throws std::runtime_error when the file cannot be written.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace fas::cli
