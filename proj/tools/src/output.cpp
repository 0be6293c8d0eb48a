#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace fas::cli {

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string cell_text(const Cell& c)
{
    if (const auto* d = std::get_if<double>(&c))
        return format_number(*d);
    if (const auto* i = std::get_if<long long>(&c))
        return std::to_string(*i);
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string quoted = "\"";
    for (char ch : s) {
        if (ch == '"')
            quoted += '"';
        quoted += ch;
    }
    return quoted + '"';
}

nlohmann::json cell_json(const Cell& c)
{
    if (const auto* d = std::get_if<double>(&c)) {
        if (std::isfinite(*d))
            return *d;
        return format_number(*d);
    }
    if (const auto* i = std::get_if<long long>(&c))
        return *i;
    return std::get<std::string>(c);
}

}  // namespace

void write_csv(std::ostream& os, const Report& report)
{
    for (std::size_t t = 0; t < report.tables.size(); ++t) {
        const Table& table = report.tables[t];
        if (t > 0)
            os << '\n';
        for (std::size_t i = 0; i < table.columns.size(); ++i)
            os << (i ? "," : "") << table.columns[i];
        os << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                os << (i ? "," : "") << cell_text(row[i]);
            os << '\n';
        }
    }
}

void write_json(std::ostream& os, const Report& report)
{
    nlohmann::json out = report.fields;
    out["command"] = report.command;
    for (const Table& table : report.tables) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : table.rows) {
            nlohmann::json r = nlohmann::json::array();
            for (const Cell& c : row)
                r.push_back(cell_json(c));
            rows.push_back(std::move(r));
        }
        out[table.name] = {{"columns", table.columns}, {"rows", std::move(rows)}};
    }
    os << out.dump(2) << '\n';
}

nlohmann::json to_json(const RunManifest& m)
{
    return {
        {"command", m.command},
        {"config",
         {{"n_ports", m.config.n_ports},
          {"width", m.config.width},
          {"sigma2", m.config.sigma2},
          {"snr_target_db", m.config.snr_target_db}}},
        {"seeds", m.seeds},
        {"evaluator_params", m.evaluator_params},
        {"output_path", m.output_path},
        {"tool_version", m.tool_version},
        {"argv", m.argv},
    };
}

std::string manifest_path(const std::string& output_path) { return output_path + ".manifest.json"; }

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot open " + path + " for writing");
    f << text;
    if (!f)
        throw std::runtime_error("write to " + path + " failed");
}

}  // namespace fas::cli
