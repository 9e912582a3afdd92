#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace cyclolms::cli {

/// Empty cell, integer, real or text.
using Cell = std::variant<std::monostate, long long, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Shortest decimal that round-trips.
std::string format_double(double v);

/// CSV: "# manifest <json>" line, header, rows. JSON: {schema_version,
/// manifest, columns, rows}. Returns the path written (extension added).
std::string write_table(const std::string& dir, const std::string& stem, const Table& table,
                        const nlohmann::json& manifest, const std::string& format);

void write_json(const std::string& path, const nlohmann::json& doc);

}  // namespace cyclolms::cli
