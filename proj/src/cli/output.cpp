#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cyclolms/cli.hpp"
#include "cyclolms/errors.hpp"

namespace cyclolms::cli {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("--out", "cannot write '" + path + "'");
  return f;
}

std::string csv_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, long long>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else {
          return v;
        }
      },
      c);
}

nlohmann::json json_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return nullptr;
          return v;
        } else {
          return v;
        }
      },
      c);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string write_table(const std::string& dir, const std::string& stem, const Table& table,
                        const nlohmann::json& manifest, const std::string& format) {
  std::filesystem::create_directories(dir);
  if (format == "json") {
    nlohmann::json doc;
    doc["schema_version"] = kOutputSchemaVersion;
    doc["manifest"] = manifest;
    doc["columns"] = table.columns;
    doc["rows"] = nlohmann::json::array();
    for (const auto& row : table.rows) {
      nlohmann::json r = nlohmann::json::array();
      for (const auto& c : row) r.push_back(json_cell(c));
      doc["rows"].push_back(std::move(r));
    }
    const std::string path = (std::filesystem::path(dir) / (stem + ".json")).string();
    write_json(path, doc);
    return path;
  }
  const std::string path = (std::filesystem::path(dir) / (stem + ".csv")).string();
  auto f = open_out(path);
  f << "# manifest " << manifest.dump() << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) f << (i ? "," : "") << table.columns[i];
  f << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << csv_cell(row[i]);
    f << '\n';
  }
  return path;
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  auto f = open_out(path);
  f << doc.dump(2) << '\n';
}

}  // namespace cyclolms::cli
