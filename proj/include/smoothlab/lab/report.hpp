#pragma once

// Report tables and their CSV / JSON renderings. Cells are JSON values so a
// table has one representation for both formats; non-finite doubles are
// stored as the strings "inf", "-inf" and "nan".

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "smoothlab/error.hpp"
#include "smoothlab/text_io.hpp"

namespace smoothlab::lab {

using Json = nlohmann::ordered_json;

inline Json num(double x) {
  if (std::isfinite(x)) return Json(x);
  return Json(format_double(x));
}

inline double from_num(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  fail(ErrorKind::invalid_input, "expected a number, got " + j.dump());
}

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;

  void add(std::vector<Json> row) {
    require(row.size() == columns.size(), ErrorKind::numerical, "row width differs from table '" + name + "'");
    rows.push_back(std::move(row));
  }

  Json to_json() const {
    Json arr = Json::array();
    for (const auto& r : rows) {
      Json o = Json::object();
      for (std::size_t c = 0; c < columns.size(); ++c) o[columns[c]] = r[c];
      arr.push_back(std::move(o));
    }
    return arr;
  }
};

/// One bound comparison. `status` is respected, violated, vacuous or
/// not_applicable; conjectural bounds are measured, never asserted.
struct Check {
  std::string bound;
  Json where;  // e.g. {"sigma": 0.1, "threshold": 40}
  double empirical = 0.0;
  double standard_error = 0.0;
  double value = 0.0;
  std::string status;
  bool conjectural = false;
};

/// empirical <= min(1, bound) + 3 SE counts as respected; a bound >= 1 says
/// nothing and is labeled vacuous.
inline std::string bound_status(double empirical, double se, double bound) {
  if (std::isnan(bound)) return "not_applicable";
  if (bound >= 1.0) return "vacuous";
  return empirical <= bound + 3.0 * se ? "respected" : "violated";
}

/// sqrt(p (1 - p) / trials).
inline double binomial_stderr(double p, std::size_t trials) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

struct Report {
  std::string schema;
  Json config = Json::object();
  Table main;
  std::vector<Table> extra;
  std::vector<Check> checks;
  Json meta = Json::object();
  std::vector<std::string> warnings;
  std::optional<Json> per_trial;

  const Table* table(std::string_view name) const {
    if (main.name == name) return &main;
    for (const auto& t : extra)
      if (t.name == name) return &t;
    return nullptr;
  }

  /// Counts checks with the given status.
  std::size_t count_checks(std::string_view status) const {
    std::size_t c = 0;
    for (const auto& ch : checks) c += ch.status == status;
    return c;
  }
};

inline std::string csv_cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }
  return v.dump();
}

/// Header row first, data rows, then '#' lines carrying the schema id and the
/// configuration echo.
inline std::string render_csv(const Report& r) {
  std::ostringstream out;
  const Table& t = r.main;
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_cell(row[c]);
    out << '\n';
  }
  out << "# schema=" << r.schema << '\n';
  out << "# config=" << r.config.dump() << '\n';
  for (const auto& w : r.warnings) out << "# warning=" << w << '\n';
  return out.str();
}

inline Json checks_to_json(const std::vector<Check>& checks) {
  Json arr = Json::array();
  for (const auto& c : checks) {
    Json o = Json::object();
    o["bound"] = c.bound;
    o["where"] = c.where;
    o["empirical"] = num(c.empirical);
    o["stderr"] = num(c.standard_error);
    o["value"] = num(c.value);
    o["status"] = c.status;
    o["conjectural"] = c.conjectural;
    arr.push_back(std::move(o));
  }
  return arr;
}

inline Json report_to_json(const Report& r) {
  Json doc = Json::object();
  doc["schema"] = r.schema;
  doc["config"] = r.config;
  doc["columns"] = r.main.columns;
  doc["rows"] = r.main.to_json();
  Json tables = Json::object();
  for (const auto& t : r.extra) tables[t.name] = t.to_json();
  doc["tables"] = std::move(tables);
  doc["checks"] = checks_to_json(r.checks);
  doc["meta"] = r.meta;
  doc["warnings"] = r.warnings;
  if (r.per_trial) doc["per_trial"] = *r.per_trial;
  return doc;
}

inline std::string render_json(const Report& r) { return report_to_json(r).dump(2) + "\n"; }

}  // namespace smoothlab::lab
