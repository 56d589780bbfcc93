#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stochmech/field.hpp"

namespace stochmech {

/// Decimal with 17 significant digits; parses back to the identical double.
std::string format_double(double v);

nlohmann::json grid_to_json(const Grid& g);
Grid grid_from_json(const nlohmann::json& j);

/// A named column of per-point values written alongside the grid coordinates.
struct Column {
  std::string name;
  const std::vector<double>* values;
};

/// Flat CSV: a "# grid {...}" comment line, a header row, then one row per
/// grid point with coordinates followed by the given columns.
void write_csv(std::ostream& os, const Grid& g, const std::vector<Column>& columns);

/// NDJSON: one header record (grid plus `meta` merged in), then one record
/// per point {"i", "x"[, "y"], <columns>...}.
void write_ndjson(std::ostream& os, const Grid& g, const std::vector<Column>& columns,
                  const nlohmann::json& meta = nlohmann::json::object());

void write_field_csv(std::ostream& os, const ScalarField& f, const std::string& name = "value");
void write_field_csv(std::ostream& os, const ComplexField& f);
void write_field_ndjson(std::ostream& os, const ScalarField& f, const std::string& name = "value",
                        const nlohmann::json& meta = nlohmann::json::object());
void write_field_ndjson(std::ostream& os, const ComplexField& f,
                        const nlohmann::json& meta = nlohmann::json::object());

/// Table read back from either format.
struct FieldTable {
  Grid grid;
  nlohmann::json header;
  std::vector<std::string> columns;       ///< value columns, coordinates excluded
  std::vector<std::vector<double>> data;  ///< data[c][point]

  const std::vector<double>& column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

FieldTable read_table(std::istream& is);
/// Dispatches on extension: ".csv" or ".ndjson"/".jsonl".
FieldTable read_table_file(const std::string& path);

ScalarField scalar_field_from(const FieldTable& t, std::string_view name = {});
ComplexField complex_field_from(const FieldTable& t);

}  // namespace stochmech
