#include "stochmech/field_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace stochmech {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json grid_to_json(const Grid& g) {
  json axes = json::array();
  for (const auto& ax : g.axes()) axes.push_back({{"lo", ax.lo}, {"hi", ax.hi}, {"n", ax.n}});
  return {{"dim", g.dim()}, {"axes", axes}, {"dt", g.dt()}};
}

Grid grid_from_json(const json& j) {
  std::vector<Axis> axes;
  for (const auto& a : j.at("axes")) axes.push_back(Axis{a.at("lo").get<double>(), a.at("hi").get<double>(), a.at("n").get<std::size_t>()});
  Grid g(std::move(axes), j.at("dt").get<double>());
  if (j.contains("dim") && j.at("dim").get<int>() != g.dim()) throw IoError("grid header dim does not match its axes");
  return g;
}

namespace {

const char* coord_names[] = {"x", "y"};

void check_columns(const Grid& g, const std::vector<Column>& columns) {
  for (const auto& c : columns) {
    if (c.values == nullptr || c.values->size() != g.size()) throw InvalidArgument("column '" + c.name + "' has wrong length");
  }
}

double parse_double(std::string_view s) {
  // strtod rather than from_chars: libstdc++ 11 lacks floating from_chars.
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end == tmp.c_str()) throw IoError("cannot parse number '" + tmp + "'");
  return v;
}

}  // namespace

void write_csv(std::ostream& os, const Grid& g, const std::vector<Column>& columns) {
  check_columns(g, columns);
  os << "# grid " << grid_to_json(g).dump() << '\n';
  for (int a = 0; a < g.dim(); ++a) os << (a ? "," : "") << coord_names[a];
  for (const auto& c : columns) os << ',' << c.name;
  os << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto p = g.point(i);
    for (int a = 0; a < g.dim(); ++a) os << (a ? "," : "") << format_double(p[a]);
    for (const auto& c : columns) os << ',' << format_double((*c.values)[i]);
    os << '\n';
  }
}

void write_ndjson(std::ostream& os, const Grid& g, const std::vector<Column>& columns, const json& meta) {
  check_columns(g, columns);
  json header = meta;
  header["type"] = "header";
  header["grid"] = grid_to_json(g);
  json names = json::array();
  for (const auto& c : columns) names.push_back(c.name);
  header["columns"] = names;
  os << header.dump() << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto p = g.point(i);
    os << "{\"i\":" << i;
    for (int a = 0; a < g.dim(); ++a) os << ",\"" << coord_names[a] << "\":" << format_double(p[a]);
    for (const auto& c : columns) os << ",\"" << c.name << "\":" << format_double((*c.values)[i]);
    os << "}\n";
  }
}

namespace {

std::pair<std::vector<double>, std::vector<double>> split(const ComplexField& f) {
  std::vector<double> re(f.size()), im(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    re[i] = f[i].real();
    im[i] = f[i].imag();
  }
  return {std::move(re), std::move(im)};
}

}  // namespace

void write_field_csv(std::ostream& os, const ScalarField& f, const std::string& name) {
  write_csv(os, f.grid, {{name, &f.values}});
}

void write_field_csv(std::ostream& os, const ComplexField& f) {
  auto [re, im] = split(f);
  write_csv(os, f.grid, {{"re", &re}, {"im", &im}});
}

void write_field_ndjson(std::ostream& os, const ScalarField& f, const std::string& name, const json& meta) {
  json m = meta;
  m["kind"] = "scalar";
  write_ndjson(os, f.grid, {{name, &f.values}}, m);
}

void write_field_ndjson(std::ostream& os, const ComplexField& f, const json& meta) {
  auto [re, im] = split(f);
  json m = meta;
  m["kind"] = "complex";
  write_ndjson(os, f.grid, {{"re", &re}, {"im", &im}}, m);
}

const std::vector<double>& FieldTable::column(std::string_view name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] == name) return data[c];
  }
  throw IoError("field table has no column '" + std::string(name) + "'");
}

bool FieldTable::has_column(std::string_view name) const {
  for (const auto& c : columns) {
    if (c == name) return true;
  }
  return false;
}

namespace {

FieldTable read_csv(std::istream& is, std::string first) {
  const std::string prefix = "# grid ";
  if (first.rfind(prefix, 0) != 0) throw IoError("CSV field file must start with a '# grid' line");
  json gj = json::parse(first.substr(prefix.size()));
  Grid g = grid_from_json(gj);
  std::string line;
  if (!std::getline(is, line)) throw IoError("CSV field file has no header row");
  std::vector<std::string> names;
  {
    std::istringstream hs(line);
    std::string tok;
    while (std::getline(hs, tok, ',')) names.push_back(tok);
  }
  const std::size_t ncoord = static_cast<std::size_t>(g.dim());
  if (names.size() < ncoord) throw IoError("CSV header row is too short");
  FieldTable t{g, {{"grid", gj}}, {names.begin() + ncoord, names.end()}, {}};
  t.data.assign(t.columns.size(), std::vector<double>(g.size()));
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (row >= g.size()) throw IoError("CSV field file has more rows than grid points");
    std::size_t col = 0, pos = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      if (col >= ncoord) {
        if (col - ncoord >= t.columns.size()) throw IoError("CSV row has too many values");
        t.data[col - ncoord][row] = parse_double(std::string_view(line).substr(pos, next - pos));
      }
      ++col;
      pos = next + 1;
    }
    if (col != names.size()) throw IoError("CSV row " + std::to_string(row) + " has wrong column count");
    ++row;
  }
  if (row != g.size()) throw IoError("CSV field file has fewer rows than grid points");
  return t;
}

FieldTable read_ndjson(std::istream& is, const std::string& first) {
  json header = json::parse(first);
  if (header.value("type", "") != "header") throw IoError("NDJSON field file must start with a header record");
  Grid g = grid_from_json(header.at("grid"));
  FieldTable t{g, header, header.at("columns").get<std::vector<std::string>>(), {}};
  t.data.assign(t.columns.size(), std::vector<double>(g.size()));
  std::vector<std::uint8_t> seen(g.size(), 0);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    const auto i = rec.at("i").get<std::size_t>();
    if (i >= g.size()) throw IoError("NDJSON record index out of range");
    for (std::size_t c = 0; c < t.columns.size(); ++c) t.data[c][i] = rec.at(t.columns[c]).get<double>();
    seen[i] = 1;
  }
  for (auto s : seen) {
    if (!s) throw IoError("NDJSON field file is missing grid points");
  }
  return t;
}

}  // namespace

FieldTable read_table(std::istream& is) {
  std::string first;
  if (!std::getline(is, first)) throw IoError("empty field file");
  if (!first.empty() && first[0] == '{') return read_ndjson(is, first);
  return read_csv(is, first);
}

FieldTable read_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return read_table(in);
  } catch (const json::exception& e) {
    throw IoError("malformed field file '" + path + "': " + e.what());
  }
}

ScalarField scalar_field_from(const FieldTable& t, std::string_view name) {
  if (name.empty()) {
    if (t.columns.size() != 1) throw IoError("field table has several columns; name one");
    return ScalarField(t.grid, t.data[0]);
  }
  return ScalarField(t.grid, t.column(name));
}

ComplexField complex_field_from(const FieldTable& t) {
  const auto& re = t.column("re");
  const auto& im = t.column("im");
  ComplexField f(t.grid);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = {re[i], im[i]};
  return f;
}

}  // namespace stochmech
