#include "coact/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "coact/errors.hpp"

namespace coact::estimation {

const char* to_string(ColumnType t) {
  switch (t) {
    case ColumnType::binary: return "binary";
    case ColumnType::ordinal: return "ordinal";
    case ColumnType::continuous: return "continuous";
  }
  return "?";
}

ColumnType column_type_from_string(const std::string& s) {
  if (s == "binary") return ColumnType::binary;
  if (s == "ordinal") return ColumnType::ordinal;
  if (s == "continuous") return ColumnType::continuous;
  throw UsageError("unknown column type '" + s + "'");
}

Dataset::Dataset(std::vector<Column> columns, std::string outcome)
    : columns_(std::move(columns)), outcome_(std::move(outcome)) {
  std::set<std::string> names;
  for (const auto& c : columns_) {
    if (!names.insert(c.name).second) throw UsageError("duplicate column '" + c.name + "'");
    if (c.values.size() != columns_.front().values.size())
      throw UsageError("column '" + c.name + "' has a different length");
  }
  if (!has(outcome_)) throw UsageError("outcome column '" + outcome_ + "' is missing");
  for (double v : column(outcome_).values)
    if (!std::isnan(v) && v != 0.0 && v != 1.0)
      throw UsageError("outcome column '" + outcome_ + "' must be 0/1");
}

bool Dataset::has(const std::string& name) const {
  return std::any_of(columns_.begin(), columns_.end(),
                     [&](const Column& c) { return c.name == name; });
}

const Column& Dataset::column(const std::string& name) const {
  for (const auto& c : columns_)
    if (c.name == name) return c;
  throw UsageError("no column named '" + name + "'");
}

void Dataset::add_column(Column c) {
  if (has(c.name)) throw UsageError("duplicate column '" + c.name + "'");
  if (!columns_.empty() && c.values.size() != rows())
    throw UsageError("column '" + c.name + "' has a different length");
  columns_.push_back(std::move(c));
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.outcome_ = outcome_;
  out.columns_.reserve(columns_.size());
  for (const auto& c : columns_) {
    Column sel{c.name, c.type, {}};
    sel.values.reserve(rows.size());
    for (auto r : rows) sel.values.push_back(c.values.at(r));
    out.columns_.push_back(std::move(sel));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Schema sidecar

Schema schema_of(const Dataset& d) {
  Schema s;
  s.outcome = d.outcome();
  for (const auto& c : d.columns()) s.columns.emplace_back(c.name, c.type);
  return s;
}

Schema schema_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("columns") || !j.contains("outcome"))
    throw UsageError("schema needs 'columns' and 'outcome'");
  Schema s;
  s.outcome = j.at("outcome").get<std::string>();
  for (const auto& c : j.at("columns")) {
    if (!c.contains("name")) throw UsageError("schema column without 'name'");
    s.columns.emplace_back(c.at("name").get<std::string>(),
                           column_type_from_string(c.value("type", std::string("continuous"))));
  }
  return s;
}

nlohmann::json schema_to_json(const Schema& s) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& [name, type] : s.columns) cols.push_back({{"name", name}, {"type", to_string(type)}});
  return {{"columns", cols}, {"outcome", s.outcome}};
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cell);
      cell.clear();
    } else {
      cell += ch;
    }
  }
  out.push_back(cell);
  for (auto& c : out) {
    auto b = c.find_first_not_of(" \t\r");
    auto e = c.find_last_not_of(" \t\r");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return out;
}

double parse_cell(const std::string& s, std::size_t line, const std::string& col) {
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == ".") return kMissing;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw UsageError("line " + std::to_string(line) + ", column '" + col +
                     "': not a number: '" + s + "'");
  return v;
}

}  // namespace

Dataset parse_csv(const std::string& text, const Schema& schema) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw UsageError("CSV input is empty");
  const auto header = split_line(line);

  std::vector<Column> cols;
  for (const auto& name : header) {
    auto it = std::find_if(schema.columns.begin(), schema.columns.end(),
                           [&](const auto& c) { return c.first == name; });
    if (it == schema.columns.end())
      throw UsageError("CSV column '" + name + "' is not declared in the schema");
    cols.push_back({name, it->second, {}});
  }
  for (const auto& [name, type] : schema.columns)
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw UsageError("schema column '" + name + "' is missing from the CSV header");

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw UsageError("line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                       " fields, header has " + std::to_string(header.size()));
    for (std::size_t k = 0; k < cells.size(); ++k)
      cols[k].values.push_back(parse_cell(cells[k], lineno, header[k]));
  }
  return Dataset(std::move(cols), schema.outcome);
}

Dataset read_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_csv(buf.str(), schema);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string to_csv(const Dataset& d) {
  std::string out;
  const auto& cols = d.columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out += (k ? "," : "") + cols[k].name;
  out += '\n';
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (k) out += ',';
      out += format_number(cols[k].values[r]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + path.string() + "'");
  f << to_csv(d);
}

std::filesystem::path default_schema_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".schema.json");
  return p;
}

}  // namespace coact::estimation
