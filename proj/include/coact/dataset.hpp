#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace coact::estimation {

enum class ColumnType { binary, ordinal, continuous };
const char* to_string(ColumnType t);
ColumnType column_type_from_string(const std::string& s);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct Column {
  std::string name;
  ColumnType type = ColumnType::continuous;
  std::vector<double> values;  // NaN marks a missing entry
};

/// Rectangular table of numeric columns with one designated binary outcome.
class Dataset {
public:
  Dataset() = default;
  /// UsageError if columns differ in length, names repeat, the outcome is
  /// absent, or an observed outcome value is not 0/1.
  Dataset(std::vector<Column> columns, std::string outcome);

  std::size_t rows() const { return columns_.empty() ? 0 : columns_.front().values.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const std::string& outcome() const { return outcome_; }

  bool has(const std::string& name) const;
  const Column& column(const std::string& name) const;
  const std::vector<double>& values(const std::string& name) const { return column(name).values; }

  void add_column(Column c);
  Dataset select_rows(std::span<const std::size_t> rows) const;

private:
  std::vector<Column> columns_;
  std::string outcome_;
};

/// Sidecar describing a CSV file: column types and the outcome column.
struct Schema {
  std::vector<std::pair<std::string, ColumnType>> columns;
  std::string outcome;
};

Schema schema_of(const Dataset& d);
Schema schema_from_json(const nlohmann::json& j);
nlohmann::json schema_to_json(const Schema& s);

/// Header row required; empty, "NA", "NaN" and "." cells are missing.
Dataset read_csv(const std::filesystem::path& path, const Schema& schema);
Dataset parse_csv(const std::string& text, const Schema& schema);
std::string to_csv(const Dataset& d);
void write_csv(const std::filesystem::path& path, const Dataset& d);

/// "data.csv" -> "data.schema.json"
std::filesystem::path default_schema_path(const std::filesystem::path& csv);

/// Shortest text that reads back to the same double.
std::string format_number(double v);

}  // namespace coact::estimation
