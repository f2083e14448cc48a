#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace piia {

enum class ValueType { kText, kNumber, kTime, kBoolean, kOther };

std::string_view value_type_name(ValueType type);
ValueType parse_value_type(std::string_view name);

struct ColumnDef {
  std::string name;
  ValueType type = ValueType::kText;
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;

  const ColumnDef* find_column(std::string_view column) const;
};

inline constexpr std::array<std::string_view, 5> kAggregationNames = {
    "min", "max", "sum", "avg", "count"};

// Immutable description of one database.  Identifiers are stored lowercased
// so that lookups are case-insensitive.
class DatabaseSchema {
 public:
  DatabaseSchema(std::string db_id, std::vector<TableDef> tables);

  const std::string& db_id() const { return db_id_; }
  const std::vector<TableDef>& tables() const { return tables_; }

  const TableDef* find_table(std::string_view name) const;
  // Tables (in declaration order) that declare `column`.
  std::vector<const TableDef*> tables_with_column(std::string_view column) const;

  // Distinct column names in first-declaration order, with the owning table
  // of the first declaration.
  struct DistinctColumn {
    std::string name;
    std::string table;
    ValueType type;
  };
  const std::vector<DistinctColumn>& distinct_columns() const { return distinct_columns_; }

  // Distinct identifier strings over tables and columns.
  const std::vector<std::string>& name_units() const { return name_units_; }

 private:
  std::string db_id_;
  std::vector<TableDef> tables_;
  std::vector<DistinctColumn> distinct_columns_;
  std::vector<std::string> name_units_;
};

// Number of distinct schema names (tables and columns) whose underscore /
// whitespace split contains `token` (already lowercased, single word).
std::size_t occurrence_count(const DatabaseSchema& schema, std::string_view token);

struct Example {
  std::string question;
  std::string gold_sql;
  std::string db_id;
};

class SchemaSet {
 public:
  SchemaSet() = default;
  explicit SchemaSet(std::vector<DatabaseSchema> schemas);

  const DatabaseSchema* find(std::string_view db_id) const;
  const DatabaseSchema& at(std::string_view db_id) const;
  const std::vector<DatabaseSchema>& all() const { return schemas_; }
  std::size_t size() const { return schemas_.size(); }
  bool empty() const { return schemas_.empty(); }

 private:
  std::vector<DatabaseSchema> schemas_;
};

// Line-delimited JSON: {"db_id", "tables": [{"name", "columns": [{"name",
// "type"}]}]} per line.
std::vector<DatabaseSchema> load_schemas(const std::filesystem::path& path);
std::vector<DatabaseSchema> parse_schemas(std::string_view text,
                                          std::string_view source = "<memory>");

// Line-delimited JSON: {"question", "sql", "db_id"} per line.  Gold SQL is
// validated against the referenced schema.
std::vector<Example> load_examples(const std::filesystem::path& path,
                                   const SchemaSet& schemas);
std::vector<Example> parse_examples(std::string_view text, const SchemaSet& schemas,
                                    std::string_view source = "<memory>");

}  // namespace piia
