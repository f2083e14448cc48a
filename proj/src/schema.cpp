#include "piia/schema.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "piia/error.hpp"
#include "piia/sql.hpp"
#include "piia/text.hpp"

namespace piia {

using nlohmann::json;

std::string_view value_type_name(ValueType type) {
  switch (type) {
    case ValueType::kText: return "text";
    case ValueType::kNumber: return "number";
    case ValueType::kTime: return "time";
    case ValueType::kBoolean: return "boolean";
    case ValueType::kOther: return "other";
  }
  return "other";
}

ValueType parse_value_type(std::string_view name) {
  std::string n = to_lower(name);
  if (n == "text") return ValueType::kText;
  if (n == "number") return ValueType::kNumber;
  if (n == "time") return ValueType::kTime;
  if (n == "boolean") return ValueType::kBoolean;
  if (n == "other") return ValueType::kOther;
  throw Error(ErrorCode::kValidation, "unknown column type '" + std::string(name) + "'");
}

const ColumnDef* TableDef::find_column(std::string_view column) const {
  std::string n = to_lower(column);
  for (const auto& c : columns) {
    if (c.name == n) return &c;
  }
  return nullptr;
}

DatabaseSchema::DatabaseSchema(std::string db_id, std::vector<TableDef> tables)
    : db_id_(std::move(db_id)), tables_(std::move(tables)) {
  if (db_id_.empty()) throw Error(ErrorCode::kValidation, "schema db_id is empty");
  std::unordered_set<std::string> table_names;
  std::unordered_set<std::string> seen_units;
  std::unordered_set<std::string> seen_columns;
  for (auto& t : tables_) {
    t.name = to_lower(t.name);
    if (t.name.empty()) {
      throw Error(ErrorCode::kValidation, "schema '" + db_id_ + "' has a table with no name");
    }
    if (!table_names.insert(t.name).second) {
      throw Error(ErrorCode::kValidation,
                  "schema '" + db_id_ + "' declares table '" + t.name + "' twice");
    }
    if (t.columns.empty()) {
      throw Error(ErrorCode::kValidation,
                  "table '" + t.name + "' in schema '" + db_id_ + "' has no columns");
    }
    std::unordered_set<std::string> column_names;
    for (auto& c : t.columns) {
      c.name = to_lower(c.name);
      if (c.name.empty() || !column_names.insert(c.name).second) {
        throw Error(ErrorCode::kValidation, "table '" + t.name + "' in schema '" + db_id_ +
                                                "' has an empty or duplicate column '" +
                                                c.name + "'");
      }
    }
    if (seen_units.insert(t.name).second) name_units_.push_back(t.name);
  }
  for (const auto& t : tables_) {
    for (const auto& c : t.columns) {
      if (seen_columns.insert(c.name).second) {
        distinct_columns_.push_back({c.name, t.name, c.type});
      }
      if (seen_units.insert(c.name).second) name_units_.push_back(c.name);
    }
  }
}

const TableDef* DatabaseSchema::find_table(std::string_view name) const {
  std::string n = to_lower(name);
  for (const auto& t : tables_) {
    if (t.name == n) return &t;
  }
  return nullptr;
}

std::vector<const TableDef*> DatabaseSchema::tables_with_column(std::string_view column) const {
  std::string n = to_lower(column);
  std::vector<const TableDef*> out;
  for (const auto& t : tables_) {
    if (t.find_column(n)) out.push_back(&t);
  }
  return out;
}

std::size_t occurrence_count(const DatabaseSchema& schema, std::string_view token) {
  std::string t = to_lower(token);
  std::size_t count = 0;
  for (const auto& name : schema.name_units()) {
    auto units = split_name_units(name);
    if (std::find(units.begin(), units.end(), t) != units.end()) ++count;
  }
  return count;
}

SchemaSet::SchemaSet(std::vector<DatabaseSchema> schemas) : schemas_(std::move(schemas)) {
  std::unordered_set<std::string> ids;
  for (const auto& s : schemas_) {
    if (!ids.insert(s.db_id()).second) {
      throw Error(ErrorCode::kValidation, "duplicate db_id '" + s.db_id() + "'");
    }
  }
}

const DatabaseSchema* SchemaSet::find(std::string_view db_id) const {
  for (const auto& s : schemas_) {
    if (s.db_id() == db_id) return &s;
  }
  return nullptr;
}

const DatabaseSchema& SchemaSet::at(std::string_view db_id) const {
  if (const auto* s = find(db_id)) return *s;
  throw Error(ErrorCode::kNotFound, "unknown db_id '" + std::string(db_id) + "'");
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename Fn>
void for_each_record(std::string_view text, std::string_view source, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                          : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (split_whitespace(line).empty()) continue;
    std::string context = std::string(source) + ":" + std::to_string(line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse, context + ": malformed record: " + e.what());
    }
    try {
      fn(record, context);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, context + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<DatabaseSchema> parse_schemas(std::string_view text, std::string_view source) {
  std::vector<DatabaseSchema> out;
  std::unordered_set<std::string> ids;
  for_each_record(text, source, [&](const json& rec, const std::string& context) {
    std::vector<TableDef> tables;
    for (const auto& t : rec.at("tables")) {
      TableDef def;
      def.name = t.at("name").get<std::string>();
      for (const auto& c : t.at("columns")) {
        def.columns.push_back(
            {c.at("name").get<std::string>(),
             parse_value_type(c.value("type", std::string("text")))});
      }
      tables.push_back(std::move(def));
    }
    try {
      DatabaseSchema schema(rec.at("db_id").get<std::string>(), std::move(tables));
      if (!ids.insert(schema.db_id()).second) {
        throw Error(ErrorCode::kValidation, "duplicate db_id '" + schema.db_id() + "'");
      }
      out.push_back(std::move(schema));
    } catch (const Error& e) {
      throw Error(e.code(), context + ": " + e.what());
    }
  });
  return out;
}

std::vector<DatabaseSchema> load_schemas(const std::filesystem::path& path) {
  return parse_schemas(read_file(path), path.string());
}

std::vector<Example> parse_examples(std::string_view text, const SchemaSet& schemas,
                                    std::string_view source) {
  std::vector<Example> out;
  for_each_record(text, source, [&](const json& rec, const std::string& context) {
    Example ex{rec.at("question").get<std::string>(), rec.at("sql").get<std::string>(),
               rec.at("db_id").get<std::string>()};
    const DatabaseSchema* schema = schemas.find(ex.db_id);
    if (!schema) {
      throw Error(ErrorCode::kValidation,
                  context + ": record references unknown db_id '" + ex.db_id + "'");
    }
    try {
      parse_sql(ex.gold_sql, *schema);
    } catch (const Error& e) {
      throw Error(ErrorCode::kValidation, context + ": gold SQL rejected: " + e.what());
    }
    out.push_back(std::move(ex));
  });
  return out;
}

std::vector<Example> load_examples(const std::filesystem::path& path, const SchemaSet& schemas) {
  return parse_examples(read_file(path), schemas, path.string());
}

}  // namespace piia
