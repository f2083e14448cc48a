#pragma once

#include <string>

#include "piia/encoder.hpp"
#include "piia/schema.hpp"

namespace fixtures {

inline const char* kPetsSchema =
    R"({"db_id": "pets", "tables": [)"
    R"({"name": "student", "columns": [{"name": "stuid", "type": "number"}, {"name": "lname", "type": "text"}, {"name": "fname", "type": "text"}, {"name": "age", "type": "number"}, {"name": "sex", "type": "text"}, {"name": "major", "type": "number"}]},)"
    R"({"name": "has_pet", "columns": [{"name": "stuid", "type": "number"}, {"name": "petid", "type": "number"}]},)"
    R"({"name": "pet", "columns": [{"name": "petid", "type": "number"}, {"name": "pettype", "type": "text"}, {"name": "pet_age", "type": "number"}, {"name": "weight", "type": "number"}]}]})";

inline piia::DatabaseSchema pets() { return piia::parse_schemas(kPetsSchema).front(); }

inline piia::SchemaSet pets_set() { return piia::SchemaSet(piia::parse_schemas(kPetsSchema)); }

inline std::string data(const std::string& name) { return std::string(PIIA_DATA_DIR) + "/" + name; }

inline const piia::SchemaSet& bundled_schemas() {
  static const piia::SchemaSet s(piia::load_schemas(data("schemas.jsonl")));
  return s;
}

inline const piia::EmbeddingTable& bundled_embeddings() {
  static const piia::EmbeddingTable t = piia::EmbeddingTable::load(data("embeddings.txt"));
  return t;
}

}  // namespace fixtures
