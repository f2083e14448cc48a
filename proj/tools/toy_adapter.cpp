// The builtin toy parser behind the subprocess line protocol.
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "piia/error.hpp"
#include "piia/parser_gateway.hpp"

int main(int argc, char** argv) {
  CLI::App app{"toy parser adapter: {question, db_id} per line in, {sql} or {error} out"};
  std::string schemas_path = std::string(PIIA_DATA_DIR) + "/schemas.jsonl";
  piia::ToyParserConfig cfg;
  app.add_option("--schemas", schemas_path);
  app.add_option("--strictness", cfg.strictness);
  app.add_option("--seed", cfg.seed);
  CLI11_PARSE(app, argc, argv);

  piia::SchemaSet schemas;
  try {
    schemas = piia::SchemaSet(piia::load_schemas(schemas_path));
  } catch (const piia::Error& e) {
    std::cerr << "toy_adapter: " << e.what() << "\n";
    return 1;
  }
  piia::ToyParser parser(schemas, cfg);
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    nlohmann::json out;
    try {
      auto req = nlohmann::json::parse(line);
      out["sql"] = parser.translate(req.at("question").get<std::string>(), req.at("db_id").get<std::string>());
    } catch (const std::exception& e) {
      out["error"] = e.what();
    }
    std::cout << out.dump() << std::endl;
  }
  return 0;
}
