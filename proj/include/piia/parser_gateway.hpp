#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "piia/schema.hpp"
#include "piia/sql.hpp"

namespace piia {

struct ToyParserConfig {
  double strictness = 1.0;  // chance an unmarked column mention is recognized
  std::uint64_t seed = 0;
};

struct ParserEndpoint {
  enum class Kind { kBuiltinToy, kBuiltinOracle, kSubprocess, kHttp };
  Kind kind = Kind::kBuiltinToy;
  std::string location;
  std::chrono::milliseconds timeout{30000};
  ToyParserConfig toy;

  // "toy", "toy:<strictness>[:<seed>]", "oracle", "subprocess:<command>",
  // "http://host:port/path".
  static ParserEndpoint parse(std::string_view text);
  std::string describe() const;
};

// Black-box question -> SQL text translator.
class TextToSql {
 public:
  virtual ~TextToSql() = default;
  virtual std::string translate(const std::string& question, const std::string& db_id) = 0;
};

class ToyParser : public TextToSql {
 public:
  ToyParser(const SchemaSet& schemas, ToyParserConfig config = {})
      : schemas_(schemas), config_(config) {}

  std::string translate(const std::string& question, const std::string& db_id) override;
  SqlQuery parse_question(const std::string& question, const DatabaseSchema& schema) const;

 private:
  const SchemaSet& schemas_;
  ToyParserConfig config_;
};

// Looks the question up among known examples; unknown questions fall back
// to the toy parser.
class OracleParser : public TextToSql {
 public:
  OracleParser(const SchemaSet& schemas, const std::vector<Example>& examples);
  std::string translate(const std::string& question, const std::string& db_id) override;

 private:
  std::map<std::pair<std::string, std::string>, std::string> gold_;
  ToyParser fallback_;
};

// Line protocol over a child's stdin/stdout: {"question", "db_id"} in,
// {"sql"} or {"error"} out, one JSON object per line.
class SubprocessParser : public TextToSql {
 public:
  SubprocessParser(std::string command, std::chrono::milliseconds timeout);
  ~SubprocessParser() override;
  SubprocessParser(const SubprocessParser&) = delete;
  SubprocessParser& operator=(const SubprocessParser&) = delete;

  std::string translate(const std::string& question, const std::string& db_id) override;

 private:
  void start();
  void stop();
  std::string read_line();

  std::string command_;
  std::chrono::milliseconds timeout_;
  std::mutex mu_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

class HttpParser : public TextToSql {
 public:
  HttpParser(std::string url, std::chrono::milliseconds timeout);
  std::string translate(const std::string& question, const std::string& db_id) override;

 private:
  std::string base_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  std::mutex mu_;
};

std::shared_ptr<TextToSql> make_parser(const ParserEndpoint& endpoint, const SchemaSet& schemas,
                                       const std::vector<Example>& oracle_examples = {});

// Question in, resolved SQL out.  Adapter failures and unparseable SQL
// become Error(kGateway) carrying the diagnostics.
class ParserGateway {
 public:
  ParserGateway(std::shared_ptr<TextToSql> backend, const SchemaSet& schemas)
      : backend_(std::move(backend)), schemas_(schemas) {}

  SqlQuery parse(const std::string& question, const std::string& db_id) const;
  const SchemaSet& schemas() const { return schemas_; }

 private:
  std::shared_ptr<TextToSql> backend_;
  const SchemaSet& schemas_;
};

}  // namespace piia
