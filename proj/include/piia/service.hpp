#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"
#include "piia/error.hpp"
#include "piia/orchestrator.hpp"

namespace httplib {
class Server;
}

namespace piia {

// File config with environment overrides.  Relative paths resolve against
// the config file's directory.
struct Config {
  std::string schemas = std::string(PIIA_DATA_DIR) + "/schemas.jsonl";
  std::string examples = std::string(PIIA_DATA_DIR) + "/examples.jsonl";
  std::string embeddings = std::string(PIIA_DATA_DIR) + "/embeddings.txt";
  std::string model = std::string(PIIA_DATA_DIR) + "/model.json";
  std::string stop_words;  // builtin list when empty
  std::string templates;   // builtin templates when empty
  std::string rules;       // builtin modifier rules when empty
  std::string endpoint = "toy";
  std::size_t cap = 100;
  int k = 5;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  std::string session_log;
  std::chrono::seconds session_ttl{3600};

  static Config load(const std::filesystem::path& path);
  static Config from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  // PIIA_SCHEMAS, PIIA_EMBEDDINGS, PIIA_MODEL, PIIA_STOP_WORDS, PIIA_TEMPLATES,
  // PIIA_RULES, PIIA_ENDPOINT, PIIA_CAP, PIIA_K.
  void apply_env(const std::function<const char*(const char*)>& getenv_fn);
  void apply_env();
  nlohmann::json to_json() const;
};

// Everything a session or the simulator needs, loaded once.
class Runtime {
 public:
  // Loads schemas, embeddings and the trained model named by the config.
  explicit Runtime(const Config& config);
  // The parser comes from config.endpoint; the oracle endpoint reads
  // config.examples.
  Runtime(SchemaSet schemas, EmbeddingTable embeddings, EncoderModel model,
          const Config& config = {});
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  const Config& config() const { return config_; }
  const SchemaSet& schemas() const { return schemas_; }
  const EmbeddingTable& embeddings() const { return embeddings_; }
  const EncoderModel& model() const { return model_; }
  const ModelArtifacts& artifacts() const { return artifacts_; }
  const ParserGateway& gateway() const { return *gateway_; }
  const PairEncoder& encoder() const { return *encoder_; }

 private:
  void wire();

  Config config_;
  SchemaSet schemas_;
  EmbeddingTable embeddings_;
  EncoderModel model_;
  std::vector<Example> examples_;
  std::unique_ptr<LocalEncoder> encoder_;
  ModelArtifacts artifacts_;
  std::unique_ptr<ParserGateway> gateway_;
};

// In-memory sessions, one mutex per session.  Idle sessions expire after the
// TTL.  With a log path every create/answer is appended and replayed on
// construction.
class SessionStore {
 public:
  using Clock = std::chrono::steady_clock;

  SessionStore(const Runtime& runtime, std::chrono::seconds ttl = std::chrono::hours(1),
               std::string log_path = {});

  nlohmann::json create(const std::string& question, const std::string& db_id);
  nlohmann::json get(const std::string& id);
  nlohmann::json answer(const std::string& id, const nlohmann::json& request);
  std::size_t size();
  // Drops sessions idle for longer than the TTL as of `now`.
  std::size_t expire(Clock::time_point now = Clock::now());

 private:
  struct Entry {
    std::mutex mu;
    SessionState state;
    Clock::time_point touched;
  };

  std::shared_ptr<Entry> find(const std::string& id);
  SessionState apply_answer(const SessionState& s, const nlohmann::json& request) const;
  void append(const nlohmann::json& event);
  void replay();

  const Runtime& runtime_;
  std::chrono::seconds ttl_;
  std::string log_path_;
  std::mutex mu_;
  std::mutex log_mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::size_t next_id_ = 1;
};

int http_status(ErrorCode code);
nlohmann::json error_body(ErrorCode code, const std::string& message);

// POST /sessions, GET /sessions/{id}, POST /sessions/{id}/answers,
// GET /schemas, POST /encode, static files under / (built-in page when
// no directory is configured).
void register_routes(httplib::Server& server, const Runtime& runtime, SessionStore& store,
                     const std::string& static_dir = {});

nlohmann::json schemas_json(const SchemaSet& schemas);

// Client for another service's POST /encode.
class ExternalEncoder : public PairEncoder {
 public:
  explicit ExternalEncoder(std::string url,
                           std::chrono::milliseconds timeout = std::chrono::seconds(30));
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> encode_pair(
      const std::vector<std::string>& x, const std::vector<std::string>& restated) const override;

 private:
  std::string base_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mu_;
};

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);  // list of columns
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

}  // namespace piia
