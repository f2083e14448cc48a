#include "piia/service.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "piia/error.hpp"

namespace piia {

namespace {

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (base / p).string();
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kConfiguration, std::string("config field '") + key + "' has the wrong type");
  }
}

long parse_count(const char* name, const char* text) {
  char* end = nullptr;
  long v = std::strtol(text, &end, 10);
  if (end == text || *end != '\0' || v < 0) {
    throw Error(ErrorCode::kConfiguration, std::string(name) + " must be a non-negative integer, got '" + text + "'");
  }
  return v;
}

}  // namespace

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

Config Config::from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw Error(ErrorCode::kConfiguration, "config must be an object");
  Config c;
  for (auto [key, field] : {std::pair{"schemas", &c.schemas}, {"examples", &c.examples},
                            {"embeddings", &c.embeddings}, {"model", &c.model},
                            {"stop_words", &c.stop_words}, {"templates", &c.templates},
                            {"rules", &c.rules}, {"static_dir", &c.static_dir},
                            {"session_log", &c.session_log}}) {
    if (j.contains(key)) {
      read_field(j, key, *field);
      *field = resolve(base, *field);
    }
  }
  read_field(j, "endpoint", c.endpoint);
  read_field(j, "cap", c.cap);
  read_field(j, "k", c.k);
  read_field(j, "host", c.host);
  read_field(j, "port", c.port);
  if (j.contains("session_ttl_seconds")) {
    long long ttl = 0;
    read_field(j, "session_ttl_seconds", ttl);
    c.session_ttl = std::chrono::seconds(ttl);
  }
  if (c.k < 3) throw Error(ErrorCode::kConfiguration, "k must be at least 3");
  return c;
}

void Config::apply_env(const std::function<const char*(const char*)>& getenv_fn) {
  for (auto [name, field] : {std::pair{"PIIA_SCHEMAS", &schemas}, {"PIIA_EMBEDDINGS", &embeddings},
                             {"PIIA_MODEL", &model}, {"PIIA_STOP_WORDS", &stop_words},
                             {"PIIA_TEMPLATES", &templates}, {"PIIA_RULES", &rules},
                             {"PIIA_ENDPOINT", &endpoint}}) {
    if (const char* v = getenv_fn(name)) *field = v;
  }
  if (const char* v = getenv_fn("PIIA_CAP")) cap = static_cast<std::size_t>(parse_count("PIIA_CAP", v));
  if (const char* v = getenv_fn("PIIA_K")) {
    k = static_cast<int>(parse_count("PIIA_K", v));
    if (k < 3) throw Error(ErrorCode::kConfiguration, "PIIA_K must be at least 3");
  }
}

void Config::apply_env() {
  apply_env([](const char* name) { return std::getenv(name); });
}

nlohmann::json Config::to_json() const {
  return {{"schemas", schemas},       {"examples", examples}, {"embeddings", embeddings},
          {"model", model},           {"stop_words", stop_words}, {"templates", templates},
          {"rules", rules},           {"endpoint", endpoint}, {"cap", cap},
          {"k", k},                   {"host", host},         {"port", port},
          {"static_dir", static_dir}, {"session_log", session_log},
          {"session_ttl_seconds", session_ttl.count()}};
}

Runtime::Runtime(const Config& config)
    : Runtime(SchemaSet(load_schemas(config.schemas)), EmbeddingTable::load(config.embeddings),
              EncoderModel::load(config.model), config) {}

Runtime::Runtime(SchemaSet schemas, EmbeddingTable embeddings, EncoderModel model,
                 const Config& config)
    : config_(config),
      schemas_(std::move(schemas)),
      embeddings_(std::move(embeddings)),
      model_(std::move(model)) {
  if (model_.projection.dimension() != embeddings_.dimension()) {
    throw Error(ErrorCode::kConfiguration,
                "model dimension " + std::to_string(model_.projection.dimension()) +
                    " does not match embedding dimension " + std::to_string(embeddings_.dimension()));
  }
  wire();
}

void Runtime::wire() {
  auto endpoint = ParserEndpoint::parse(config_.endpoint);
  if (endpoint.kind == ParserEndpoint::Kind::kBuiltinOracle) {
    examples_ = load_examples(config_.examples, schemas_);
  }
  encoder_ = std::make_unique<LocalEncoder>(embeddings_, model_.projection);
  artifacts_.schemas = &schemas_;
  artifacts_.embeddings = &embeddings_;
  artifacts_.encoder = encoder_.get();
  artifacts_.threshold = model_.threshold;
  artifacts_.k = config_.k;
  if (!config_.templates.empty()) artifacts_.templates = TemplateTable::load(config_.templates);
  if (!config_.rules.empty()) artifacts_.rules = RuleTable::load(config_.rules);
  if (!config_.stop_words.empty()) artifacts_.filter.stop_words = StopWordList::load(config_.stop_words);
  artifacts_.filter.template_words = template_vocabulary(artifacts_.templates);
  gateway_ = std::make_unique<ParserGateway>(make_parser(endpoint, schemas_, examples_), schemas_);
}

SessionStore::SessionStore(const Runtime& runtime, std::chrono::seconds ttl, std::string log_path)
    : runtime_(runtime), ttl_(ttl), log_path_(std::move(log_path)) {
  if (!log_path_.empty()) replay();
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "no session '" + id + "'");
  return it->second;
}

nlohmann::json SessionStore::create(const std::string& question, const std::string& db_id) {
  if (question.empty()) throw Error(ErrorCode::kValidation, "question is empty");
  runtime_.schemas().at(db_id);
  expire();
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = "s" + std::to_string(next_id_++);
  }
  auto entry = std::make_shared<Entry>();
  entry->state = start_session(id, question, db_id, runtime_.gateway(), runtime_.artifacts());
  entry->touched = Clock::now();
  append({{"op", "create"}, {"id", id}, {"question", question}, {"db_id", db_id}});
  nlohmann::json view = to_json(entry->state);
  std::lock_guard lock(mu_);
  sessions_[id] = std::move(entry);
  return view;
}

nlohmann::json SessionStore::get(const std::string& id) {
  auto entry = find(id);
  std::lock_guard lock(entry->mu);
  entry->touched = Clock::now();
  return to_json(entry->state);
}

SessionState SessionStore::apply_answer(const SessionState& s, const nlohmann::json& request) const {
  if (!request.is_object() || !request.contains("option_index") ||
      !request["option_index"].is_number_integer()) {
    throw Error(ErrorCode::kValidation, "answer needs an integer option_index");
  }
  if (s.phase != SessionPhase::kAsking) {
    throw Error(ErrorCode::kState, "session " + s.id + " is " + std::string(session_phase_name(s.phase)));
  }
  const auto& current = s.pending.front();
  Answer a{current.token_index, request["option_index"].get<int>()};
  if (request.contains("question_ref")) {
    const auto& ref = request["question_ref"];
    if (ref.is_number_unsigned()) {
      a.token_index = ref.get<std::size_t>();
    } else if (ref.is_string()) {
      if (ref.get<std::string>() != current.token) {
        throw Error(ErrorCode::kValidation, "current question is about '" + current.token + "'");
      }
    } else {
      throw Error(ErrorCode::kValidation, "question_ref must be a token index or token text");
    }
  }
  return submit_answer(s, a, runtime_.gateway(), runtime_.artifacts());
}

nlohmann::json SessionStore::answer(const std::string& id, const nlohmann::json& request) {
  auto entry = find(id);
  std::lock_guard lock(entry->mu);
  entry->state = apply_answer(entry->state, request);
  entry->touched = Clock::now();
  append({{"op", "answer"}, {"id", id}, {"request", request}});
  return to_json(entry->state);
}

std::size_t SessionStore::size() {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::size_t SessionStore::expire(Clock::time_point now) {
  std::lock_guard lock(mu_);
  std::size_t dropped = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::unique_lock entry_lock(it->second->mu, std::try_to_lock);
    if (entry_lock.owns_lock() && now - it->second->touched > ttl_) {
      entry_lock.unlock();
      it = sessions_.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  return dropped;
}

void SessionStore::append(const nlohmann::json& event) {
  if (log_path_.empty()) return;
  std::lock_guard lock(log_mu_);
  std::ofstream out(log_path_, std::ios::app);
  if (!out) throw Error(ErrorCode::kIo, "cannot append to session log " + log_path_);
  out << event.dump() << '\n';
}

void SessionStore::replay() {
  std::ifstream in(log_path_);
  if (!in) return;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json ev;
    try {
      ev = nlohmann::json::parse(line);
      const auto op = ev.at("op").get<std::string>();
      const auto id = ev.at("id").get<std::string>();
      if (op == "create") {
        auto entry = std::make_shared<Entry>();
        entry->state = start_session(id, ev.at("question").get<std::string>(),
                                     ev.at("db_id").get<std::string>(), runtime_.gateway(),
                                     runtime_.artifacts());
        entry->touched = Clock::now();
        sessions_[id] = entry;
        if (id.size() > 1 && id[0] == 's') {
          next_id_ = std::max(next_id_, std::stoul(id.substr(1)) + 1);
        }
      } else if (op == "answer") {
        auto it = sessions_.find(id);
        if (it == sessions_.end()) continue;
        it->second->state = apply_answer(it->second->state, ev.at("request"));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, log_path_ + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const std::invalid_argument&) {
      throw Error(ErrorCode::kParse, log_path_ + ":" + std::to_string(lineno) + ": bad session id");
    }
  }
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kValidation:
    case ErrorCode::kUnresolvedName:
    case ErrorCode::kUnsupported:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kState:
      return 409;
    case ErrorCode::kGateway:
      return 502;
    default:
      return 500;
  }
}

nlohmann::json error_body(ErrorCode code, const std::string& message) {
  return {{"code", error_code_name(code)}, {"message", message}};
}

nlohmann::json schemas_json(const SchemaSet& schemas) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : schemas.all()) {
    nlohmann::json tables = nlohmann::json::array();
    for (const auto& t : s.tables()) {
      nlohmann::json cols = nlohmann::json::array();
      for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"type", value_type_name(c.type)}});
      tables.push_back({{"name", t.name}, {"columns", cols}});
    }
    out.push_back({{"db_id", s.db_id()}, {"tables", tables}});
  }
  return out;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    std::vector<double> col(m.col(c).data(), m.col(c).data() + m.rows());
    out.push_back(col);
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kValidation, "matrix must be a list of vectors");
  if (j.empty()) return {};
  const auto d = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(d, static_cast<Eigen::Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) {
    if (!j[c].is_array() || static_cast<Eigen::Index>(j[c].size()) != d) {
      throw Error(ErrorCode::kValidation, "matrix columns differ in length");
    }
    for (Eigen::Index r = 0; r < d; ++r) m(r, static_cast<Eigen::Index>(c)) = j[c][static_cast<std::size_t>(r)].get<double>();
  }
  return m;
}

namespace {

const char* kIndexPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>piia</title></head>
<body>
<h1>piia</h1>
<p>POST /sessions, GET /sessions/{id}, POST /sessions/{id}/answers, GET /schemas, POST /encode</p>
</body></html>
)";

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

nlohmann::json body_of(const httplib::Request& req) {
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("request body: ") + e.what());
  }
}

std::string string_field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
    throw Error(ErrorCode::kValidation, std::string("missing string field '") + key + "'");
  }
  return j[key].get<std::string>();
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_array()) {
    throw Error(ErrorCode::kValidation, std::string("missing list field '") + key + "'");
  }
  std::vector<std::string> out;
  for (const auto& v : j[key]) {
    if (!v.is_string()) throw Error(ErrorCode::kValidation, std::string("'") + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      reply(res, http_status(e.code()), error_body(e.code(), e.what()));
    } catch (const std::exception& e) {
      reply(res, 500, {{"code", "internal"}, {"message", e.what()}});
    }
  };
}

}  // namespace

void register_routes(httplib::Server& server, const Runtime& runtime, SessionStore& store,
                     const std::string& static_dir) {
  server.Post("/sessions", guarded([&](const httplib::Request& req, httplib::Response& res) {
                auto body = body_of(req);
                reply(res, 201, store.create(string_field(body, "question"), string_field(body, "db_id")));
              }));
  server.Get(R"(/sessions/([A-Za-z0-9_-]+))",
             guarded([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, store.get(req.matches[1]));
             }));
  server.Post(R"(/sessions/([A-Za-z0-9_-]+)/answers)",
              guarded([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, 200, store.answer(req.matches[1], body_of(req)));
              }));
  server.Get("/schemas", guarded([&](const httplib::Request&, httplib::Response& res) {
               reply(res, 200, schemas_json(runtime.schemas()));
             }));
  server.Post("/encode", guarded([&](const httplib::Request& req, httplib::Response& res) {
                auto body = body_of(req);
                auto x = string_list(body, "x");
                auto restated = string_list(body, "restated");
                if (x.empty() || restated.empty()) throw Error(ErrorCode::kValidation, "token lists must be non-empty");
                auto [h, u] = runtime.encoder().encode_pair(x, restated);
                reply(res, 200, {{"h", matrix_to_json(h)}, {"u", matrix_to_json(u)}});
              }));
  if (!static_dir.empty()) {
    if (!server.set_mount_point("/", static_dir)) {
      throw Error(ErrorCode::kConfiguration, "static directory " + static_dir + " does not exist");
    }
  } else {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kIndexPage, "text/html");
    });
  }
}

ExternalEncoder::ExternalEncoder(std::string url, std::chrono::milliseconds timeout) : timeout_(timeout) {
  auto scheme = url.find("://");
  auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  base_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/encode" : url.substr(slash);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> ExternalEncoder::encode_pair(
    const std::vector<std::string>& x, const std::vector<std::string>& restated) const {
  std::lock_guard lock(mu_);
  httplib::Client client(base_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  auto res = client.Post(path_, nlohmann::json{{"x", x}, {"restated", restated}}.dump(), "application/json");
  if (!res) throw Error(ErrorCode::kGateway, "encoder " + base_ + path_ + ": " + httplib::to_string(res.error()));
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kGateway, "encoder returned a non-JSON body");
  }
  if (res->status != 200 || !body.contains("h") || !body.contains("u")) {
    throw Error(ErrorCode::kGateway, "encoder returned status " + std::to_string(res->status) + ": " + body.dump());
  }
  auto h = matrix_from_json(body["h"]);
  auto u = matrix_from_json(body["u"]);
  if (h.cols() != static_cast<Eigen::Index>(x.size()) || u.cols() != static_cast<Eigen::Index>(restated.size()) ||
      h.rows() != u.rows()) {
    throw Error(ErrorCode::kGateway, "encoder returned matrices of the wrong shape");
  }
  return {h, u};
}

}  // namespace piia
