#include "piia/parser_gateway.hpp"

#include <csignal>
#include <cstring>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "httplib.h"
#include "json.hpp"
#include "piia/error.hpp"

namespace piia {

ParserEndpoint ParserEndpoint::parse(std::string_view text) {
  ParserEndpoint e;
  std::string s(text);
  if (s == "toy" || s.starts_with("toy:")) {
    e.kind = Kind::kBuiltinToy;
    if (s.size() > 4) {
      auto rest = s.substr(4);
      auto colon = rest.find(':');
      try {
        e.toy.strictness = std::stod(rest.substr(0, colon));
        if (colon != std::string::npos) e.toy.seed = std::stoull(rest.substr(colon + 1));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kConfiguration, "bad toy endpoint '" + s + "'");
      }
      if (e.toy.strictness < 0.0 || e.toy.strictness > 1.0) {
        throw Error(ErrorCode::kConfiguration, "toy strictness must be in [0, 1]");
      }
    }
    return e;
  }
  if (s == "oracle") {
    e.kind = Kind::kBuiltinOracle;
    return e;
  }
  if (s.starts_with("subprocess:")) {
    e.kind = Kind::kSubprocess;
    e.location = s.substr(11);
  } else if (s.starts_with("http://") || s.starts_with("https://")) {
    e.kind = Kind::kHttp;
    e.location = s;
  } else {
    throw Error(ErrorCode::kConfiguration, "unknown parser endpoint '" + s + "'");
  }
  if (e.location.empty()) throw Error(ErrorCode::kConfiguration, "endpoint '" + s + "' needs a location");
  return e;
}

std::string ParserEndpoint::describe() const {
  switch (kind) {
    case Kind::kBuiltinToy:
      return "toy:" + std::to_string(toy.strictness) + ":" + std::to_string(toy.seed);
    case Kind::kBuiltinOracle: return "oracle";
    case Kind::kSubprocess: return "subprocess:" + location;
    case Kind::kHttp: return location;
  }
  return "toy";
}

SubprocessParser::SubprocessParser(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  std::signal(SIGPIPE, SIG_IGN);
}

SubprocessParser::~SubprocessParser() { stop(); }

void SubprocessParser::start() {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
    throw Error(ErrorCode::kGateway, std::string("pipe failed: ") + std::strerror(errno));
  }
  pid_t pid = fork();
  if (pid < 0) throw Error(ErrorCode::kGateway, std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  buffer_.clear();
}

void SubprocessParser::stop() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
  }
  pid_ = -1;
}

std::string SubprocessParser::read_line() {
  auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      stop();
      throw Error(ErrorCode::kGateway, "adapter '" + command_ + "' timed out after " +
                                           std::to_string(timeout_.count()) + " ms");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    int rc = poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc == 0) continue;
    char chunk[4096];
    ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n > 0) {
      buffer_.append(chunk, static_cast<std::size_t>(n));
      continue;
    }
    int status = 0;
    std::string why = "closed its output";
    if (pid_ > 0 && waitpid(pid_, &status, 0) == pid_) {
      pid_ = -1;
      if (WIFEXITED(status)) why = "exited with status " + std::to_string(WEXITSTATUS(status));
      if (WIFSIGNALED(status)) why = "killed by signal " + std::to_string(WTERMSIG(status));
    }
    stop();
    throw Error(ErrorCode::kGateway, "adapter '" + command_ + "' " + why);
  }
}

std::string SubprocessParser::translate(const std::string& question, const std::string& db_id) {
  std::lock_guard lock(mu_);
  if (pid_ < 0) start();
  std::string request = nlohmann::json{{"question", question}, {"db_id", db_id}}.dump() + "\n";
  std::size_t off = 0;
  while (off < request.size()) {
    ssize_t n = write(to_child_, request.data() + off, request.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      stop();
      throw Error(ErrorCode::kGateway, "adapter '" + command_ + "' is not accepting input");
    }
    off += static_cast<std::size_t>(n);
  }
  std::string line = read_line();
  nlohmann::json response;
  try {
    response = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kGateway, "adapter '" + command_ + "' sent a malformed response: " + line);
  }
  if (response.contains("error")) {
    throw Error(ErrorCode::kGateway, "adapter error: " + response["error"].dump());
  }
  if (!response.contains("sql") || !response["sql"].is_string()) {
    throw Error(ErrorCode::kGateway, "adapter response has no sql field: " + line);
  }
  return response["sql"].get<std::string>();
}

HttpParser::HttpParser(std::string url, std::chrono::milliseconds timeout) : timeout_(timeout) {
  auto scheme = url.find("://");
  auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  base_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

std::string HttpParser::translate(const std::string& question, const std::string& db_id) {
  std::lock_guard lock(mu_);
  httplib::Client client(base_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  std::string body = nlohmann::json{{"question", question}, {"db_id", db_id}}.dump();
  auto res = client.Post(path_, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::kGateway, "http adapter " + base_ + path_ + ": " + httplib::to_string(res.error()));
  }
  nlohmann::json response;
  try {
    response = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kGateway, "http adapter returned status " + std::to_string(res->status) +
                                         " with a non-JSON body");
  }
  if (response.contains("error")) {
    throw Error(ErrorCode::kGateway, "http adapter error: " + response["error"].dump());
  }
  if (res->status != 200 || !response.contains("sql") || !response["sql"].is_string()) {
    throw Error(ErrorCode::kGateway, "http adapter returned status " + std::to_string(res->status) +
                                         " without sql");
  }
  return response["sql"].get<std::string>();
}

std::shared_ptr<TextToSql> make_parser(const ParserEndpoint& endpoint, const SchemaSet& schemas,
                                       const std::vector<Example>& oracle_examples) {
  switch (endpoint.kind) {
    case ParserEndpoint::Kind::kBuiltinToy: return std::make_shared<ToyParser>(schemas, endpoint.toy);
    case ParserEndpoint::Kind::kBuiltinOracle:
      return std::make_shared<OracleParser>(schemas, oracle_examples);
    case ParserEndpoint::Kind::kSubprocess:
      return std::make_shared<SubprocessParser>(endpoint.location, endpoint.timeout);
    case ParserEndpoint::Kind::kHttp: return std::make_shared<HttpParser>(endpoint.location, endpoint.timeout);
  }
  throw Error(ErrorCode::kConfiguration, "unknown endpoint kind");
}

SqlQuery ParserGateway::parse(const std::string& question, const std::string& db_id) const {
  const auto& schema = schemas_.at(db_id);
  std::string sql;
  try {
    sql = backend_->translate(question, db_id);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kGateway) throw;
    throw Error(ErrorCode::kGateway, std::string("parser failed: ") + e.what());
  }
  try {
    return parse_sql(sql, schema);
  } catch (const Error& e) {
    throw Error(ErrorCode::kGateway, "parser returned invalid SQL '" + sql + "': " + e.what());
  }
}

}  // namespace piia
