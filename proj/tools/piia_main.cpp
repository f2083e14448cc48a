#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "piia/error.hpp"
#include "piia/ir.hpp"
#include "piia/service.hpp"
// after Eigen: resolv.h defines _res
#include "CLI11.hpp"
#include "httplib.h"

using namespace piia;

namespace {

struct Common {
  std::string config_path;
  std::string endpoint;
  std::string model;
  int k = 0;
  long cap = -1;
};

Config load_config(const Common& c) {
  Config cfg = c.config_path.empty() ? Config{} : Config::load(c.config_path);
  cfg.apply_env();
  if (!c.endpoint.empty()) cfg.endpoint = c.endpoint;
  if (!c.model.empty()) cfg.model = c.model;
  if (c.k > 0) cfg.k = c.k;
  if (c.cap >= 0) cfg.cap = static_cast<std::size_t>(c.cap);
  return cfg;
}

int cmd_train(const Config& cfg, const TrainConfig& tc, bool holdout, const std::string& out) {
  SchemaSet schemas(load_schemas(cfg.schemas));
  auto examples = load_examples(cfg.examples, schemas);
  auto table = EmbeddingTable::load(cfg.embeddings);
  TemplateTable templates = cfg.templates.empty() ? TemplateTable::builtin() : TemplateTable::load(cfg.templates);
  ContentFilter filter;
  if (!cfg.stop_words.empty()) filter.stop_words = StopWordList::load(cfg.stop_words);
  filter.template_words = template_vocabulary(templates);

  std::vector<Example> train_set, held;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (holdout && i % 5 == 0 ? held : train_set).push_back(examples[i]);
  }
  auto triples = make_triples(train_set, schemas, tc, templates);
  std::cerr << train_set.size() << " examples, " << triples.size() << " triples\n";
  TripleSet set(triples, table, filter);
  auto result = train(set, table.dimension(), tc, [](int epoch, double l) {
    std::cerr << "epoch " << epoch << " loss " << l << "\n";
  });
  result.model.save(out);
  std::cout << "threshold p = " << std::setprecision(6) << result.model.threshold << "\n";
  if (!held.empty()) {
    auto ht = make_triples(held, schemas, tc, templates);
    TripleSet hs(ht, table, filter);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const auto& e = hs.entry(i);
      auto s = score_triple(hs.utterance(e.x), hs.utterance(e.pos), hs.utterance(e.neg),
                            result.model.projection, tc.margin, tc.lambda);
      ok += s.s_pos > s.s_neg;
    }
    std::cout << "held-out s_pos > s_neg: " << ok << "/" << hs.size() << "\n";
  }
  std::cout << "model written to " << out << "\n";
  return 0;
}

int cmd_simulate(const Config& cfg, const std::string& out, bool serial, bool no_filter) {
  Runtime rt(cfg);
  auto examples = load_examples(cfg.examples, rt.schemas());
  SimulationConfig sc;
  sc.cap = cfg.cap;
  sc.filter_options = !no_filter;
  auto report = serial ? simulate_serial(examples, rt.gateway(), rt.artifacts(), sc)
                       : simulate_parallel(examples, rt.gateway(), rt.artifacts(), sc);
  auto m = metrics(report);
  nlohmann::json j = to_json(report);
  j["metrics"] = to_json(m);
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + out);
    f << j.dump(2) << "\n";
  }
  std::cout << std::fixed << std::setprecision(1);
  std::cout << "examples        " << m.total << "\n";
  std::cout << "SQLAcc before   " << 100 * m.sql_acc_before << "%\n";
  std::cout << "SQLAcc after    " << 100 * m.sql_acc_after << "%\n";
  std::cout << std::setprecision(2) << "Avg#T           " << m.avg_turns << " (interactive only "
            << m.avg_turns_interactive << ")\n";
  std::cout << "None ratio      " << m.none_ratio << "\n\n";
  std::cout << "turns  examples\n";
  for (const auto& [t, n] : m.turn_histogram) std::cout << std::setw(5) << t << "  " << n << "\n";
  return 0;
}

httplib::Server* g_server = nullptr;

int cmd_serve(const Config& cfg) {
  Runtime rt(cfg);
  SessionStore store(rt, cfg.session_ttl, cfg.session_log);
  httplib::Server server;
  register_routes(server, rt, store, cfg.static_dir);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cerr << "listening on http://" << cfg.host << ":" << cfg.port << " (parser " << cfg.endpoint << ")\n";
  if (!server.listen(cfg.host, cfg.port)) {
    throw Error(ErrorCode::kIo, "cannot listen on " + cfg.host + ":" + std::to_string(cfg.port));
  }
  return 0;
}

int cmd_session(const Config& cfg, const std::string& question, const std::string& db_id) {
  Runtime rt(cfg);
  auto s = start_session("cli", question, db_id, rt.gateway(), rt.artifacts());
  std::cout << "SQL: " << to_sql(s.y) << "\n";
  while (s.phase == SessionPhase::kAsking) {
    const auto& q = s.pending.front();
    std::cout << "\n[" << s.answers.size() + 1 << "/" << s.answers.size() + s.pending.size() << "] "
              << q.prompt << "\n";
    for (std::size_t i = 0; i < q.options.size(); ++i) std::cout << "  " << i << ") " << q.options[i].surface << "\n";
    std::cout << "> " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line)) return 1;
    try {
      s = submit_answer(s, Answer{q.token_index, std::stoi(line)}, rt.gateway(), rt.artifacts());
    } catch (const std::invalid_argument&) {
      std::cout << "enter an option number\n";
    } catch (const Error& e) {
      std::cout << e.what() << "\n";
    }
  }
  std::cout << "\nmodified question: " << *s.x_hat << "\nSQL: " << to_sql(*s.y_hat) << "\n";
  return 0;
}

int cmd_restate(const Config& cfg, const std::string& sql, const std::string& db_id) {
  SchemaSet schemas(load_schemas(cfg.schemas));
  const auto& schema = schemas.at(db_id);
  TemplateTable templates = cfg.templates.empty() ? TemplateTable::builtin() : TemplateTable::load(cfg.templates);
  auto r = restate(to_ir(parse_sql(sql, schema), schema), schema, templates);
  std::cout << r.text << "\n";
  for (const auto& t : r.tokens) std::cout << "  " << t.surface << "\t" << token_origin_name(t.origin) << "\n";
  return 0;
}

int cmd_align(const Config& cfg, const std::string& question, const std::string& db_id) {
  Runtime rt(cfg);
  auto r = run_pipeline_once(question, db_id, rt.gateway(), rt.artifacts());
  std::cout << "SQL: " << to_sql(r.y) << "\nrestated: " << r.restated.text << "\np = " << r.alignment.threshold
            << "\n\n";
  write_tsv(std::cout, r.alignment.matrix);
  std::cout << "\n";
  for (std::size_t i = 0; i < r.alignment.matching.size(); ++i) {
    int j = r.alignment.matching[i];
    std::cout << r.alignment.matrix.row_labels[i] << "\t"
              << (j < 0 ? "-" : r.alignment.matrix.col_labels[static_cast<std::size_t>(j)]) << "\t"
              << r.alignment.scores[i] << "\n";
  }
  std::cout << "\nuncertain:";
  for (auto u : r.alignment.uncertain) std::cout << " " << r.alignment.matrix.row_labels[u];
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"piia: interactive clarification for text-to-SQL parsers"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config_path, "JSON config file");
  app.add_option("--endpoint", common.endpoint, "parser endpoint (toy, toy:s:seed, oracle, subprocess:cmd, http://...)");
  app.add_option("--model", common.model, "trained model file");
  app.add_option("-k", common.k, "options per question");
  app.add_option("--cap", common.cap, "combinations simulated per example, 0 for all");

  auto* train_cmd = app.add_subcommand("train", "train the projection and threshold");
  TrainConfig tc;
  bool holdout = false;
  std::string train_out;
  train_cmd->add_option("--epochs", tc.epochs);
  train_cmd->add_option("--lr", tc.learning_rate);
  train_cmd->add_option("--margin", tc.margin);
  train_cmd->add_option("--lambda", tc.lambda);
  train_cmd->add_option("--random-negatives", tc.random_negatives);
  train_cmd->add_option("--perturbed-negatives", tc.perturbed_negatives);
  train_cmd->add_option("--depth", tc.depth);
  train_cmd->add_option("--seed", tc.seed);
  train_cmd->add_flag("--holdout", holdout, "hold out every fifth example and report its triples");
  train_cmd->add_option("-o,--out", train_out, "model output (default: config model path)");

  auto* sim_cmd = app.add_subcommand("simulate", "run the simulator over the example corpus");
  std::string sim_out;
  bool serial = false, no_filter = false;
  sim_cmd->add_option("-o,--out", sim_out, "report JSON");
  sim_cmd->add_flag("--serial", serial);
  sim_cmd->add_flag("--no-filter", no_filter, "keep options absent from the gold SQL");

  auto* serve_cmd = app.add_subcommand("serve", "HTTP service");
  std::string host;
  int port = 0;
  std::string static_dir;
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--static", static_dir);

  std::string question, db_id, sql;
  auto* session_cmd = app.add_subcommand("session", "answer questions in the terminal");
  session_cmd->add_option("question", question)->required();
  session_cmd->add_option("--db", db_id)->required();

  auto* restate_cmd = app.add_subcommand("restate", "print the restatement of a SQL query");
  restate_cmd->add_option("sql", sql)->required();
  restate_cmd->add_option("--db", db_id)->required();

  auto* align_cmd = app.add_subcommand("align", "dump the similarity matrix for a question");
  align_cmd->add_option("question", question)->required();
  align_cmd->add_option("--db", db_id)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg = load_config(common);
    if (*train_cmd) return cmd_train(cfg, tc, holdout, train_out.empty() ? cfg.model : train_out);
    if (*sim_cmd) return cmd_simulate(cfg, sim_out, serial, no_filter);
    if (*serve_cmd) {
      if (!host.empty()) cfg.host = host;
      if (port > 0) cfg.port = port;
      if (!static_dir.empty()) cfg.static_dir = static_dir;
      return cmd_serve(cfg);
    }
    if (*session_cmd) return cmd_session(cfg, question, db_id);
    if (*restate_cmd) return cmd_restate(cfg, sql, db_id);
    if (*align_cmd) return cmd_align(cfg, question, db_id);
  } catch (const Error& e) {
    std::cerr << "piia: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return 2;
  }
  return 0;
}
