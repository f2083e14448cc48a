#include "piia/orchestrator.hpp"

#include <algorithm>
#include <queue>
#include <set>

#include "piia/error.hpp"
#include "piia/ir.hpp"

namespace piia {

PipelineResult run_pipeline_once(const std::string& x, const std::string& db_id,
                                 const ParserGateway& gateway, const ModelArtifacts& model) {
  if (!model.schemas || !model.embeddings || !model.encoder) {
    throw Error(ErrorCode::kConfiguration, "model artifacts are incomplete");
  }
  const auto& schema = model.schemas->at(db_id);
  PipelineResult r;
  r.y = gateway.parse(x, db_id);
  IrTree tree;
  try {
    tree = to_ir(r.y, schema);
  } catch (const Error& e) {
    throw Error(e.code(), "cannot restate predicted SQL '" + to_sql(r.y) + "': " + e.what());
  }
  r.restated = restate(tree, schema, model.templates);
  r.tokens = tokenize(x);
  r.alignment = locate_uncertain(r.tokens, r.restated, *model.encoder, schema, model.filter, model.threshold);
  for (auto row : r.alignment.uncertain) {
    r.questions.push_back(generate_question(row, r.tokens[row].text, schema, *model.embeddings, model.k));
  }
  return r;
}

std::string_view session_phase_name(SessionPhase phase) {
  switch (phase) {
    case SessionPhase::kCreated: return "created";
    case SessionPhase::kAsking: return "asking";
    case SessionPhase::kFinalized: return "finalized";
  }
  return "created";
}

SessionState start_session(std::string id, const std::string& x, const std::string& db_id,
                           const ParserGateway& gateway, const ModelArtifacts& model) {
  SessionState s;
  s.id = std::move(id);
  s.db_id = db_id;
  s.x = x;
  auto r = run_pipeline_once(x, db_id, gateway, model);
  s.y = std::move(r.y);
  s.pending = std::move(r.questions);
  s.total_questions = s.pending.size();
  if (s.pending.empty()) {
    s.x_hat = x;
    s.y_hat = s.y;
    s.phase = SessionPhase::kFinalized;
  } else {
    s.phase = SessionPhase::kAsking;
  }
  return s;
}

SessionState submit_answer(SessionState s, const Answer& answer, const ParserGateway& gateway,
                           const ModelArtifacts& model) {
  if (s.phase != SessionPhase::kAsking) {
    throw Error(ErrorCode::kState, "session " + s.id + " is " + std::string(session_phase_name(s.phase)));
  }
  const auto& current = s.pending.front();
  if (answer.token_index != current.token_index) {
    throw Error(ErrorCode::kValidation, "current question is for token " +
                                            std::to_string(current.token_index) + ", not " +
                                            std::to_string(answer.token_index));
  }
  if (answer.option < 0 || answer.option >= static_cast<int>(current.options.size())) {
    throw Error(ErrorCode::kValidation, "option index " + std::to_string(answer.option) +
                                            " out of range 0.." +
                                            std::to_string(current.options.size() - 1));
  }
  CandidateOption chosen = current.options[static_cast<std::size_t>(answer.option)];
  s.answers.push_back(answer);
  s.chosen.emplace_back(current.token_index, chosen);
  s.pending.erase(s.pending.begin());
  s.pending = dedup(s.pending, chosen);
  if (s.pending.empty()) {
    auto modified = apply_answers(pos_tag(s.x), s.chosen, model.rules);
    s.x_hat = modified.text;
    s.edits = modified.edits;
    s.y_hat = gateway.parse(*s.x_hat, s.db_id);
    s.phase = SessionPhase::kFinalized;
  }
  return s;
}

nlohmann::json to_json(const SessionState& s) {
  nlohmann::json pending = nlohmann::json::array();
  for (const auto& q : s.pending) pending.push_back(to_json(q));
  nlohmann::json answers = nlohmann::json::array();
  for (std::size_t i = 0; i < s.answers.size(); ++i) {
    answers.push_back({{"token_index", s.answers[i].token_index},
                       {"option_index", s.answers[i].option},
                       {"surface", s.chosen[i].second.surface},
                       {"kind", option_kind_name(s.chosen[i].second.kind)}});
  }
  nlohmann::json j = {
      {"id", s.id},
      {"db_id", s.db_id},
      {"phase", session_phase_name(s.phase)},
      {"question", s.x},
      {"sql_before", to_sql(s.y)},
      {"questions", pending},
      {"current", s.pending.empty() ? nlohmann::json(nullptr) : to_json(s.pending.front())},
      {"progress", {{"answered", s.answers.size()}, {"total", s.answers.size() + s.pending.size()}}},
      {"answers", answers},
  };
  if (s.phase == SessionPhase::kFinalized) {
    j["modified_question"] = *s.x_hat;
    j["sql_after"] = to_sql(*s.y_hat);
    nlohmann::json edits = nlohmann::json::array();
    for (const auto& e : s.edits) {
      edits.push_back({{"token_index", e.token_index}, {"rule", e.rule_id}, {"replacement", e.replacement},
                       {"begin", e.begin}, {"end", e.end}});
    }
    j["edits"] = edits;
  }
  return j;
}

std::vector<int> gold_filtered_options(const MultiChoiceQuestion& q, const SqlQuery& gold) {
  std::set<std::string> columns, tables;
  for (const auto& c : collect_columns(gold)) columns.insert(c.column);
  for (const auto& t : collect_tables(gold)) tables.insert(t);
  auto aggs = collect_aggregations(gold);
  auto literals = collect_literals(gold);
  const std::string token = normalize_word(q.token);
  const std::string lemma = lemmatize(token);
  std::vector<int> keep;
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    const auto& o = q.options[i];
    bool ok = false;
    switch (o.kind) {
      case OptionKind::kColumn: ok = columns.count(o.ref) > 0; break;
      case OptionKind::kTable: ok = tables.count(o.ref) > 0; break;
      case OptionKind::kAggregation: {
        auto a = parse_aggregation(o.ref);
        ok = a && std::find(aggs.begin(), aggs.end(), *a) != aggs.end();
        break;
      }
      case OptionKind::kValue:
        for (const auto& l : literals) {
          std::string text = to_lower(l.text);
          if (text == token) ok = true;
          for (const auto& w : split_whitespace(text)) {
            if (w == token || lemmatize(w) == lemma) ok = true;
          }
        }
        break;
      case OptionKind::kNone: ok = true; break;
    }
    if (ok) keep.push_back(static_cast<int>(i));
  }
  return keep;
}

namespace {

double combo_score(const std::vector<MultiChoiceQuestion>& qs, const std::vector<int>& options) {
  double s = 0.0;
  for (std::size_t i = 0; i < qs.size(); ++i) s += qs[i].options[static_cast<std::size_t>(options[i])].score;
  return s;
}

bool ranks_before(const RankedCombination& a, const RankedCombination& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.options < b.options;
}

std::size_t saturating_product(const std::vector<std::vector<int>>& allowed) {
  std::size_t p = 1;
  for (const auto& a : allowed) {
    if (a.empty()) return 0;
    if (p > SIZE_MAX / a.size()) return SIZE_MAX;
    p *= a.size();
  }
  return p;
}

}  // namespace

std::vector<RankedCombination> rank_combinations(const std::vector<MultiChoiceQuestion>& questions,
                                                 const std::vector<std::vector<int>>& allowed,
                                                 std::size_t limit, std::size_t full_enumeration_limit) {
  if (allowed.size() != questions.size()) {
    throw Error(ErrorCode::kValidation, "one option list per question is required");
  }
  const std::size_t total = saturating_product(allowed);
  if (total == 0) return {};
  if (limit == 0) limit = total;
  std::vector<RankedCombination> out;

  if (total <= full_enumeration_limit) {
    out.reserve(total);
    std::vector<std::size_t> idx(allowed.size(), 0);
    for (std::size_t n = 0; n < total; ++n) {
      RankedCombination c;
      for (std::size_t i = 0; i < allowed.size(); ++i) c.options.push_back(allowed[i][idx[i]]);
      c.score = combo_score(questions, c.options);
      out.push_back(std::move(c));
      for (std::size_t i = allowed.size(); i-- > 0;) {
        if (++idx[i] < allowed[i].size()) break;
        idx[i] = 0;
      }
    }
    std::sort(out.begin(), out.end(), ranks_before);
    if (out.size() > limit) out.resize(limit);
    return out;
  }

  // Best-first over per-question lists sorted by score; keep popping while
  // the frontier ties the cut score so tie-breaking stays exact.
  std::vector<std::vector<int>> sorted = allowed;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    std::stable_sort(sorted[i].begin(), sorted[i].end(), [&](int a, int b) {
      double sa = questions[i].options[static_cast<std::size_t>(a)].score;
      double sb = questions[i].options[static_cast<std::size_t>(b)].score;
      return sa != sb ? sa > sb : a < b;
    });
  }
  struct Node {
    RankedCombination combo;
    std::vector<std::size_t> rank;
  };
  auto worse = [](const Node& a, const Node& b) { return ranks_before(b.combo, a.combo); };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> heap(worse);
  std::set<std::vector<std::size_t>> seen;
  auto push = [&](std::vector<std::size_t> rank) {
    if (!seen.insert(rank).second) return;
    Node n;
    for (std::size_t i = 0; i < rank.size(); ++i) n.combo.options.push_back(sorted[i][rank[i]]);
    n.combo.score = combo_score(questions, n.combo.options);
    n.rank = std::move(rank);
    heap.push(std::move(n));
  };
  push(std::vector<std::size_t>(sorted.size(), 0));
  while (!heap.empty()) {
    if (out.size() >= limit && heap.top().combo.score < out[limit - 1].score) break;
    Node n = heap.top();
    heap.pop();
    out.push_back(n.combo);
    for (std::size_t i = 0; i < n.rank.size(); ++i) {
      if (n.rank[i] + 1 < sorted[i].size()) {
        auto next = n.rank;
        ++next[i];
        push(std::move(next));
      }
    }
  }
  std::sort(out.begin(), out.end(), ranks_before);
  if (out.size() > limit) out.resize(limit);
  return out;
}

ReplayOutcome replay_combination(const std::string& x, const std::string& db_id,
                                 const std::vector<MultiChoiceQuestion>& questions,
                                 const std::vector<int>& combination, const ParserGateway& gateway,
                                 const ModelArtifacts& model) {
  ReplayOutcome out;
  out.effective.assign(questions.size(), -1);
  std::map<std::size_t, std::size_t> position;
  for (std::size_t i = 0; i < questions.size(); ++i) position[questions[i].token_index] = i;
  std::vector<MultiChoiceQuestion> pending = questions;
  std::vector<TokenAnswer> answers;
  while (!pending.empty()) {
    auto pos = position.at(pending.front().token_index);
    int option = combination.at(pos);
    const auto& chosen = pending.front().options.at(static_cast<std::size_t>(option));
    out.effective[pos] = option;
    ++out.turns;
    if (chosen.kind == OptionKind::kNone) ++out.none_answers;
    answers.emplace_back(pending.front().token_index, chosen);
    CandidateOption copy = chosen;
    pending.erase(pending.begin());
    pending = dedup(pending, copy);
  }
  out.x_hat = apply_answers(pos_tag(x), answers, model.rules).text;
  try {
    out.y_hat = gateway.parse(out.x_hat, db_id);
  } catch (const Error&) {
    out.y_hat.reset();
  }
  return out;
}

ExampleRecord simulate_example(const Example& example, std::size_t index, const ParserGateway& gateway,
                               const ModelArtifacts& model, const SimulationConfig& config) {
  ExampleRecord rec;
  rec.index = index;
  rec.question = example.question;
  rec.db_id = example.db_id;
  PipelineResult pipe;
  SqlQuery gold;
  try {
    gold = parse_sql(example.gold_sql, model.schemas->at(example.db_id));
    pipe = run_pipeline_once(example.question, example.db_id, gateway, model);
  } catch (const Error& e) {
    rec.error = e.what();
    return rec;
  }
  rec.sql_before = to_sql(pipe.y);
  rec.before_correct = canonical_equal(pipe.y, gold);
  rec.questions = pipe.questions.size();
  rec.sql_after = rec.sql_before;
  rec.modified_question = example.question;
  rec.after_correct = rec.before_correct;
  if (pipe.questions.empty()) return rec;

  std::vector<std::vector<int>> allowed;
  for (const auto& q : pipe.questions) {
    if (config.filter_options) {
      allowed.push_back(gold_filtered_options(q, gold));
    } else {
      std::vector<int> all(q.options.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
      allowed.push_back(std::move(all));
    }
  }
  rec.combos_ranked = saturating_product(allowed);
  auto ranked = rank_combinations(pipe.questions, allowed, config.cap, config.full_enumeration_limit);

  std::map<std::string, std::optional<SqlQuery>> cache;
  for (std::size_t c = 0; c < ranked.size(); ++c) {
    ++rec.combos_tried;
    auto outcome = replay_combination(example.question, example.db_id, pipe.questions,
                                      ranked[c].options, gateway, model);
    if (c == 0) {
      rec.turns = outcome.turns;
      rec.none_answers = outcome.none_answers;
      rec.combination = outcome.effective;
    }
    cache.emplace(outcome.x_hat, outcome.y_hat);
    if (outcome.y_hat && canonical_equal(*outcome.y_hat, gold)) {
      rec.found = true;
      rec.turns = outcome.turns;
      rec.none_answers = outcome.none_answers;
      rec.combination = outcome.effective;
      rec.modified_question = outcome.x_hat;
      rec.sql_after = to_sql(*outcome.y_hat);
      break;
    }
  }
  rec.after_correct = rec.before_correct || rec.found;
  return rec;
}

SimulationReport simulate_serial(const std::vector<Example>& examples, const ParserGateway& gateway,
                                 const ModelArtifacts& model, const SimulationConfig& config) {
  SimulationReport report;
  report.records.resize(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    report.records[i] = simulate_example(examples[i], i, gateway, model, config);
  }
  return report;
}

SimulationReport simulate_parallel(const std::vector<Example>& examples, const ParserGateway& gateway,
                                   const ModelArtifacts& model, const SimulationConfig& config) {
  SimulationReport report;
  report.records.resize(examples.size());
  const long n = static_cast<long>(examples.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    auto k = static_cast<std::size_t>(i);
    report.records[k] = simulate_example(examples[k], k, gateway, model, config);
  }
  return report;
}

Metrics metrics(const SimulationReport& report) {
  Metrics m;
  m.total = report.records.size();
  if (m.total == 0) throw Error(ErrorCode::kValidation, "metrics need a nonempty report");
  std::size_t before = 0, after = 0, turns = 0, interactive = 0, interactive_turns = 0;
  std::size_t success_answers = 0, success_none = 0;
  for (const auto& r : report.records) {
    before += r.before_correct;
    after += r.after_correct;
    turns += r.turns;
    ++m.turn_histogram[r.turns];
    if (r.questions > 0) {
      ++interactive;
      interactive_turns += r.turns;
    }
    if (r.found) {
      success_answers += r.turns;
      success_none += r.none_answers;
    }
  }
  const double total = static_cast<double>(m.total);
  m.sql_acc_before = static_cast<double>(before) / total;
  m.sql_acc_after = static_cast<double>(after) / total;
  m.avg_turns = static_cast<double>(turns) / total;
  m.avg_turns_interactive = interactive ? static_cast<double>(interactive_turns) / static_cast<double>(interactive) : 0.0;
  m.none_ratio = success_answers ? static_cast<double>(success_none) / static_cast<double>(success_answers) : 0.0;
  return m;
}

nlohmann::json to_json(const ExampleRecord& r) {
  nlohmann::json j = {{"index", r.index},
                      {"question", r.question},
                      {"db_id", r.db_id},
                      {"sql_before", r.sql_before},
                      {"sql_after", r.sql_after},
                      {"modified_question", r.modified_question},
                      {"before_correct", r.before_correct},
                      {"after_correct", r.after_correct},
                      {"found", r.found},
                      {"questions", r.questions},
                      {"turns", r.turns},
                      {"none_answers", r.none_answers},
                      {"combos_ranked", r.combos_ranked},
                      {"combos_tried", r.combos_tried},
                      {"combination", r.combination}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

nlohmann::json to_json(const Metrics& m) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [t, n] : m.turn_histogram) hist[std::to_string(t)] = n;
  return {{"total", m.total},
          {"sql_acc_before", m.sql_acc_before},
          {"sql_acc_after", m.sql_acc_after},
          {"avg_turns", m.avg_turns},
          {"avg_turns_interactive", m.avg_turns_interactive},
          {"turn_histogram", hist},
          {"none_ratio", m.none_ratio}};
}

nlohmann::json to_json(const SimulationReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : report.records) records.push_back(to_json(r));
  nlohmann::json j = {{"records", records}};
  if (!report.records.empty()) j["metrics"] = to_json(metrics(report));
  return j;
}

}  // namespace piia
