#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "piia/aligner.hpp"
#include "piia/encoder.hpp"
#include "piia/nl_modifier.hpp"
#include "piia/parser_gateway.hpp"
#include "piia/question_gen.hpp"
#include "piia/restater.hpp"
#include "piia/schema.hpp"
#include "piia/sql.hpp"

namespace piia {

// Read-only model state shared by sessions and the simulator.
struct ModelArtifacts {
  const SchemaSet* schemas = nullptr;
  const EmbeddingTable* embeddings = nullptr;
  const PairEncoder* encoder = nullptr;
  double threshold = 0.0;
  TemplateTable templates = TemplateTable::builtin();
  ContentFilter filter;
  RuleTable rules = RuleTable::builtin();
  int k = 5;
};

struct PipelineResult {
  SqlQuery y;
  RestatedUtterance restated;
  std::vector<Token> tokens;
  AlignmentResult alignment;
  std::vector<MultiChoiceQuestion> questions;
};

PipelineResult run_pipeline_once(const std::string& x, const std::string& db_id,
                                 const ParserGateway& gateway, const ModelArtifacts& model);

enum class SessionPhase { kCreated, kAsking, kFinalized };
std::string_view session_phase_name(SessionPhase phase);

struct SessionState {
  std::string id;
  std::string db_id;
  std::string x;
  SqlQuery y;
  std::vector<MultiChoiceQuestion> pending;
  std::size_t total_questions = 0;
  std::vector<Answer> answers;
  std::vector<TokenAnswer> chosen;
  std::optional<std::string> x_hat;
  std::optional<SqlQuery> y_hat;
  SessionPhase phase = SessionPhase::kCreated;
  std::vector<AppliedEdit> edits;
};

// Runs the pipeline; a question without uncertain tokens is finalized at
// once with y_hat = y.
SessionState start_session(std::string id, const std::string& x, const std::string& db_id,
                           const ParserGateway& gateway, const ModelArtifacts& model);

// Answers the front pending question.  Throws kState on a finalized session
// and kValidation for a wrong question or out-of-range option.
SessionState submit_answer(SessionState session, const Answer& answer, const ParserGateway& gateway,
                           const ModelArtifacts& model);

nlohmann::json to_json(const SessionState& session);

struct SimulationConfig {
  std::size_t cap = 100;  // 0 disables the cap
  bool filter_options = true;
  std::size_t full_enumeration_limit = 200000;
};

struct ExampleRecord {
  std::size_t index = 0;
  std::string question;
  std::string db_id;
  std::string sql_before;
  std::string sql_after;
  std::string modified_question;
  bool before_correct = false;
  bool after_correct = false;
  bool found = false;
  std::size_t questions = 0;
  std::size_t turns = 0;
  std::size_t none_answers = 0;
  std::size_t combos_ranked = 0;
  std::size_t combos_tried = 0;
  std::vector<int> combination;  // option index per question, -1 if skipped
  std::string error;
};

struct SimulationReport {
  std::vector<ExampleRecord> records;
};

// Options of one question kept by the gold-token filter, as indices.
std::vector<int> gold_filtered_options(const MultiChoiceQuestion& q, const SqlQuery& gold);

struct RankedCombination {
  std::vector<int> options;  // option index per question
  double score = 0.0;
};

// Top `limit` combinations (0 = all) by summed option score, ties by
// lexicographic option indices.
std::vector<RankedCombination> rank_combinations(const std::vector<MultiChoiceQuestion>& questions,
                                                 const std::vector<std::vector<int>>& allowed,
                                                 std::size_t limit, std::size_t full_enumeration_limit = 200000);

struct ReplayOutcome {
  std::string x_hat;
  std::optional<SqlQuery> y_hat;
  std::size_t turns = 0;
  std::size_t none_answers = 0;
  std::vector<int> effective;  // -1 where dedup skipped the question
};

// Answers questions in order with the combination's options, applying dedup
// between answers, then rewrites x and re-parses.
ReplayOutcome replay_combination(const std::string& x, const std::string& db_id,
                                 const std::vector<MultiChoiceQuestion>& questions,
                                 const std::vector<int>& combination, const ParserGateway& gateway,
                                 const ModelArtifacts& model);

ExampleRecord simulate_example(const Example& example, std::size_t index, const ParserGateway& gateway,
                               const ModelArtifacts& model, const SimulationConfig& config);

SimulationReport simulate_serial(const std::vector<Example>& examples, const ParserGateway& gateway,
                                 const ModelArtifacts& model, const SimulationConfig& config = {});
SimulationReport simulate_parallel(const std::vector<Example>& examples, const ParserGateway& gateway,
                                   const ModelArtifacts& model, const SimulationConfig& config = {});
inline SimulationReport simulate(const std::vector<Example>& examples, const ParserGateway& gateway,
                                 const ModelArtifacts& model, const SimulationConfig& config = {}) {
  return simulate_parallel(examples, gateway, model, config);
}

struct Metrics {
  std::size_t total = 0;
  double sql_acc_before = 0.0;  // fractions in [0, 1]
  double sql_acc_after = 0.0;
  double avg_turns = 0.0;              // over all examples
  double avg_turns_interactive = 0.0;  // over examples with >= 1 question
  std::map<std::size_t, std::size_t> turn_histogram;
  double none_ratio = 0.0;  // among answers of successful combinations
};

Metrics metrics(const SimulationReport& report);

nlohmann::json to_json(const ExampleRecord& record);
nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const SimulationReport& report);

}  // namespace piia
