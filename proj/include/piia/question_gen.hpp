#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "piia/encoder.hpp"
#include "piia/schema.hpp"

namespace piia {

enum class OptionKind { kColumn, kTable, kAggregation, kValue, kNone };

std::string_view option_kind_name(OptionKind kind);

struct CandidateOption {
  std::string surface;  // display form, underscores shown as spaces
  OptionKind kind = OptionKind::kNone;
  double score = 0.0;
  std::string ref;    // schema identifier or aggregation name; empty for value / none
  std::string table;  // owning table of a column
};

struct MultiChoiceQuestion {
  std::size_t token_index = 0;
  std::string token;
  std::string prompt;
  std::vector<CandidateOption> options;
};

struct Answer {
  std::size_t token_index = 0;  // identifies the question
  int option = 0;
};

// Columns (distinct names, declaration order), then tables, then
// aggregations.
std::vector<CandidateOption> candidate_set(const DatabaseSchema& schema);

// Lemmatized words of a span; underscores split.
std::vector<std::string> span_lemmas(std::string_view span);

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Jaccard(w, z) + 1 / (1 + |avg(w) - avg(z)|).
double option_score(const CandidateOption& w, std::string_view z, const EmbeddingTable& table);

// K = total option count (ranked K - 2, then Value, None); K >= 3.
MultiChoiceQuestion generate_question(std::size_t token_index, std::string_view z,
                                      const DatabaseSchema& schema, const EmbeddingTable& table,
                                      int k = 5);

// Drops pending questions whose token occurs as a word of the chosen
// option's surface.
std::vector<MultiChoiceQuestion> dedup(const std::vector<MultiChoiceQuestion>& pending,
                                       const CandidateOption& chosen);

nlohmann::json to_json(const CandidateOption& option);
nlohmann::json to_json(const MultiChoiceQuestion& question);

}  // namespace piia
