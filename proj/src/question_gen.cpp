#include "piia/question_gen.hpp"

#include <algorithm>
#include <set>

#include "piia/error.hpp"
#include "piia/text.hpp"

namespace piia {

std::string_view option_kind_name(OptionKind kind) {
  switch (kind) {
    case OptionKind::kColumn: return "column";
    case OptionKind::kTable: return "table";
    case OptionKind::kAggregation: return "aggregation";
    case OptionKind::kValue: return "value";
    case OptionKind::kNone: return "none";
  }
  return "none";
}

namespace {

std::string display_name(std::string_view name) {
  std::string out(name);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

}  // namespace

std::vector<CandidateOption> candidate_set(const DatabaseSchema& schema) {
  std::vector<CandidateOption> out;
  for (const auto& c : schema.distinct_columns()) {
    out.push_back({display_name(c.name), OptionKind::kColumn, 0.0, c.name, c.table});
  }
  for (const auto& t : schema.tables()) {
    out.push_back({display_name(t.name), OptionKind::kTable, 0.0, t.name, ""});
  }
  for (auto agg : kAggregationNames) {
    out.push_back({std::string(agg), OptionKind::kAggregation, 0.0, std::string(agg), ""});
  }
  return out;
}

std::vector<std::string> span_lemmas(std::string_view span) {
  std::vector<std::string> out;
  for (const auto& w : split_name_units(normalize_word(span))) out.push_back(lemmatize(w));
  return out;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::size_t common = 0;
  for (const auto& w : sa) common += sb.count(w);
  std::size_t uni = sa.size() + sb.size() - common;
  return uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
}

namespace {

Eigen::VectorXd average_embedding(const std::vector<std::string>& words, const EmbeddingTable& table) {
  if (words.empty()) return table.unknown();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dimension());
  for (const auto& w : words) sum += table.lookup(w);
  return sum / static_cast<double>(words.size());
}

}  // namespace

double option_score(const CandidateOption& w, std::string_view z, const EmbeddingTable& table) {
  auto wl = span_lemmas(w.surface);
  auto zl = span_lemmas(z);
  double dist = (average_embedding(wl, table) - average_embedding(zl, table)).norm();
  return jaccard(wl, zl) + 1.0 / (1.0 + dist);
}

MultiChoiceQuestion generate_question(std::size_t token_index, std::string_view z,
                                      const DatabaseSchema& schema, const EmbeddingTable& table,
                                      int k) {
  if (k < 3) throw Error(ErrorCode::kConfiguration, "option count K must be at least 3");
  MultiChoiceQuestion q;
  q.token_index = token_index;
  q.token = normalize_word(z);
  q.prompt = "What do you mean by '" + q.token + "'?";

  auto candidates = candidate_set(schema);
  for (auto& c : candidates) c.score = option_score(c, z, table);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const CandidateOption& a, const CandidateOption& b) { return a.score > b.score; });

  std::set<std::string> seen = {"value", "none"};
  for (const auto& c : candidates) {
    if (static_cast<int>(q.options.size()) >= k - 2) break;
    if (!seen.insert(to_lower(c.surface)).second) continue;
    q.options.push_back(c);
  }
  q.options.push_back({"Value", OptionKind::kValue, 0.0, "", ""});
  q.options.push_back({"None", OptionKind::kNone, 0.0, "", ""});
  return q;
}

std::vector<MultiChoiceQuestion> dedup(const std::vector<MultiChoiceQuestion>& pending,
                                       const CandidateOption& chosen) {
  if (chosen.kind == OptionKind::kNone || chosen.kind == OptionKind::kValue) return pending;
  std::set<std::string> words;
  for (const auto& w : split_whitespace(to_lower(chosen.surface))) {
    words.insert(w);
    words.insert(lemmatize(w));
  }
  std::vector<MultiChoiceQuestion> out;
  for (const auto& q : pending) {
    if (words.count(q.token) || words.count(lemmatize(q.token))) continue;
    out.push_back(q);
  }
  return out;
}

nlohmann::json to_json(const CandidateOption& option) {
  nlohmann::json j = {{"surface", option.surface},
                      {"kind", option_kind_name(option.kind)},
                      {"score", option.score}};
  if (!option.ref.empty()) j["ref"] = option.ref;
  if (!option.table.empty()) j["table"] = option.table;
  return j;
}

nlohmann::json to_json(const MultiChoiceQuestion& question) {
  nlohmann::json options = nlohmann::json::array();
  for (const auto& o : question.options) options.push_back(to_json(o));
  return {{"token", question.token},
          {"token_index", question.token_index},
          {"prompt", question.prompt},
          {"options", options}};
}

}  // namespace piia
