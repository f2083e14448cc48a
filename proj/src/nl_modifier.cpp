#include "piia/nl_modifier.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "piia/error.hpp"

namespace piia {

std::string_view pos_tag_name(PosTag tag) {
  switch (tag) {
    case PosTag::kNoun: return "noun";
    case PosTag::kVerb: return "verb";
    case PosTag::kAdjective: return "adjective";
    case PosTag::kNumber: return "number";
    case PosTag::kOther: return "other";
  }
  return "other";
}

std::optional<PosTag> parse_pos_tag(std::string_view name) {
  for (auto t : {PosTag::kNoun, PosTag::kVerb, PosTag::kAdjective, PosTag::kNumber, PosTag::kOther}) {
    if (pos_tag_name(t) == name) return t;
  }
  return std::nullopt;
}

namespace {

const std::set<std::string, std::less<>>& adjectives() {
  static const std::set<std::string, std::less<>> words = {
      "old", "young", "new", "big", "small", "large", "high", "low", "long", "short", "heavy",
      "light", "many", "much", "few", "more", "less", "most", "least", "older", "younger",
      "oldest", "youngest", "heavier", "lighter", "heaviest", "lightest", "larger", "smaller",
      "largest", "smallest", "higher", "lower", "highest", "lowest", "longest", "shortest",
      "different", "same", "male", "female", "popular", "expensive", "cheap", "cheaper",
      "cheapest", "tall", "taller", "tallest", "distinct", "unique", "total", "average",
      "maximum", "minimum", "full", "last", "first", "born"};
  return words;
}

const std::set<std::string, std::less<>>& verbs() {
  static const std::set<std::string, std::less<>> words = {
      "is", "are", "was", "were", "be", "been", "have", "has", "had", "do", "does", "did",
      "own", "owns", "live", "lives", "play", "plays", "sing", "sings", "work", "works",
      "find", "show", "list", "give", "return", "tell", "display", "get", "count", "sort",
      "weigh", "weighs", "cost", "costs", "earn", "earns", "teach", "teaches", "take", "takes",
      "belong", "belongs", "major", "study", "studies", "make", "makes", "hold", "holds"};
  return words;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() + 1 && s.substr(s.size() - suffix.size()) == suffix;
}

PosTag tag_word(const Token& t) {
  if (t.quoted) return PosTag::kNoun;
  std::string w = to_lower(t.text);
  if (is_number(w)) return PosTag::kNumber;
  if (w == "major") return PosTag::kNoun;
  if (adjectives().count(w)) return PosTag::kAdjective;
  if (verbs().count(w)) return PosTag::kVerb;
  if (StopWordList::builtin().contains(w)) return PosTag::kOther;
  if (ends_with(w, "ly")) return PosTag::kOther;
  if (ends_with(w, "ed") || ends_with(w, "ous") || ends_with(w, "ful") || ends_with(w, "ive") ||
      ends_with(w, "able") || ends_with(w, "ible") || ends_with(w, "est") || ends_with(w, "ic")) {
    return PosTag::kAdjective;
  }
  if (ends_with(w, "ing") || ends_with(w, "ize") || ends_with(w, "ise")) return PosTag::kVerb;
  return PosTag::kNoun;
}

}  // namespace

PosTaggedUtterance pos_tag(std::string_view text, const std::vector<std::optional<PosTag>>& overrides) {
  PosTaggedUtterance out;
  out.text = std::string(text);
  out.tokens = tokenize(text);
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    if (i < overrides.size() && overrides[i]) {
      out.tags.push_back(*overrides[i]);
    } else {
      out.tags.push_back(tag_word(out.tokens[i]));
    }
  }
  return out;
}

RuleTable::RuleTable(std::vector<ModifierRule> rules) : rules_(std::move(rules)) {
  for (const auto& r : rules_) {
    if (r.context != "any" && r.context != "value_follows" && r.context != "no_value_follows") {
      throw Error(ErrorCode::kConfiguration, "rule '" + r.id + "': unknown context '" + r.context + "'");
    }
    if (r.kind == OptionKind::kNone) {
      throw Error(ErrorCode::kConfiguration, "rule '" + r.id + "': None answers never edit");
    }
  }
}

const RuleTable& RuleTable::builtin() {
  static const RuleTable table({
      {"value_quote", std::nullopt, OptionKind::kValue, "any", "'{bare}'"},
      {"number_column", PosTag::kNumber, OptionKind::kColumn, "any", "whose {column} is {token}"},
      {"adjective_column_value", PosTag::kAdjective, OptionKind::kColumn, "value_follows", "whose {column} is"},
      {"verb_column_value", PosTag::kVerb, OptionKind::kColumn, "value_follows", "whose {column} is"},
      {"adjective_column", PosTag::kAdjective, OptionKind::kColumn, "any", "with {column}"},
      {"verb_column", PosTag::kVerb, OptionKind::kColumn, "any", "with {column}"},
      {"column", std::nullopt, OptionKind::kColumn, "any", "{column}"},
      {"table", std::nullopt, OptionKind::kTable, "any", "{table}"},
      {"aggregation", std::nullopt, OptionKind::kAggregation, "any", "{phrase}"},
  });
  return table;
}

RuleTable RuleTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open rule file " + path.string());
  std::vector<ModifierRule> rules;
  try {
    auto doc = nlohmann::json::parse(in);
    for (const auto& j : doc) {
      ModifierRule r;
      r.id = j.at("id").get<std::string>();
      std::string pos = j.value("pos", "any");
      if (pos != "any") {
        r.pos = parse_pos_tag(pos);
        if (!r.pos) throw Error(ErrorCode::kConfiguration, "rule '" + r.id + "': unknown pos '" + pos + "'");
      }
      std::string kind = j.at("kind").get<std::string>();
      bool found = false;
      for (auto k : {OptionKind::kColumn, OptionKind::kTable, OptionKind::kAggregation,
                     OptionKind::kValue, OptionKind::kNone}) {
        if (option_kind_name(k) == kind) {
          r.kind = k;
          found = true;
        }
      }
      if (!found) throw Error(ErrorCode::kConfiguration, "rule '" + r.id + "': unknown kind '" + kind + "'");
      r.context = j.value("context", "any");
      r.replacement = j.at("replacement").get<std::string>();
      rules.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return RuleTable(std::move(rules));
}

std::string aggregation_phrase(std::string_view aggregation) {
  static const std::map<std::string, std::string, std::less<>> phrases = {
      {"max", "maximum"}, {"min", "minimum"}, {"sum", "total"}, {"avg", "average"}, {"count", "number of"}};
  auto it = phrases.find(to_lower(aggregation));
  if (it == phrases.end()) {
    throw Error(ErrorCode::kValidation, "unknown aggregation '" + std::string(aggregation) + "'");
  }
  return it->second;
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string bare(const Token& t) {
  if (t.quoted && t.text.size() >= 2) return t.text.substr(1, t.text.size() - 2);
  return t.text;
}

}  // namespace

ModifiedUtterance apply_answers(const PosTaggedUtterance& x, const std::vector<TokenAnswer>& answers,
                                const RuleTable& rules) {
  std::map<std::size_t, const CandidateOption*> by_token;
  for (const auto& [index, option] : answers) {
    if (index >= x.tokens.size()) {
      throw Error(ErrorCode::kValidation, "answer targets token " + std::to_string(index) +
                                              " of a " + std::to_string(x.tokens.size()) + "-token question");
    }
    if (!by_token.emplace(index, &option).second) {
      throw Error(ErrorCode::kValidation, "overlapping edits on token " + std::to_string(index));
    }
  }
  auto value_like = [&](std::size_t i) {
    const auto& t = x.tokens[i];
    if (t.quoted || is_number(t.text)) return true;
    auto it = by_token.find(i);
    return it != by_token.end() && it->second->kind == OptionKind::kValue;
  };
  auto value_follows = [&](std::size_t index) {
    for (std::size_t i = index + 1; i < x.tokens.size(); ++i) {
      if (value_like(i)) return true;
      if (!StopWordList::builtin().contains(normalize_word(x.tokens[i].text))) return false;
    }
    return false;
  };

  ModifiedUtterance out;
  for (const auto& [index, option] : by_token) {
    if (option->kind == OptionKind::kNone) continue;
    const auto& token = x.tokens[index];
    const ModifierRule* rule = nullptr;
    for (const auto& r : rules.rules()) {
      if (r.kind != option->kind) continue;
      if (r.pos && *r.pos != x.tags[index]) continue;
      if (r.context == "value_follows" && !value_follows(index)) continue;
      if (r.context == "no_value_follows" && value_follows(index)) continue;
      rule = &r;
      break;
    }
    if (!rule) continue;
    std::string repl = rule->replacement;
    std::string ref = option->ref.empty() ? option->surface : option->ref;
    replace_all(repl, "{token}", token.text);
    replace_all(repl, "{bare}", bare(token));
    replace_all(repl, "{column}", ref);
    replace_all(repl, "{table}", ref);
    if (repl.find("{phrase}") != std::string::npos) replace_all(repl, "{phrase}", aggregation_phrase(ref));
    out.edits.push_back({index, rule->id, repl, token.begin, token.end});
  }
  out.text = x.text;
  for (auto it = out.edits.rbegin(); it != out.edits.rend(); ++it) {
    out.text.replace(it->begin, it->end - it->begin, it->replacement);
  }
  return out;
}

}  // namespace piia
