#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "piia/question_gen.hpp"
#include "piia/text.hpp"

namespace piia {

enum class PosTag { kNoun, kVerb, kAdjective, kNumber, kOther };

std::string_view pos_tag_name(PosTag tag);
std::optional<PosTag> parse_pos_tag(std::string_view name);

struct PosTaggedUtterance {
  std::string text;
  std::vector<Token> tokens;
  std::vector<PosTag> tags;
};

// Lexicon + suffix tagger.  Non-empty entries of `overrides` replace the
// computed tag of the token at the same index.
PosTaggedUtterance pos_tag(std::string_view text,
                           const std::vector<std::optional<PosTag>>& overrides = {});

struct ModifierRule {
  std::string id;
  std::optional<PosTag> pos;  // empty matches any tag
  OptionKind kind = OptionKind::kColumn;
  std::string context = "any";  // any | value_follows | no_value_follows
  std::string replacement;      // slots: {token} {bare} {column} {table} {phrase}
};

class RuleTable {
 public:
  RuleTable() = default;
  explicit RuleTable(std::vector<ModifierRule> rules);

  static const RuleTable& builtin();
  // JSON array of {id, pos, kind, context, replacement}; replaces the
  // built-in table.
  static RuleTable load(const std::filesystem::path& path);

  const std::vector<ModifierRule>& rules() const { return rules_; }

 private:
  std::vector<ModifierRule> rules_;
};

struct AppliedEdit {
  std::size_t token_index = 0;
  std::string rule_id;
  std::string replacement;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct ModifiedUtterance {
  std::string text;
  std::vector<AppliedEdit> edits;
};

// Canonical wording of an aggregation ("maximum", ..., "number of").
std::string aggregation_phrase(std::string_view aggregation);

using TokenAnswer = std::pair<std::size_t, CandidateOption>;

ModifiedUtterance apply_answers(const PosTaggedUtterance& x, const std::vector<TokenAnswer>& answers,
                                const RuleTable& rules = RuleTable::builtin());

}  // namespace piia
