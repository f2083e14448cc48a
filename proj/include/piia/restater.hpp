#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "piia/ir.hpp"

namespace piia {

enum class TokenOrigin { kTemplate, kColumn, kTable, kValue, kAggregation };

std::string_view token_origin_name(TokenOrigin origin);

struct RestatedToken {
  std::string surface;
  TokenOrigin origin = TokenOrigin::kTemplate;
};

struct RestatedUtterance {
  std::string text;
  std::vector<RestatedToken> tokens;

  std::vector<std::string> surfaces() const;
};

// Rule kind -> fill-in-the-blank fragments in priority order.  Fragments are
// whitespace-separated words; "{slot}" must be filled with at least one
// token for the fragment to apply, "{slot?}" may be empty.  Words of the
// "agg.*" rules are tagged as aggregation, every other literal word as
// template.
class TemplateTable {
 public:
  TemplateTable() = default;
  explicit TemplateTable(std::map<std::string, std::vector<std::string>> rules)
      : rules_(std::move(rules)) {}

  static const TemplateTable& builtin();
  // JSON object {"rule": "fragment" | ["fragment", ...]}; listed rules
  // replace the built-in ones, the rest keep their defaults.
  static TemplateTable load(const std::filesystem::path& path);

  const std::vector<std::string>& fragments(const std::string& rule) const;
  const std::map<std::string, std::vector<std::string>>& rules() const { return rules_; }

 private:
  std::map<std::string, std::vector<std::string>> rules_;
};

// Every template-origin word a restatement can emit.
std::set<std::string> template_vocabulary(const TemplateTable& templates);

RestatedUtterance restate(const IrTree& tree, const DatabaseSchema& schema,
                          const TemplateTable& templates = TemplateTable::builtin());

}  // namespace piia
