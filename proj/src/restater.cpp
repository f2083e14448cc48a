#include "piia/restater.hpp"

#include <fstream>

#include "json.hpp"
#include "piia/error.hpp"
#include "piia/text.hpp"

namespace piia {

std::string_view token_origin_name(TokenOrigin origin) {
  switch (origin) {
    case TokenOrigin::kTemplate: return "template";
    case TokenOrigin::kColumn: return "column";
    case TokenOrigin::kTable: return "table";
    case TokenOrigin::kValue: return "value";
    case TokenOrigin::kAggregation: return "aggregation";
  }
  return "template";
}

std::vector<std::string> RestatedUtterance::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

const TemplateTable& TemplateTable::builtin() {
  static const TemplateTable table({
      {"statement.intersect", {"{left} intersected with {right}"}},
      {"statement.union", {"{left} union with {right}"}},
      {"statement.except", {"{left} excluding {right}"}},
      {"query", {"find {select} {filter?} {order?}"}},
      {"query.nested", {"{select} {filter?} {order?}"}},
      {"select.column", {"the {distinct?} {agg?} {column} of {table}", "the {distinct?} {agg?} {column}"}},
      {"select.star", {"the {agg?} rows of {table}", "the {agg?} rows"}},
      {"select.separator", {"and"}},
      {"column.distinct", {"distinct"}},
      {"column.star", {"rows"}},
      {"condition", {"whose {column} is {op?} {value}"}},
      {"condition.nested", {"whose {column} is {op?} the ones that are {inner}"}},
      {"condition.and", {"and"}},
      {"condition.or", {"or"}},
      {"value.between", {"{low} and {high}"}},
      {"op.eq", {""}},
      {"op.ne", {"not"}},
      {"op.gt", {"greater than"}},
      {"op.lt", {"less than"}},
      {"op.ge", {"at least"}},
      {"op.le", {"at most"}},
      {"op.like", {"like"}},
      {"op.not_like", {"not like"}},
      {"op.in", {"among"}},
      {"op.not_in", {"not among"}},
      {"op.between", {"between"}},
      {"order", {"sorted by {keys} {limit?}", "{limit}"}},
      {"order.key", {"{column} in {direction} order"}},
      {"order.separator", {"and"}},
      {"order.asc", {"ascending"}},
      {"order.desc", {"descending"}},
      {"order.limit", {"limited to first {value}"}},
      {"superlative.most", {"with the most {column}"}},
      {"superlative.least", {"with the least {column}"}},
      {"agg.max", {"maximum"}},
      {"agg.min", {"minimum"}},
      {"agg.sum", {"total"}},
      {"agg.avg", {"average"}},
      {"agg.count", {"number of"}},
  });
  return table;
}

TemplateTable TemplateTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open template file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::kConfiguration, path.string() + ": template file must be an object");
  }
  auto rules = builtin().rules();
  for (const auto& [rule, value] : doc.items()) {
    std::vector<std::string> fragments;
    if (value.is_string()) {
      fragments.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      for (const auto& f : value) fragments.push_back(f.get<std::string>());
    } else {
      throw Error(ErrorCode::kConfiguration, path.string() + ": rule '" + rule +
                                                 "' must be a string or list of strings");
    }
    rules[rule] = std::move(fragments);
  }
  return TemplateTable(std::move(rules));
}

const std::vector<std::string>& TemplateTable::fragments(const std::string& rule) const {
  auto it = rules_.find(rule);
  if (it == rules_.end() || it->second.empty()) {
    throw Error(ErrorCode::kConfiguration, "no template for rule '" + rule + "'");
  }
  return it->second;
}

std::set<std::string> template_vocabulary(const TemplateTable& templates) {
  std::set<std::string> vocab;
  for (const auto& [rule, fragments] : templates.rules()) {
    if (rule.starts_with("agg.")) continue;
    for (const auto& f : fragments) {
      for (const auto& word : split_whitespace(f)) {
        if (!word.starts_with('{')) vocab.insert(to_lower(word));
      }
    }
  }
  return vocab;
}

namespace {

using Tokens = std::vector<RestatedToken>;

class Renderer {
 public:
  explicit Renderer(const TemplateTable& templates) : templates_(templates) {}

  Tokens statement(const IrStatement& st, bool nested) {
    Tokens left = query(st.query, nested);
    if (!st.set_op || !st.right) return left;
    std::string rule;
    switch (*st.set_op) {
      case SetOpKind::kIntersect: rule = "statement.intersect"; break;
      case SetOpKind::kUnion: rule = "statement.union"; break;
      case SetOpKind::kExcept: rule = "statement.except"; break;
    }
    return fill(rule, {{"left", left}, {"right", statement(*st.right, nested)}});
  }

 private:
  using Slots = std::map<std::string, Tokens>;

  Tokens fill(const std::string& rule, const Slots& slots,
              TokenOrigin word_origin = TokenOrigin::kTemplate) {
    for (const auto& fragment : templates_.fragments(rule)) {
      auto words = split_whitespace(fragment);
      bool applicable = true;
      for (const auto& w : words) {
        if (!w.starts_with('{') || w.ends_with("?}")) continue;
        auto it = slots.find(w.substr(1, w.size() - 2));
        if (it == slots.end() || it->second.empty()) {
          applicable = false;
          break;
        }
      }
      if (!applicable) continue;
      Tokens out;
      for (const auto& w : words) {
        if (w.starts_with('{') && w.ends_with('}')) {
          std::string name = w.substr(1, w.size() - 2);
          if (name.ends_with('?')) name.pop_back();
          auto it = slots.find(name);
          if (it != slots.end()) out.insert(out.end(), it->second.begin(), it->second.end());
        } else {
          out.push_back({w, word_origin});
        }
      }
      return out;
    }
    throw Error(ErrorCode::kConfiguration, "no applicable template for rule '" + rule + "'");
  }

  static void append(Tokens& dst, const Tokens& src) { dst.insert(dst.end(), src.begin(), src.end()); }

  Tokens aggregation(Aggregation agg) {
    if (agg == Aggregation::kNone) return {};
    return fill("agg." + std::string(aggregation_name(agg)), {}, TokenOrigin::kAggregation);
  }

  // Aggregation words followed by the column (or the star word).
  Tokens column_phrase(const IrColumn& c) {
    Tokens out = aggregation(c.agg);
    if (c.distinct) append(out, fill("column.distinct", {}));
    if (c.column == "*") {
      append(out, fill("column.star", {}));
    } else {
      out.push_back({c.column, TokenOrigin::kColumn});
    }
    return out;
  }

  Tokens select_item(const IrColumn& c) {
    Tokens table;
    if (!c.table.empty()) table.push_back({c.table, TokenOrigin::kTable});
    if (c.column == "*") return fill("select.star", {{"agg", aggregation(c.agg)}, {"table", table}});
    Tokens distinct = c.distinct ? fill("column.distinct", {}) : Tokens{};
    return fill("select.column", {{"distinct", distinct},
                                  {"agg", aggregation(c.agg)},
                                  {"column", {{c.column, TokenOrigin::kColumn}}},
                                  {"table", table}});
  }

  static RestatedToken value_token(const Literal& l) {
    if (l.kind == Literal::Kind::kString) return {"'" + l.text + "'", TokenOrigin::kValue};
    return {l.text, TokenOrigin::kValue};
  }

  static std::string op_rule(CompareOp op) {
    switch (op) {
      case CompareOp::kEq: return "op.eq";
      case CompareOp::kNe: return "op.ne";
      case CompareOp::kGt: return "op.gt";
      case CompareOp::kLt: return "op.lt";
      case CompareOp::kGe: return "op.ge";
      case CompareOp::kLe: return "op.le";
      case CompareOp::kLike: return "op.like";
      case CompareOp::kNotLike: return "op.not_like";
      case CompareOp::kIn: return "op.in";
      case CompareOp::kNotIn: return "op.not_in";
      case CompareOp::kBetween: return "op.between";
    }
    return "op.eq";
  }

  Tokens condition(const IrCondition& c) {
    Tokens op = fill(op_rule(c.op), {});
    if (c.nested) {
      return fill("condition.nested",
                  {{"column", column_phrase(c.column)}, {"op", op}, {"inner", statement(*c.nested, true)}});
    }
    Tokens value;
    if (c.op == CompareOp::kBetween && c.values.size() == 2) {
      value = fill("value.between", {{"low", {value_token(c.values[0])}}, {"high", {value_token(c.values[1])}}});
    } else if (!c.values.empty()) {
      value.push_back(value_token(c.values[0]));
    }
    return fill("condition", {{"column", column_phrase(c.column)}, {"op", op}, {"value", value}});
  }

  Tokens filter(const IrFilter& f) {
    Tokens out;
    Tokens connector = fill(f.connector == Connector::kAnd ? "condition.and" : "condition.or", {});
    bool first = true;
    auto add = [&](const Tokens& part) {
      if (!first) append(out, connector);
      append(out, part);
      first = false;
    };
    for (const auto& g : f.groups) add(filter(g));
    for (const auto& c : f.conditions) add(condition(c));
    return out;
  }

  Tokens order(const IrQuery& q) {
    if (q.superlative) {
      return fill(q.superlative->most ? "superlative.most" : "superlative.least",
                  {{"column", column_phrase(q.superlative->column)}});
    }
    if (!q.order) return {};
    Tokens keys;
    for (std::size_t i = 0; i < q.order->keys.size(); ++i) {
      if (i) append(keys, fill("order.separator", {}));
      const auto& k = q.order->keys[i];
      append(keys, fill("order.key", {{"column", column_phrase(k.column)},
                                      {"direction", fill(k.descending ? "order.desc" : "order.asc", {})}}));
    }
    Tokens limit;
    if (q.order->limit) {
      limit = fill("order.limit", {{"value", {{std::to_string(*q.order->limit), TokenOrigin::kValue}}}});
    }
    return fill("order", {{"keys", keys}, {"limit", limit}});
  }

  Tokens query(const IrQuery& q, bool nested) {
    Tokens select;
    for (std::size_t i = 0; i < q.select.size(); ++i) {
      if (i) append(select, fill("select.separator", {}));
      append(select, select_item(q.select[i]));
    }
    Tokens filt = q.filter ? filter(*q.filter) : Tokens{};
    return fill(nested ? "query.nested" : "query",
                {{"select", select}, {"filter", filt}, {"order", order(q)}});
  }

  const TemplateTable& templates_;
};

}  // namespace

RestatedUtterance restate(const IrTree& tree, const DatabaseSchema& /*schema*/,
                          const TemplateTable& templates) {
  Renderer renderer(templates);
  RestatedUtterance out;
  out.tokens = renderer.statement(tree, false);
  out.text = join(out.surfaces(), " ");
  return out;
}

}  // namespace piia
