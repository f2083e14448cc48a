#include <algorithm>
#include <deque>
#include <set>

#include "piia/error.hpp"
#include "piia/ir.hpp"
#include "piia/parser_gateway.hpp"
#include "piia/text.hpp"

namespace piia {

namespace {

enum class MentionKind {
  kColumn, kTable, kStar, kValue, kOp, kAgg, kMost, kLeast, kOrderBy, kAsc, kDesc, kLimit,
  kDistinct, kOr
};

struct Mention {
  MentionKind kind;
  std::size_t first = 0;  // token range [first, last]
  std::size_t last = 0;
  std::string name;   // column or table
  std::string table;  // qualified column
  Literal value;
  CompareOp op = CompareOp::kEq;
  Aggregation agg = Aggregation::kNone;
};

Mention make_mention(MentionKind kind, std::size_t first, std::size_t last, std::string name = {},
                     std::string table = {}) {
  Mention m{kind, first, last, std::move(name), std::move(table), Literal{}, CompareOp::kEq, Aggregation::kNone};
  return m;
}

struct Phrase {
  std::vector<std::string> words;
  MentionKind kind;
  CompareOp op = CompareOp::kEq;
  Aggregation agg = Aggregation::kNone;
};

const std::vector<Phrase>& phrases() {
  static const std::vector<Phrase> table = [] {
    std::vector<Phrase> p;
    auto op = [&](std::initializer_list<const char*> forms, CompareOp o) {
      for (const char* f : forms) p.push_back({split_whitespace(f), MentionKind::kOp, o});
    };
    auto agg = [&](std::initializer_list<const char*> forms, Aggregation a) {
      for (const char* f : forms) p.push_back({split_whitespace(f), MentionKind::kAgg, CompareOp::kEq, a});
    };
    auto word = [&](std::initializer_list<const char*> forms, MentionKind k) {
      for (const char* f : forms) p.push_back({split_whitespace(f), k});
    };
    op({"greater than", "more than", "larger than", "higher than", "older than", "bigger than",
        "heavier than", "over", "above", "after"}, CompareOp::kGt);
    op({"less than", "fewer than", "smaller than", "lower than", "younger than", "lighter than",
        "under", "below", "before"}, CompareOp::kLt);
    op({"at least", "no less than"}, CompareOp::kGe);
    op({"at most", "no more than"}, CompareOp::kLe);
    op({"not like"}, CompareOp::kNotLike);
    op({"like"}, CompareOp::kLike);
    op({"not", "other than"}, CompareOp::kNe);
    op({"between"}, CompareOp::kBetween);
    agg({"number of", "how many", "count"}, Aggregation::kCount);
    agg({"maximum", "max", "highest", "largest", "biggest"}, Aggregation::kMax);
    agg({"minimum", "min", "lowest", "smallest"}, Aggregation::kMin);
    agg({"total", "sum"}, Aggregation::kSum);
    agg({"average", "avg", "mean"}, Aggregation::kAvg);
    word({"most"}, MentionKind::kMost);
    word({"least"}, MentionKind::kLeast);
    word({"sorted by", "ordered by", "order by", "sort by"}, MentionKind::kOrderBy);
    word({"ascending", "asc", "increasing"}, MentionKind::kAsc);
    word({"descending", "desc", "decreasing"}, MentionKind::kDesc);
    word({"limited to first", "limited to", "top"}, MentionKind::kLimit);
    word({"distinct", "different", "unique"}, MentionKind::kDistinct);
    word({"or"}, MentionKind::kOr);
    std::stable_sort(p.begin(), p.end(),
                     [](const Phrase& a, const Phrase& b) { return a.words.size() > b.words.size(); });
    return p;
  }();
  return table;
}

// Tokens allowed between a column and its value.
bool filler(std::string_view w) {
  static const std::set<std::string, std::less<>> extra = {"whose", "is", "are", "was", "equal",
                                                           "equals", "to", "of", "exactly"};
  return extra.count(w) || StopWordList::builtin().contains(w);
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double unit_hash(std::uint64_t seed, std::string_view question, std::size_t index) {
  std::uint64_t h = fnv1a(question, 1469598103934665603ULL ^ (seed * 0x9E3779B97F4A7C15ULL));
  h = fnv1a(std::to_string(index), h);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53);
}

bool is_column(const DatabaseSchema& s, std::string_view name) {
  for (const auto& c : s.distinct_columns()) {
    if (c.name == name) return true;
  }
  return false;
}

struct Scanner {
  const DatabaseSchema& schema;
  const std::vector<Token>& tokens;
  std::vector<std::string> words;
  const std::string& question;
  ToyParserConfig config;

  Scanner(const DatabaseSchema& s, const std::vector<Token>& t, const std::string& q, ToyParserConfig c)
      : schema(s), tokens(t), question(q), config(c) {
    for (const auto& tok : tokens) words.push_back(tok.quoted ? tok.text : to_lower(tok.text));
  }

  bool marked(std::size_t i, const std::string& form) const {
    if (form.find('_') != std::string::npos || form.find('.') != std::string::npos) return true;
    if (i == 0) return false;
    const auto& prev = words[i - 1];
    return prev == "whose" || prev == "with" || prev == "by";
  }

  // Exact schema name over n tokens starting at i (space or underscore form).
  bool exact_schema(std::size_t i, std::size_t n, Mention& m) const {
    if (i + n > words.size()) return false;
    std::vector<std::string> parts(words.begin() + static_cast<long>(i),
                                   words.begin() + static_cast<long>(i + n));
    for (std::size_t k = 0; k < n; ++k) {
      if (tokens[i + k].quoted) return false;
    }
    std::string name = join(parts, "_");
    if (n == 1) {
      auto dot = name.find('.');
      if (dot != std::string::npos) {
        std::string t = name.substr(0, dot), c = name.substr(dot + 1);
        const auto* td = schema.find_table(t);
        if (td && td->find_column(c)) {
          m = make_mention(MentionKind::kColumn, i, i, c, t);
          return true;
        }
        return false;
      }
    }
    if (is_column(schema, name)) {
      m = make_mention(MentionKind::kColumn, i, i + n - 1, name, "");
      return true;
    }
    if (schema.find_table(name)) {
      m = make_mention(MentionKind::kTable, i, i + n - 1, name, "");
      return true;
    }
    return false;
  }

  bool phrase_at(std::size_t i, Mention& m) const {
    for (const auto& p : phrases()) {
      if (i + p.words.size() > words.size()) continue;
      bool ok = true;
      for (std::size_t k = 0; k < p.words.size() && ok; ++k) {
        ok = !tokens[i + k].quoted && words[i + k] == p.words[k];
      }
      if (!ok) continue;
      m = make_mention(p.kind, i, i + p.words.size() - 1);
      m.op = p.op;
      m.agg = p.agg;
      return true;
    }
    return false;
  }

  bool lemma_schema(std::size_t i, Mention& m) const {
    if (tokens[i].quoted) return false;
    std::string lemma = lemmatize(words[i]);
    if (lemma == words[i]) return false;
    if (is_column(schema, lemma)) {
      m = make_mention(MentionKind::kColumn, i, i, lemma, "");
      return true;
    }
    if (schema.find_table(lemma)) {
      m = make_mention(MentionKind::kTable, i, i, lemma, "");
      return true;
    }
    return false;
  }

  std::vector<Mention> scan() const {
    std::vector<Mention> out;
    for (std::size_t i = 0; i < words.size();) {
      Mention m{};
      if (tokens[i].quoted) {
        std::string bare = tokens[i].text.substr(1, tokens[i].text.size() - 2);
        m = make_mention(MentionKind::kValue, i, i);
        m.value = {Literal::Kind::kString, bare};
        out.push_back(m);
        ++i;
        continue;
      }
      if (is_number(words[i])) {
        m = make_mention(MentionKind::kValue, i, i);
        m.value = {Literal::Kind::kNumber, words[i]};
        out.push_back(m);
        ++i;
        continue;
      }
      bool found = false;
      for (std::size_t n = 3; n >= 1 && !found; --n) {
        if (exact_schema(i, n, m)) found = true;
      }
      if (found && m.kind == MentionKind::kColumn && m.first == m.last &&
          !marked(i, words[i]) && unit_hash(config.seed, question, i) >= config.strictness) {
        ++i;  // recognized but dropped
        continue;
      }
      if (!found) found = phrase_at(i, m);
      if (!found && (words[i] == "rows" || words[i] == "row")) {
        m = make_mention(MentionKind::kStar, i, i);
        found = true;
      }
      if (!found) found = lemma_schema(i, m);
      if (found) {
        out.push_back(m);
        i = m.last + 1;
      } else {
        ++i;
      }
    }
    return out;
  }
};

struct ColumnUse {
  std::string column;
  std::string table;  // forced or resolved
  Aggregation agg = Aggregation::kNone;
  bool distinct = false;
  bool star = false;
};

struct Condition {
  ColumnUse column;
  CompareOp op;
  std::vector<Literal> values;
};

struct OrderUse {
  ColumnUse column;
  bool descending;
};

}  // namespace

SqlQuery ToyParser::parse_question(const std::string& question, const DatabaseSchema& schema) const {
  auto tokens = tokenize(question);
  Scanner scanner(schema, tokens, question, config_);
  auto mentions = scanner.scan();

  auto gap_ok = [&](std::size_t from, std::size_t to) {
    for (std::size_t t = from; t < to; ++t) {
      if (!filler(scanner.words[t])) return false;
    }
    return true;
  };

  std::vector<ColumnUse> select;
  std::vector<std::string> table_mentions;
  std::vector<Condition> conditions;
  std::vector<OrderUse> order;
  std::vector<Literal> orphans;
  std::optional<long long> limit;
  bool saw_or = false;

  Aggregation pending_agg = Aggregation::kNone;
  bool pending_distinct = false;
  int pending_super = 0;  // 1 most, -1 least
  bool in_order = false;
  bool pending_limit = false;

  for (std::size_t k = 0; k < mentions.size(); ++k) {
    const auto& m = mentions[k];
    switch (m.kind) {
      case MentionKind::kAgg: pending_agg = m.agg; break;
      case MentionKind::kDistinct: pending_distinct = true; break;
      case MentionKind::kMost: pending_super = 1; break;
      case MentionKind::kLeast: pending_super = -1; break;
      case MentionKind::kOrderBy: in_order = true; break;
      case MentionKind::kAsc:
        if (!order.empty()) order.back().descending = false;
        break;
      case MentionKind::kDesc:
        if (!order.empty()) order.back().descending = true;
        break;
      case MentionKind::kLimit: pending_limit = true; break;
      case MentionKind::kOr: saw_or = true; break;
      case MentionKind::kOp: break;
      case MentionKind::kTable:
        table_mentions.push_back(m.name);
        if (pending_agg == Aggregation::kCount) {
          select.push_back({"*", m.name, Aggregation::kCount, false, true});
          pending_agg = Aggregation::kNone;
        }
        break;
      case MentionKind::kValue:
        if (pending_limit && m.value.kind == Literal::Kind::kNumber) {
          limit = std::stoll(m.value.text);
          pending_limit = false;
        } else if (m.value.kind == Literal::Kind::kString) {
          orphans.push_back(m.value);
        }
        break;
      case MentionKind::kColumn:
      case MentionKind::kStar: {
        ColumnUse use;
        use.star = m.kind == MentionKind::kStar;
        use.column = use.star ? "*" : m.name;
        use.table = m.table;
        use.agg = pending_agg;
        use.distinct = pending_distinct;
        pending_agg = Aggregation::kNone;
        pending_distinct = false;
        if (pending_super) {
          order.push_back({use, pending_super > 0});
          limit = 1;
          pending_super = 0;
          break;
        }
        if (in_order) {
          order.push_back({use, false});
          break;
        }
        // Column followed (through operators and filler) by a value.
        std::size_t j = k + 1;
        CompareOp op = CompareOp::kEq;
        std::size_t prev_end = m.last + 1;
        bool gap = true;
        while (j < mentions.size() && mentions[j].kind == MentionKind::kOp) {
          gap = gap && gap_ok(prev_end, mentions[j].first);
          op = mentions[j].op;
          prev_end = mentions[j].last + 1;
          ++j;
        }
        if (j < mentions.size() && mentions[j].kind == MentionKind::kValue && gap &&
            gap_ok(prev_end, mentions[j].first)) {
          Condition c{use, op, {mentions[j].value}};
          if (op == CompareOp::kBetween && j + 1 < mentions.size() &&
              mentions[j + 1].kind == MentionKind::kValue) {
            c.values.push_back(mentions[j + 1].value);
            ++j;
          } else if (op == CompareOp::kBetween) {
            c.op = CompareOp::kEq;
          }
          conditions.push_back(std::move(c));
          k = j;
          break;
        }
        if (!use.star || use.agg != Aggregation::kNone) select.push_back(use);
        break;
      }
    }
  }

  // Resolve column tables: explicitly mentioned tables first.
  auto resolve = [&](ColumnUse& u) {
    if (u.star || !u.table.empty()) return;
    auto owners = schema.tables_with_column(u.column);
    for (const auto& t : table_mentions) {
      for (const auto* o : owners) {
        if (o->name == t) {
          u.table = t;
          return;
        }
      }
    }
    if (!owners.empty()) u.table = owners.front()->name;
  };
  for (auto& u : select) resolve(u);
  for (auto& c : conditions) resolve(c.column);
  for (auto& o : order) resolve(o.column);

  std::vector<std::string> scope;
  auto add_scope = [&](const std::string& t) {
    if (!t.empty() && std::find(scope.begin(), scope.end(), t) == scope.end()) scope.push_back(t);
  };
  for (const auto& u : select) add_scope(u.table);
  for (const auto& t : table_mentions) add_scope(t);
  for (const auto& c : conditions) add_scope(c.column.table);
  for (const auto& o : order) add_scope(o.column.table);
  if (scope.empty()) add_scope(schema.tables().front().name);

  // Join tree: BFS over tables sharing a column name.
  auto shared_column = [&](const TableDef& a, const TableDef& b) -> const ColumnDef* {
    for (const auto& c : a.columns) {
      if (b.find_column(c.name)) return &c;
    }
    return nullptr;
  };
  SqlQuery q;
  q.from.push_back({scope.front(), {}});
  std::set<std::string> in_from = {scope.front()};
  for (std::size_t s = 1; s < scope.size(); ++s) {
    if (in_from.count(scope[s])) continue;
    std::map<std::string, std::string> parent;
    std::deque<std::string> queue;
    for (const auto& f : q.from) {
      queue.push_back(f.name);
      parent[f.name] = "";
    }
    bool reached = false;
    while (!queue.empty() && !reached) {
      auto cur = queue.front();
      queue.pop_front();
      const auto* ct = schema.find_table(cur);
      for (const auto& t : schema.tables()) {
        if (parent.count(t.name) || !shared_column(*ct, t)) continue;
        parent[t.name] = cur;
        if (t.name == scope[s]) {
          reached = true;
          break;
        }
        queue.push_back(t.name);
      }
    }
    if (!reached) continue;
    std::vector<std::string> path;
    for (std::string t = scope[s]; !in_from.count(t); t = parent[t]) path.push_back(t);
    std::reverse(path.begin(), path.end());
    for (const auto& t : path) {
      const auto* pt = schema.find_table(parent[t]);
      const auto* tt = schema.find_table(t);
      const auto* c = shared_column(*pt, *tt);
      q.from.push_back({t, {{{pt->name, c->name}, {t, c->name}}}});
      in_from.insert(t);
    }
  }
  const std::string& first = q.from.front().name;
  auto col_ref = [&](const ColumnUse& u) -> std::optional<ColumnRef> {
    if (u.star) return ColumnRef{first, "*"};
    if (!in_from.count(u.table)) return std::nullopt;
    return ColumnRef{u.table, u.column};
  };

  for (const auto& u : select) {
    if (auto ref = col_ref(u)) q.select.push_back({u.agg, *ref, u.distinct && u.agg != Aggregation::kNone});
  }
  if (q.select.empty()) q.select.push_back({Aggregation::kNone, {first, "*"}, false});
  for (const auto& u : select) {
    if (u.distinct && u.agg == Aggregation::kNone) q.distinct = true;
  }

  std::set<std::string> used;
  for (const auto& c : conditions) {
    auto ref = col_ref(c.column);
    if (!ref) continue;
    Predicate p{{c.column.agg, *ref, c.column.distinct}, c.op, c.values, nullptr};
    used.insert(ref->table + "." + ref->column);
    if (c.column.agg != Aggregation::kNone) {
      q.having.push_back(std::move(p));
    } else {
      q.where.push_back(std::move(p));
    }
  }
  for (const auto& s : q.select) used.insert(s.column.table + "." + s.column.column);
  // Orphan strings: last unused text column of the last joined table.
  for (const auto& lit : orphans) {
    std::optional<ColumnRef> target;
    for (auto f = q.from.rbegin(); f != q.from.rend() && !target; ++f) {
      for (const auto& c : schema.find_table(f->name)->columns) {
        if (c.type == ValueType::kText && !used.count(f->name + "." + c.name)) target = ColumnRef{f->name, c.name};
      }
    }
    if (!target) continue;
    used.insert(target->table + "." + target->column);
    q.where.push_back({{Aggregation::kNone, *target, false}, CompareOp::kEq, {lit}, nullptr});
  }
  if (saw_or && q.where.size() >= 2) q.where_connector = Connector::kOr;
  for (const auto& o : order) {
    if (auto ref = col_ref(o.column)) q.order_by.push_back({{o.column.agg, *ref, false}, o.descending});
  }
  q.limit = limit;
  q.group_by = implied_group_by(q);
  if (q.group_by.empty()) q.having.clear();
  return q;
}

std::string ToyParser::translate(const std::string& question, const std::string& db_id) {
  return to_sql(parse_question(question, schemas_.at(db_id)));
}

OracleParser::OracleParser(const SchemaSet& schemas, const std::vector<Example>& examples)
    : fallback_(schemas) {
  for (const auto& e : examples) gold_[{e.db_id, e.question}] = e.gold_sql;
}

std::string OracleParser::translate(const std::string& question, const std::string& db_id) {
  auto it = gold_.find({db_id, question});
  if (it != gold_.end()) return it->second;
  return fallback_.translate(question, db_id);
}

}  // namespace piia
