#include "piia/sql.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "piia/error.hpp"
#include "piia/text.hpp"

namespace piia {

std::string_view aggregation_name(Aggregation agg) {
  switch (agg) {
    case Aggregation::kNone: return "";
    case Aggregation::kMax: return "max";
    case Aggregation::kMin: return "min";
    case Aggregation::kCount: return "count";
    case Aggregation::kSum: return "sum";
    case Aggregation::kAvg: return "avg";
  }
  return "";
}

std::optional<Aggregation> parse_aggregation(std::string_view name) {
  std::string n = to_lower(name);
  if (n == "max") return Aggregation::kMax;
  if (n == "min") return Aggregation::kMin;
  if (n == "count") return Aggregation::kCount;
  if (n == "sum") return Aggregation::kSum;
  if (n == "avg") return Aggregation::kAvg;
  return std::nullopt;
}

std::string_view compare_op_sql(CompareOp op) {
  switch (op) {
    case CompareOp::kEq: return "=";
    case CompareOp::kNe: return "!=";
    case CompareOp::kGt: return ">";
    case CompareOp::kLt: return "<";
    case CompareOp::kGe: return ">=";
    case CompareOp::kLe: return "<=";
    case CompareOp::kLike: return "LIKE";
    case CompareOp::kNotLike: return "NOT LIKE";
    case CompareOp::kIn: return "IN";
    case CompareOp::kNotIn: return "NOT IN";
    case CompareOp::kBetween: return "BETWEEN";
  }
  return "=";
}

bool accepts_subquery(CompareOp op) {
  switch (op) {
    case CompareOp::kIn:
    case CompareOp::kNotIn:
    case CompareOp::kEq:
    case CompareOp::kGt:
    case CompareOp::kLt:
    case CompareOp::kGe:
    case CompareOp::kLe:
      return true;
    default:
      return false;
  }
}

std::string_view set_op_sql(SetOpKind kind) {
  switch (kind) {
    case SetOpKind::kIntersect: return "INTERSECT";
    case SetOpKind::kUnion: return "UNION";
    case SetOpKind::kExcept: return "EXCEPT";
  }
  return "UNION";
}

namespace {

// ---------------------------------------------------------------------------
// Lexer

struct SqlToken {
  enum class Kind { kIdent, kNumber, kString, kSymbol, kEnd };
  Kind kind = Kind::kEnd;
  std::string text;
  std::size_t pos = 0;
};

[[noreturn]] void syntax_error(std::size_t pos, const std::string& what) {
  throw Error(ErrorCode::kParse, "syntax error at position " + std::to_string(pos) + ": " + what);
}

std::vector<SqlToken> lex(std::string_view s) {
  std::vector<SqlToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i;
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({SqlToken::Kind::kIdent, std::string(s.substr(start, i - start)), start});
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = i;
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      out.push_back({SqlToken::Kind::kNumber, std::string(s.substr(start, i - start)), start});
    } else if (c == '\'' || c == '"') {
      std::size_t start = i;
      std::string value;
      ++i;
      bool closed = false;
      while (i < s.size()) {
        if (s[i] == c) {
          if (i + 1 < s.size() && s[i + 1] == c) {
            value.push_back(c);
            i += 2;
            continue;
          }
          closed = true;
          ++i;
          break;
        }
        value.push_back(s[i++]);
      }
      if (!closed) syntax_error(start, "unterminated string literal");
      out.push_back({SqlToken::Kind::kString, std::move(value), start});
    } else {
      static const char* two_char[] = {"!=", "<>", ">=", "<="};
      std::string sym(1, c);
      for (const char* t : two_char) {
        if (s.substr(i, 2) == t) sym = t;
      }
      if (std::string_view("(),.*=<>!;-").find(c) == std::string_view::npos) {
        syntax_error(i, std::string("unexpected character '") + c + "'");
      }
      out.push_back({SqlToken::Kind::kSymbol, sym, i});
      i += sym.size();
    }
  }
  out.push_back({SqlToken::Kind::kEnd, "", s.size()});
  return out;
}

bool is_reserved(std::string_view upper) {
  static const char* words[] = {"SELECT", "FROM",  "WHERE",  "GROUP",     "BY",     "HAVING",
                                "ORDER",  "LIMIT", "JOIN",   "INNER",     "ON",     "AS",
                                "AND",    "OR",    "NOT",    "IN",        "LIKE",   "BETWEEN",
                                "ASC",    "DESC",  "UNION",  "INTERSECT", "EXCEPT", "DISTINCT"};
  for (const char* w : words) {
    if (upper == w) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Parser

struct ScopeEntry {
  std::string alias;  // lowercased alias, or the table name
  std::string table;
};
using Scope = std::vector<ScopeEntry>;

class SqlParser {
 public:
  SqlParser(std::vector<SqlToken> tokens, const DatabaseSchema& schema)
      : tokens_(std::move(tokens)), schema_(schema) {}

  SqlQuery parse_statement() {
    std::vector<Scope> scopes;
    SqlQuery q = parse_query(scopes);
    if (is_symbol(";")) ++pos_;
    if (peek().kind != SqlToken::Kind::kEnd) unexpected("end of query");
    return q;
  }

 private:
  const SqlToken& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }

  bool is_keyword(std::string_view kw, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    if (t.kind != SqlToken::Kind::kIdent || t.text.size() != kw.size()) return false;
    for (std::size_t i = 0; i < kw.size(); ++i) {
      if (std::toupper(static_cast<unsigned char>(t.text[i])) != kw[i]) return false;
    }
    return true;
  }

  bool is_symbol(std::string_view sym, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return t.kind == SqlToken::Kind::kSymbol && t.text == sym;
  }

  [[noreturn]] void unexpected(const std::string& expected) const {
    const auto& t = peek();
    std::string near = t.kind == SqlToken::Kind::kEnd ? "end of input" : "'" + t.text + "'";
    syntax_error(t.pos, "expected " + expected + " near " + near);
  }

  void expect_keyword(std::string_view kw) {
    if (!is_keyword(kw)) unexpected(std::string(kw));
    ++pos_;
  }

  void expect_symbol(std::string_view sym) {
    if (!is_symbol(sym)) unexpected("'" + std::string(sym) + "'");
    ++pos_;
  }

  std::string expect_identifier(const std::string& what) {
    const auto& t = peek();
    if (t.kind != SqlToken::Kind::kIdent || is_reserved(upper(t.text))) unexpected(what);
    ++pos_;
    return to_lower(t.text);
  }

  static std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
  }

  SqlQuery parse_query(std::vector<Scope>& scopes) {
    SqlQuery q = parse_core(scopes);
    std::optional<SetOpKind> kind;
    if (is_keyword("INTERSECT")) kind = SetOpKind::kIntersect;
    if (is_keyword("UNION")) kind = SetOpKind::kUnion;
    if (is_keyword("EXCEPT")) kind = SetOpKind::kExcept;
    if (kind) {
      std::size_t at = peek().pos;
      ++pos_;
      auto right = std::make_shared<SqlQuery>(parse_query(scopes));
      if (right->select.size() != q.select.size()) {
        throw Error(ErrorCode::kValidation,
                    "set operation at position " + std::to_string(at) +
                        " combines queries with different select arity");
      }
      q.set_op = SetOperation{*kind, std::move(right)};
    }
    return q;
  }

  // Locates FROM belonging to the SELECT that starts at pos_.
  std::size_t find_from() const {
    int depth = 0;
    for (std::size_t i = pos_; i < tokens_.size(); ++i) {
      const auto& t = tokens_[i];
      if (t.kind == SqlToken::Kind::kSymbol && t.text == "(") ++depth;
      if (t.kind == SqlToken::Kind::kSymbol && t.text == ")") {
        if (depth == 0) break;
        --depth;
      }
      if (depth == 0 && t.kind == SqlToken::Kind::kIdent && upper(t.text) == "FROM") return i;
      if (t.kind == SqlToken::Kind::kEnd) break;
    }
    return tokens_.size();
  }

  SqlQuery parse_core(std::vector<Scope>& scopes) {
    SqlQuery q;
    expect_keyword("SELECT");
    if (is_keyword("DISTINCT")) {
      q.distinct = true;
      ++pos_;
    }
    const std::size_t select_start = pos_;
    const std::size_t from_at = find_from();
    if (from_at >= tokens_.size()) {
      // Walk the select list for a precise position before complaining.
      pos_ = select_start;
      syntax_error(peek().pos, "expected FROM clause");
    }
    pos_ = from_at + 1;
    scopes.emplace_back();
    parse_from(q, scopes);
    const std::size_t after_from = pos_;

    pos_ = select_start;
    q.select.push_back(parse_agg_column(scopes));
    while (is_symbol(",")) {
      ++pos_;
      q.select.push_back(parse_agg_column(scopes));
    }
    if (pos_ != from_at) unexpected("FROM");
    pos_ = after_from;

    if (is_keyword("WHERE")) {
      ++pos_;
      q.where = parse_conditions(scopes, &q.where_connector, "WHERE");
    }
    if (is_keyword("GROUP")) {
      ++pos_;
      expect_keyword("BY");
      q.group_by.push_back(parse_column(scopes));
      while (is_symbol(",")) {
        ++pos_;
        q.group_by.push_back(parse_column(scopes));
      }
    }
    if (is_keyword("HAVING")) {
      std::size_t at = peek().pos;
      ++pos_;
      Connector conn = Connector::kAnd;
      q.having = parse_conditions(scopes, &conn, "HAVING");
      if (conn == Connector::kOr && q.having.size() > 1) {
        throw Error(ErrorCode::kUnsupported, "HAVING with OR is not supported");
      }
      if (q.group_by.empty()) {
        throw Error(ErrorCode::kValidation,
                    "HAVING at position " + std::to_string(at) + " requires GROUP BY");
      }
    }
    if (is_keyword("ORDER")) {
      ++pos_;
      expect_keyword("BY");
      do {
        if (is_symbol(",")) ++pos_;
        OrderItem item{parse_agg_column(scopes), false};
        if (is_keyword("DESC")) {
          item.descending = true;
          ++pos_;
        } else if (is_keyword("ASC")) {
          ++pos_;
        }
        q.order_by.push_back(std::move(item));
      } while (is_symbol(","));
    }
    if (is_keyword("LIMIT")) {
      ++pos_;
      const auto& t = peek();
      if (t.kind != SqlToken::Kind::kNumber || t.text.find('.') != std::string::npos) {
        unexpected("nonnegative integer");
      }
      q.limit = std::stoll(t.text);
      ++pos_;
    }
    scopes.pop_back();
    return q;
  }

  void parse_from(SqlQuery& q, std::vector<Scope>& scopes) {
    auto add_table = [&]() {
      std::size_t at = peek().pos;
      std::string name = expect_identifier("table name");
      const TableDef* table = schema_.find_table(name);
      if (!table) {
        throw Error(ErrorCode::kUnresolvedName,
                    "unknown table '" + name + "' at position " + std::to_string(at));
      }
      std::string alias = table->name;
      if (is_keyword("AS")) {
        ++pos_;
        alias = expect_identifier("alias");
      } else if (peek().kind == SqlToken::Kind::kIdent && !is_reserved(upper(peek().text))) {
        alias = expect_identifier("alias");
      }
      scopes.back().push_back({alias, table->name});
      q.from.push_back({table->name, {}});
    };
    add_table();
    while (is_keyword("JOIN") || is_keyword("INNER")) {
      if (is_keyword("INNER")) ++pos_;
      expect_keyword("JOIN");
      add_table();
      if (is_keyword("ON")) {
        ++pos_;
        do {
          if (is_keyword("AND")) ++pos_;
          ColumnRef left = parse_column(scopes);
          expect_symbol("=");
          ColumnRef right = parse_column(scopes);
          q.from.back().on.push_back({std::move(left), std::move(right)});
        } while (is_keyword("AND"));
      }
    }
    if (is_symbol(",")) {
      syntax_error(peek().pos, "comma joins are not supported; use JOIN ... ON");
    }
  }

  std::vector<Predicate> parse_conditions(std::vector<Scope>& scopes, Connector* connector,
                                          const char* clause) {
    std::vector<Predicate> preds;
    preds.push_back(parse_predicate(scopes));
    std::optional<Connector> seen;
    while (is_keyword("AND") || is_keyword("OR")) {
      Connector c = is_keyword("AND") ? Connector::kAnd : Connector::kOr;
      if (seen && *seen != c) {
        throw Error(ErrorCode::kUnsupported,
                    std::string("mixed AND/OR in ") + clause + " at position " +
                        std::to_string(peek().pos) + " is not supported");
      }
      seen = c;
      ++pos_;
      preds.push_back(parse_predicate(scopes));
    }
    *connector = seen.value_or(Connector::kAnd);
    return preds;
  }

  Literal parse_literal() {
    const auto& t = peek();
    if (t.kind == SqlToken::Kind::kString) {
      ++pos_;
      return {Literal::Kind::kString, t.text};
    }
    if (is_symbol("-") && peek(1).kind == SqlToken::Kind::kNumber) {
      std::string digits = peek(1).text;
      pos_ += 2;
      return {Literal::Kind::kNumber, "-" + digits};
    }
    if (t.kind == SqlToken::Kind::kNumber) {
      ++pos_;
      return {Literal::Kind::kNumber, t.text};
    }
    unexpected("literal value");
  }

  QueryPtr parse_subquery(std::vector<Scope>& scopes) {
    expect_symbol("(");
    auto sub = std::make_shared<SqlQuery>(parse_query(scopes));
    expect_symbol(")");
    return sub;
  }

  Predicate parse_predicate(std::vector<Scope>& scopes) {
    Predicate p;
    p.left = parse_agg_column(scopes);
    bool negated = false;
    if (is_keyword("NOT")) {
      negated = true;
      ++pos_;
    }
    if (is_keyword("IN")) {
      ++pos_;
      p.op = negated ? CompareOp::kNotIn : CompareOp::kIn;
      if (!is_symbol("(") || !is_keyword("SELECT", 1)) unexpected("subquery after IN");
      p.subquery = parse_subquery(scopes);
      return p;
    }
    if (is_keyword("LIKE")) {
      ++pos_;
      p.op = negated ? CompareOp::kNotLike : CompareOp::kLike;
      p.values.push_back(parse_literal());
      return p;
    }
    if (negated) unexpected("IN or LIKE after NOT");
    if (is_keyword("BETWEEN")) {
      ++pos_;
      p.op = CompareOp::kBetween;
      p.values.push_back(parse_literal());
      expect_keyword("AND");
      p.values.push_back(parse_literal());
      return p;
    }
    const auto& t = peek();
    if (t.kind != SqlToken::Kind::kSymbol) unexpected("comparison operator");
    if (t.text == "=") p.op = CompareOp::kEq;
    else if (t.text == "!=" || t.text == "<>") p.op = CompareOp::kNe;
    else if (t.text == ">") p.op = CompareOp::kGt;
    else if (t.text == "<") p.op = CompareOp::kLt;
    else if (t.text == ">=") p.op = CompareOp::kGe;
    else if (t.text == "<=") p.op = CompareOp::kLe;
    else unexpected("comparison operator");
    ++pos_;
    if (is_symbol("(") && is_keyword("SELECT", 1)) {
      p.subquery = parse_subquery(scopes);
    } else {
      p.values.push_back(parse_literal());
    }
    return p;
  }

  AggColumn parse_agg_column(std::vector<Scope>& scopes) {
    AggColumn out;
    if (peek().kind == SqlToken::Kind::kIdent && is_symbol("(", 1)) {
      auto agg = parse_aggregation(peek().text);
      if (!agg) {
        syntax_error(peek().pos, "unsupported function '" + peek().text + "'");
      }
      out.agg = *agg;
      pos_ += 2;
      if (is_keyword("DISTINCT")) {
        out.distinct = true;
        ++pos_;
      }
      out.column = parse_column(scopes);
      expect_symbol(")");
      return out;
    }
    out.column = parse_column(scopes);
    return out;
  }

  ColumnRef parse_column(std::vector<Scope>& scopes) {
    if (is_symbol("*")) {
      ++pos_;
      return star(scopes);
    }
    std::size_t at = peek().pos;
    if (peek().kind != SqlToken::Kind::kIdent || is_reserved(upper(peek().text))) {
      unexpected("column");
    }
    std::string first = to_lower(peek().text);
    ++pos_;
    if (is_symbol(".")) {
      ++pos_;
      if (is_symbol("*")) {
        ++pos_;
        return {resolve_alias(first, scopes, at), "*"};
      }
      std::string column = expect_identifier("column");
      std::string table = resolve_alias(first, scopes, at);
      if (!schema_.find_table(table)->find_column(column)) {
        throw Error(ErrorCode::kUnresolvedName, "unknown column '" + first + "." + column +
                                                    "' at position " + std::to_string(at));
      }
      return {table, column};
    }
    for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
      for (const auto& entry : *it) {
        if (schema_.find_table(entry.table)->find_column(first)) return {entry.table, first};
      }
    }
    throw Error(ErrorCode::kUnresolvedName,
                "unknown column '" + first + "' at position " + std::to_string(at));
  }

  ColumnRef star(const std::vector<Scope>& scopes) const {
    if (scopes.empty() || scopes.back().empty()) return {"", "*"};
    return {scopes.back().front().table, "*"};
  }

  std::string resolve_alias(const std::string& name, const std::vector<Scope>& scopes,
                            std::size_t at) const {
    for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
      for (const auto& entry : *it) {
        if (entry.alias == name) return entry.table;
      }
      for (const auto& entry : *it) {
        if (entry.table == name) return entry.table;
      }
    }
    throw Error(ErrorCode::kUnresolvedName,
                "unknown table or alias '" + name + "' at position " + std::to_string(at));
  }

  std::vector<SqlToken> tokens_;
  const DatabaseSchema& schema_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Printer

class SqlPrinter {
 public:
  std::string print(const SqlQuery& q) {
    std::ostringstream out;
    write(out, q);
    return out.str();
  }

 private:
  static bool qualify(const SqlQuery& q, const ColumnRef& c) {
    if (c.is_star()) return false;
    if (q.from.size() > 1) return true;
    return std::none_of(q.from.begin(), q.from.end(),
                        [&](const FromTable& t) { return t.name == c.table; });
  }

  static std::string column(const SqlQuery& q, const ColumnRef& c) {
    if (c.is_star()) return "*";
    return qualify(q, c) ? c.table + "." + c.column : c.column;
  }

  static std::string agg_column(const SqlQuery& q, const AggColumn& a) {
    if (a.agg == Aggregation::kNone) return column(q, a.column);
    std::string name = std::string(aggregation_name(a.agg));
    for (char& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return name + "(" + (a.distinct ? "DISTINCT " : "") + column(q, a.column) + ")";
  }

  static std::string literal(const Literal& l) {
    if (l.kind == Literal::Kind::kNumber) return l.text;
    std::string out = "'";
    for (char ch : l.text) {
      if (ch == '\'') out += "''";
      else out.push_back(ch);
    }
    return out + "'";
  }

  void predicate(std::ostringstream& out, const SqlQuery& q, const Predicate& p) {
    out << agg_column(q, p.left) << ' ' << compare_op_sql(p.op) << ' ';
    if (p.subquery) {
      out << '(';
      write(out, *p.subquery);
      out << ')';
    } else if (p.op == CompareOp::kBetween) {
      out << literal(p.values.at(0)) << " AND " << literal(p.values.at(1));
    } else {
      out << literal(p.values.at(0));
    }
  }

  void write(std::ostringstream& out, const SqlQuery& q) {
    out << "SELECT ";
    if (q.distinct) out << "DISTINCT ";
    for (std::size_t i = 0; i < q.select.size(); ++i) {
      if (i) out << ", ";
      out << agg_column(q, q.select[i]);
    }
    out << " FROM ";
    for (std::size_t i = 0; i < q.from.size(); ++i) {
      if (i) out << " JOIN ";
      out << q.from[i].name;
      for (std::size_t j = 0; j < q.from[i].on.size(); ++j) {
        out << (j ? " AND " : " ON ") << column(q, q.from[i].on[j].left) << " = "
            << column(q, q.from[i].on[j].right);
      }
    }
    if (!q.where.empty()) {
      out << " WHERE ";
      for (std::size_t i = 0; i < q.where.size(); ++i) {
        if (i) out << (q.where_connector == Connector::kAnd ? " AND " : " OR ");
        predicate(out, q, q.where[i]);
      }
    }
    if (!q.group_by.empty()) {
      out << " GROUP BY ";
      for (std::size_t i = 0; i < q.group_by.size(); ++i) {
        if (i) out << ", ";
        out << column(q, q.group_by[i]);
      }
    }
    if (!q.having.empty()) {
      out << " HAVING ";
      for (std::size_t i = 0; i < q.having.size(); ++i) {
        if (i) out << " AND ";
        predicate(out, q, q.having[i]);
      }
    }
    if (!q.order_by.empty()) {
      out << " ORDER BY ";
      for (std::size_t i = 0; i < q.order_by.size(); ++i) {
        if (i) out << ", ";
        out << agg_column(q, q.order_by[i].key) << (q.order_by[i].descending ? " DESC" : " ASC");
      }
    }
    if (q.limit) out << " LIMIT " << *q.limit;
    if (q.set_op) {
      out << ' ' << set_op_sql(q.set_op->kind) << ' ';
      write(out, *q.set_op->right);
    }
  }
};

// ---------------------------------------------------------------------------
// Canonical form

std::string column_key(const ColumnRef& c) {
  if (c.is_star()) return "*";
  return c.table + "." + c.column;
}

std::string agg_key(const AggColumn& a) {
  return std::string(aggregation_name(a.agg)) + "(" + (a.distinct ? "distinct " : "") +
         column_key(a.column) + ")";
}

std::string predicate_key(const Predicate& p) {
  std::string key = agg_key(p.left) + " " + std::string(compare_op_sql(p.op)) + " ";
  if (p.subquery) return key + "(" + canonical_key(*p.subquery) + ")";
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    if (i) key += " and ";
    key += "[" + p.values[i].text + "]";
  }
  return key;
}

std::string sorted_join(std::vector<std::string> parts) {
  std::sort(parts.begin(), parts.end());
  return join(parts, " | ");
}

}  // namespace

SqlQuery parse_sql(std::string_view text, const DatabaseSchema& schema) {
  SqlParser parser(lex(text), schema);
  return parser.parse_statement();
}

std::string to_sql(const SqlQuery& query) { return SqlPrinter{}.print(query); }

std::string canonical_key(const SqlQuery& q) {
  std::vector<std::string> select;
  for (const auto& s : q.select) select.push_back(agg_key(s));
  std::vector<std::string> tables;
  std::vector<std::string> joins;
  for (const auto& t : q.from) {
    tables.push_back(t.name);
    for (const auto& j : t.on) {
      std::string a = column_key(j.left);
      std::string b = column_key(j.right);
      if (b < a) std::swap(a, b);
      joins.push_back(a + "=" + b);
    }
  }
  std::sort(tables.begin(), tables.end());
  tables.erase(std::unique(tables.begin(), tables.end()), tables.end());
  std::vector<std::string> where;
  for (const auto& p : q.where) where.push_back(predicate_key(p));
  std::vector<std::string> group;
  for (const auto& g : q.group_by) group.push_back(column_key(g));
  std::sort(group.begin(), group.end());
  group.erase(std::unique(group.begin(), group.end()), group.end());
  std::vector<std::string> having;
  for (const auto& p : q.having) having.push_back(predicate_key(p));
  std::vector<std::string> order;
  for (const auto& o : q.order_by) order.push_back(agg_key(o.key) + (o.descending ? " desc" : " asc"));

  std::string connector = q.where.size() > 1 && q.where_connector == Connector::kOr ? "or" : "and";
  std::string key = "select" + std::string(q.distinct ? " distinct" : "") + "{" +
                    sorted_join(select) + "} from{" + join(tables, ",") + "} join{" +
                    sorted_join(joins) + "} where-" + connector + "{" + sorted_join(where) +
                    "} group{" + join(group, ",") + "} having{" + sorted_join(having) +
                    "} order{" + join(order, ",") + "} limit{" +
                    (q.limit ? std::to_string(*q.limit) : std::string()) + "}";
  if (q.set_op) {
    key += " " + std::string(set_op_sql(q.set_op->kind)) + " {" +
           canonical_key(*q.set_op->right) + "}";
  }
  return key;
}

bool canonical_equal(const SqlQuery& a, const SqlQuery& b) {
  return canonical_key(a) == canonical_key(b);
}

namespace {

template <typename Fn>
void visit_queries(const SqlQuery& q, Fn&& fn) {
  fn(q);
  for (const auto& p : q.where) {
    if (p.subquery) visit_queries(*p.subquery, fn);
  }
  for (const auto& p : q.having) {
    if (p.subquery) visit_queries(*p.subquery, fn);
  }
  if (q.set_op) visit_queries(*q.set_op->right, fn);
}

}  // namespace

std::vector<Literal> collect_literals(const SqlQuery& query) {
  std::vector<Literal> out;
  visit_queries(query, [&](const SqlQuery& q) {
    for (const auto* preds : {&q.where, &q.having}) {
      for (const auto& p : *preds) out.insert(out.end(), p.values.begin(), p.values.end());
    }
  });
  return out;
}

std::vector<ColumnRef> collect_columns(const SqlQuery& query) {
  std::vector<ColumnRef> out;
  auto add = [&](const ColumnRef& c) {
    if (!c.is_star()) out.push_back(c);
  };
  visit_queries(query, [&](const SqlQuery& q) {
    for (const auto& s : q.select) add(s.column);
    for (const auto* preds : {&q.where, &q.having}) {
      for (const auto& p : *preds) add(p.left.column);
    }
    for (const auto& g : q.group_by) add(g);
    for (const auto& o : q.order_by) add(o.key.column);
  });
  return out;
}

std::vector<std::string> collect_tables(const SqlQuery& query) {
  std::vector<std::string> out;
  visit_queries(query, [&](const SqlQuery& q) {
    for (const auto& t : q.from) out.push_back(t.name);
  });
  return out;
}

std::vector<Aggregation> collect_aggregations(const SqlQuery& query) {
  std::vector<Aggregation> out;
  auto add = [&](const AggColumn& a) {
    if (a.agg != Aggregation::kNone) out.push_back(a.agg);
  };
  visit_queries(query, [&](const SqlQuery& q) {
    for (const auto& s : q.select) add(s);
    for (const auto* preds : {&q.where, &q.having}) {
      for (const auto& p : *preds) add(p.left);
    }
    for (const auto& o : q.order_by) add(o.key);
  });
  return out;
}

}  // namespace piia
