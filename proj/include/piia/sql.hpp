#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "piia/schema.hpp"

namespace piia {

enum class Aggregation { kNone, kMax, kMin, kCount, kSum, kAvg };

std::string_view aggregation_name(Aggregation agg);  // "max", "min", ...
std::optional<Aggregation> parse_aggregation(std::string_view name);

enum class CompareOp { kEq, kNe, kGt, kLt, kGe, kLe, kLike, kNotLike, kIn, kNotIn, kBetween };

std::string_view compare_op_sql(CompareOp op);
bool accepts_subquery(CompareOp op);

// A resolved column.  The star column has column == "*" and, when it came
// from a query, the first FROM table as its table.
struct ColumnRef {
  std::string table;
  std::string column;

  bool is_star() const { return column == "*"; }
  bool operator==(const ColumnRef&) const = default;
};

struct AggColumn {
  Aggregation agg = Aggregation::kNone;
  ColumnRef column;
  bool distinct = false;  // COUNT(DISTINCT x)

  bool operator==(const AggColumn&) const = default;
};

struct Literal {
  enum class Kind { kNumber, kString };
  Kind kind = Kind::kNumber;
  std::string text;  // string literals without quotes, verbatim

  bool operator==(const Literal&) const = default;
};

struct SqlQuery;
using QueryPtr = std::shared_ptr<const SqlQuery>;

struct Predicate {
  AggColumn left;
  CompareOp op = CompareOp::kEq;
  std::vector<Literal> values;  // one, or two for BETWEEN; empty with subquery
  QueryPtr subquery;
};

enum class Connector { kAnd, kOr };

struct JoinCondition {
  ColumnRef left;
  ColumnRef right;
};

struct FromTable {
  std::string name;
  std::vector<JoinCondition> on;  // conditions introduced by this JOIN
};

struct OrderItem {
  AggColumn key;
  bool descending = false;
};

enum class SetOpKind { kIntersect, kUnion, kExcept };
std::string_view set_op_sql(SetOpKind kind);

struct SetOperation {
  SetOpKind kind = SetOpKind::kUnion;
  QueryPtr right;
};

struct SqlQuery {
  bool distinct = false;  // SELECT DISTINCT
  std::vector<AggColumn> select;
  std::vector<FromTable> from;
  std::vector<Predicate> where;
  Connector where_connector = Connector::kAnd;
  std::vector<ColumnRef> group_by;
  std::vector<Predicate> having;
  std::vector<OrderItem> order_by;
  std::optional<long long> limit;
  std::optional<SetOperation> set_op;
};

// Parses the supported subset: SELECT [DISTINCT] ... FROM t [AS a] {JOIN u
// [AS b] ON x = y {AND ...}} [WHERE ...] [GROUP BY ...] [HAVING ...]
// [ORDER BY ...] [LIMIT n] [INTERSECT|UNION|EXCEPT query].  WHERE is either
// all-AND or all-OR.  Names are resolved against `schema`.
SqlQuery parse_sql(std::string_view text, const DatabaseSchema& schema);

// Canonical printer: uppercase keywords, single spaces, single-quoted strings.
std::string to_sql(const SqlQuery& query);

// Component-wise exact match (SQLAcc): select items as a multiset,
// join/where/having/group-by as sets, order-by as a list.
bool canonical_equal(const SqlQuery& a, const SqlQuery& b);
std::string canonical_key(const SqlQuery& query);

// All literals of a query, including nested queries and set-op operands.
std::vector<Literal> collect_literals(const SqlQuery& query);
// All column refs (non-star) and table names of a query, recursively.
std::vector<ColumnRef> collect_columns(const SqlQuery& query);
std::vector<std::string> collect_tables(const SqlQuery& query);
std::vector<Aggregation> collect_aggregations(const SqlQuery& query);

}  // namespace piia
