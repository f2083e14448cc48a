#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "piia/sql.hpp"

namespace piia {

// Intermediate language bridging SQL and natural language.  It has no JOIN
// or GROUP BY nodes: join conditions ride on the table leaves of a query's
// scope and grouping is re-derived from the select list.
//
//   Statement   -> intersect | union | except (Query, Statement) | Query
//   Query       -> Select [Filter] [Order | Superlative]
//   Select      -> (aggregation?, column, table)+
//   Filter      -> and/or tree of (column, op, value | Statement)
//   Order       -> (column, asc|desc)+ [limit]
//   Superlative -> (most|least, column), limit 1

struct IrColumn {
  Aggregation agg = Aggregation::kNone;
  bool distinct = false;
  std::string column;  // "*" for the star column
  std::string table;
};

struct IrTable {
  std::string name;
  std::vector<JoinCondition> join_on;
};

struct IrStatement;
using IrStatementPtr = std::shared_ptr<const IrStatement>;

struct IrCondition {
  IrColumn column;
  CompareOp op = CompareOp::kEq;
  std::vector<Literal> values;
  IrStatementPtr nested;
};

struct IrFilter {
  Connector connector = Connector::kAnd;
  std::vector<IrFilter> groups;  // nested boolean groups, rendered first
  std::vector<IrCondition> conditions;
};

struct IrOrderKey {
  IrColumn column;
  bool descending = false;
};

struct IrOrder {
  std::vector<IrOrderKey> keys;
  std::optional<long long> limit;
};

struct IrSuperlative {
  bool most = true;
  IrColumn column;
};

struct IrQuery {
  bool distinct = false;
  std::vector<IrColumn> select;
  std::vector<IrTable> scope;
  std::optional<IrFilter> filter;
  std::optional<IrOrder> order;
  std::optional<IrSuperlative> superlative;
};

struct IrStatement {
  std::optional<SetOpKind> set_op;
  IrQuery query;
  IrStatementPtr right;  // set when set_op is
};

using IrTree = IrStatement;

// Throws Error(kUnsupported) naming the clause for queries the grammar cannot
// represent (e.g. a GROUP BY that differs from the non-aggregated select
// columns, or OR-ed aggregate conditions).
IrTree to_ir(const SqlQuery& query, const DatabaseSchema& schema);
SqlQuery ir_to_sql(const IrTree& tree, const DatabaseSchema& schema);

// GROUP BY implied by a query: the non-aggregated select columns, when any
// aggregation appears in select / having / order by.
std::vector<ColumnRef> implied_group_by(const SqlQuery& query);

enum class LeafKind { kColumn, kTable, kValue, kAggregation };

struct IrLeaf {
  LeafKind kind;
  std::string text;
};

// Column / table / value / aggregation leaves in rendering order.  Scope
// tables are not leaves; they only carry join structure.
std::vector<IrLeaf> leaves(const IrTree& tree);

}  // namespace piia
