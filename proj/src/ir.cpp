#include "piia/ir.hpp"

#include <algorithm>

#include "piia/error.hpp"

namespace piia {
namespace {

IrColumn to_ir_column(const AggColumn& a) {
  return {a.agg, a.distinct, a.column.column, a.column.table};
}

AggColumn to_agg_column(const IrColumn& c) {
  return {c.agg, {c.table, c.column}, c.distinct};
}

IrStatement statement_to_ir(const SqlQuery& q, const DatabaseSchema& schema);

IrCondition condition_to_ir(const Predicate& p, const DatabaseSchema& schema) {
  IrCondition c{to_ir_column(p.left), p.op, p.values, nullptr};
  if (p.subquery) c.nested = std::make_shared<IrStatement>(statement_to_ir(*p.subquery, schema));
  return c;
}

bool same_column_set(std::vector<ColumnRef> a, std::vector<ColumnRef> b) {
  auto key = [](const ColumnRef& c) { return c.table + "." + c.column; };
  auto cmp = [&](const ColumnRef& x, const ColumnRef& y) { return key(x) < key(y); };
  std::sort(a.begin(), a.end(), cmp);
  std::sort(b.begin(), b.end(), cmp);
  a.erase(std::unique(a.begin(), a.end()), a.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return a == b;
}

IrQuery query_to_ir(const SqlQuery& q, const DatabaseSchema& schema) {
  IrQuery out;
  out.distinct = q.distinct;
  for (const auto& s : q.select) out.select.push_back(to_ir_column(s));
  for (const auto& t : q.from) out.scope.push_back({t.name, t.on});

  if (!q.group_by.empty() && !same_column_set(q.group_by, implied_group_by(q))) {
    throw Error(ErrorCode::kUnsupported,
                "GROUP BY clause is not the set of non-aggregated select columns");
  }
  if (q.group_by.empty() && !implied_group_by(q).empty()) {
    throw Error(ErrorCode::kUnsupported,
                "SELECT clause mixes aggregated and plain columns without GROUP BY");
  }

  if (!q.where.empty() || !q.having.empty()) {
    IrFilter filter;
    if (q.where_connector == Connector::kOr && q.where.size() > 1) {
      IrFilter ors{Connector::kOr, {}, {}};
      for (const auto& p : q.where) ors.conditions.push_back(condition_to_ir(p, schema));
      if (q.having.empty()) {
        filter = std::move(ors);
      } else {
        filter.groups.push_back(std::move(ors));
      }
    } else {
      for (const auto& p : q.where) {
        if (p.left.agg != Aggregation::kNone) {
          throw Error(ErrorCode::kUnsupported, "WHERE clause uses an aggregate");
        }
        filter.conditions.push_back(condition_to_ir(p, schema));
      }
    }
    for (const auto& p : q.having) {
      if (p.left.agg == Aggregation::kNone) {
        throw Error(ErrorCode::kUnsupported, "HAVING clause compares a plain column");
      }
      filter.conditions.push_back(condition_to_ir(p, schema));
    }
    out.filter = std::move(filter);
  }

  if (!q.order_by.empty()) {
    if (q.limit && *q.limit == 1 && q.order_by.size() == 1) {
      out.superlative = IrSuperlative{q.order_by[0].descending, to_ir_column(q.order_by[0].key)};
    } else {
      IrOrder order;
      for (const auto& o : q.order_by) order.keys.push_back({to_ir_column(o.key), o.descending});
      order.limit = q.limit;
      out.order = std::move(order);
    }
  } else if (q.limit) {
    out.order = IrOrder{{}, q.limit};
  }
  return out;
}

IrStatement statement_to_ir(const SqlQuery& q, const DatabaseSchema& schema) {
  IrStatement st;
  st.query = query_to_ir(q, schema);
  if (q.set_op) {
    st.set_op = q.set_op->kind;
    st.right = std::make_shared<IrStatement>(statement_to_ir(*q.set_op->right, schema));
  }
  return st;
}

SqlQuery statement_to_sql(const IrStatement& st, const DatabaseSchema& schema);

Predicate condition_to_sql(const IrCondition& c, const DatabaseSchema& schema) {
  Predicate p{to_agg_column(c.column), c.op, c.values, nullptr};
  if (c.nested) p.subquery = std::make_shared<SqlQuery>(statement_to_sql(*c.nested, schema));
  return p;
}

SqlQuery query_to_sql(const IrQuery& iq, const DatabaseSchema& schema) {
  SqlQuery q;
  q.distinct = iq.distinct;
  for (const auto& s : iq.select) q.select.push_back(to_agg_column(s));
  for (const auto& t : iq.scope) q.from.push_back({t.name, t.join_on});

  if (iq.filter) {
    const IrFilter& f = *iq.filter;
    if (f.connector == Connector::kOr) {
      q.where_connector = Connector::kOr;
      for (const auto& c : f.conditions) q.where.push_back(condition_to_sql(c, schema));
    } else {
      for (const auto& g : f.groups) {
        q.where_connector = g.connector;
        for (const auto& c : g.conditions) q.where.push_back(condition_to_sql(c, schema));
      }
      for (const auto& c : f.conditions) {
        auto& target = c.column.agg == Aggregation::kNone ? q.where : q.having;
        target.push_back(condition_to_sql(c, schema));
      }
    }
  }
  if (iq.superlative) {
    q.order_by.push_back({to_agg_column(iq.superlative->column), iq.superlative->most});
    q.limit = 1;
  } else if (iq.order) {
    for (const auto& k : iq.order->keys) q.order_by.push_back({to_agg_column(k.column), k.descending});
    q.limit = iq.order->limit;
  }
  q.group_by = implied_group_by(q);
  return q;
}

SqlQuery statement_to_sql(const IrStatement& st, const DatabaseSchema& schema) {
  SqlQuery q = query_to_sql(st.query, schema);
  if (st.set_op && st.right) {
    q.set_op = SetOperation{*st.set_op, std::make_shared<SqlQuery>(statement_to_sql(*st.right, schema))};
  }
  return q;
}

void column_leaves(const IrColumn& c, bool with_table, std::vector<IrLeaf>& out) {
  if (c.agg != Aggregation::kNone) out.push_back({LeafKind::kAggregation, std::string(aggregation_name(c.agg))});
  if (c.column != "*") out.push_back({LeafKind::kColumn, c.column});
  if (with_table && !c.table.empty()) out.push_back({LeafKind::kTable, c.table});
}

void statement_leaves(const IrStatement& st, std::vector<IrLeaf>& out);

void filter_leaves(const IrFilter& f, std::vector<IrLeaf>& out) {
  for (const auto& g : f.groups) filter_leaves(g, out);
  for (const auto& c : f.conditions) {
    column_leaves(c.column, false, out);
    for (const auto& v : c.values) out.push_back({LeafKind::kValue, v.text});
    if (c.nested) statement_leaves(*c.nested, out);
  }
}

void statement_leaves(const IrStatement& st, std::vector<IrLeaf>& out) {
  const IrQuery& q = st.query;
  for (const auto& s : q.select) column_leaves(s, true, out);
  if (q.filter) filter_leaves(*q.filter, out);
  if (q.superlative) column_leaves(q.superlative->column, false, out);
  if (q.order) {
    for (const auto& k : q.order->keys) column_leaves(k.column, false, out);
    if (q.order->limit) out.push_back({LeafKind::kValue, std::to_string(*q.order->limit)});
  }
  if (st.right) statement_leaves(*st.right, out);
}

}  // namespace

std::vector<ColumnRef> implied_group_by(const SqlQuery& q) {
  bool aggregated = false;
  for (const auto& s : q.select) aggregated |= s.agg != Aggregation::kNone;
  for (const auto& h : q.having) aggregated |= h.left.agg != Aggregation::kNone;
  for (const auto& o : q.order_by) aggregated |= o.key.agg != Aggregation::kNone;
  std::vector<ColumnRef> out;
  if (!aggregated && q.having.empty()) return out;
  for (const auto& s : q.select) {
    if (s.agg != Aggregation::kNone || s.column.is_star()) continue;
    if (std::find(out.begin(), out.end(), s.column) == out.end()) out.push_back(s.column);
  }
  return out;
}

IrTree to_ir(const SqlQuery& query, const DatabaseSchema& schema) {
  return statement_to_ir(query, schema);
}

SqlQuery ir_to_sql(const IrTree& tree, const DatabaseSchema& schema) {
  return statement_to_sql(tree, schema);
}

std::vector<IrLeaf> leaves(const IrTree& tree) {
  std::vector<IrLeaf> out;
  statement_leaves(tree, out);
  return out;
}

}  // namespace piia
