#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ivm/database.hpp"
#include "ivm/query.hpp"
#include "ivm/update.hpp"
#include "ivm/view_expr.hpp"

namespace ivm {

/// From-scratch evaluation of a query. Every engine's correctness oracle.
Relation recompute(const Query& q, const Database& db);

/// One planned sum-of-products term; a program is their union.
struct PlannedTerm {
  FlatTerm term;
  TermPlan plan;
};
using Program = std::vector<PlannedTerm>;

Program compile_program(const ViewExpr& e, const std::vector<std::string>& head);
Relation run_program(const Program& prog, const std::vector<std::string>& head,
                     const EvalContext& ctx);

/// First-order incremental engine. Keeps the query output materialized and
/// folds a delta into it on every update, computed against the pre-update
/// state. Registered auxiliary views are materialized subqueries over base
/// relations; the query plan reads them in place of the atoms they cover,
/// and their own deltas propagate through the chain rule.
class EagerEngine {
 public:
  EagerEngine(Query q, Database db);

  /// Registers a materialized view. Its body must cover a subset of the
  /// query's atoms exactly (same relation, same variable names), and the
  /// variables it sums away must occur nowhere else in the query.
  void add_view(const Query& def);

  /// Applies one update and returns the output delta.
  Relation apply(const Update& u);

  const Relation& output() const { return output_; }
  const Database& database() const { return db_; }
  const Query& query() const { return q_; }
  const Relation& view(const std::string& name) const;
  std::uint64_t version() const { return version_; }

  /// Rewritten query term and the per-relation delta programs.
  std::string explain() const;

  /// Recomputes output and views from the base relations and compares.
  void check_consistency() const;

 private:
  struct ViewInfo {
    Query def;
    ViewExpr expr;
    std::set<std::string> base_rels;
    std::map<std::string, Program> delta;  // per base relation
  };

  void compile();
  const Program& program_for(const std::string& rel);

  Query q_;
  Database db_;
  std::vector<std::string> head_;
  FlatTerm term_;  // query body, rewritten over registered views
  std::vector<ViewInfo> views_;
  std::map<std::string, Relation> view_data_;
  std::map<std::string, Program> programs_;  // per base relation
  Relation output_;
  std::uint64_t version_ = 0;
};

/// Deferred engine: updates only touch the base relations; the output is
/// recomputed on demand and cached under a version stamp.
class LazyEngine {
 public:
  LazyEngine(Query q, Database db);

  void apply(const Update& u);
  const Relation& output();

  const Database& database() const { return db_; }
  const Query& query() const { return q_; }
  std::uint64_t version() const { return version_; }
  std::uint64_t refresh_count() const { return refresh_; }

 private:
  Query q_;
  Database db_;
  Relation cache_;
  bool stale_ = true;
  std::uint64_t version_ = 0;
  std::uint64_t refresh_ = 0;
};

}  // namespace ivm
