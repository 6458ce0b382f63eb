#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ivm/database.hpp"
#include "ivm/ops.hpp"
#include "ivm/query.hpp"

namespace ivm {

/// Relational expression over named leaves: joins, unions, and per-variable
/// aggregation. Delta derivation rewrites an expression symbolically; Empty
/// denotes the zero relation of a known schema.
struct ViewExpr {
  enum class Kind { Leaf, Join, Union, Sum, Empty };
  Kind kind = Kind::Empty;

  // Leaf
  std::string rel;
  Schema schema;         // leaf binding / Empty schema
  bool is_delta = false;
  bool is_view = false;  // references a registered view, not a base relation

  // Sum
  std::string var;

  std::vector<ViewExpr> children;  // Join: exactly 2, Union: >= 2, Sum: 1

  static ViewExpr leaf(std::string rel, Schema s, bool is_view = false);
  static ViewExpr delta_leaf(std::string rel, Schema s, bool is_view = false);
  static ViewExpr join(ViewExpr a, ViewExpr b);
  static ViewExpr unite(std::vector<ViewExpr> parts);
  static ViewExpr sum(std::string var, ViewExpr child);
  static ViewExpr empty(Schema s);

  /// Output variables of the expression.
  std::vector<std::string> out_vars() const;
  std::string str() const;
};

/// Canonical expression of a query: left-deep joins in atom order wrapped
/// in sums over the bound variables (first listed is outermost).
ViewExpr canonical_expr(const Query& q);

/// Delta rules: deltas distribute over union and aggregation; a join delta
/// keeps both one-sided terms and the cross term, so expressions where the
/// same leaf occurs several times (self-joins) stay correct. Leaves the
/// predicate does not select contribute the zero relation, and terms with a
/// zero factor are dropped.
ViewExpr derive_delta(const ViewExpr& e, const std::function<bool(const ViewExpr&)>& affected);
ViewExpr derive_delta(const ViewExpr& e, const std::string& rel);

/// Evaluation context: base relations, materialized views, delta bindings
/// (by leaf name), lifting functions.
struct EvalContext {
  const Database* db = nullptr;
  const std::map<std::string, Relation>* views = nullptr;
  const std::map<std::string, const Relation*>* deltas = nullptr;
  const LiftingSpec* lifts = nullptr;

  const Relation& resolve(const ViewExpr& leaf) const;
};

/// Reference evaluator: materializes every node bottom-up. Engines use the
/// flattened plans below instead; this one backs the oracle and tests.
Relation eval(const ViewExpr& e, const EvalContext& ctx);

/// Sum-of-products form: each term is a product of leaves under a sum over
/// bound variables. flatten() distributes joins over unions and collects
/// sums; it requires aggregations to sit above joins inside each factor,
/// which holds for every expression this system builds.
struct FlatTerm {
  std::vector<ViewExpr> leaves;  // Leaf nodes only
  std::vector<std::string> sum_vars;
};
std::vector<FlatTerm> flatten(const ViewExpr& e);

/// Inverse of flatten for one term: left-deep join of the leaves wrapped in
/// sums (first listed variable innermost, matching flatten's collection).
ViewExpr expr_of_term(const FlatTerm& term);
std::string term_str(const FlatTerm& term);

/// Evaluation plan for one flat term: leaf order (delta leaf first, then
/// outward by connectivity, ties by text order) and the bound variables to
/// fold away after each step.
struct TermPlan {
  std::vector<std::size_t> order;
  std::vector<std::vector<std::string>> fold_after;  // parallel to order
};
TermPlan plan_term(const FlatTerm& term, const std::vector<std::string>& head);

/// Evaluates one term: seeds from the first planned leaf, joins outward via
/// index probes on the stored relations (columns renamed positionally to
/// the leaf schema), folds bound variables eagerly, reorders to head.
Relation eval_term(const FlatTerm& term, const TermPlan& plan,
                   const std::vector<std::string>& head, const EvalContext& ctx);

}  // namespace ivm
