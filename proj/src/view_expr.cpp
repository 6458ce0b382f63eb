#include "ivm/view_expr.hpp"

#include <algorithm>

#include "ivm/error.hpp"

namespace ivm {

ViewExpr ViewExpr::leaf(std::string rel, Schema s, bool is_view) {
  ViewExpr e;
  e.kind = Kind::Leaf;
  e.rel = std::move(rel);
  e.schema = std::move(s);
  e.is_view = is_view;
  return e;
}

ViewExpr ViewExpr::delta_leaf(std::string rel, Schema s, bool is_view) {
  ViewExpr e = leaf(std::move(rel), std::move(s), is_view);
  e.is_delta = true;
  return e;
}

ViewExpr ViewExpr::join(ViewExpr a, ViewExpr b) {
  ViewExpr e;
  e.kind = Kind::Join;
  e.children.push_back(std::move(a));
  e.children.push_back(std::move(b));
  return e;
}

ViewExpr ViewExpr::unite(std::vector<ViewExpr> parts) {
  if (parts.empty()) throw Error("union of nothing");
  if (parts.size() == 1) return std::move(parts.front());
  ViewExpr e;
  e.kind = Kind::Union;
  e.children = std::move(parts);
  return e;
}

ViewExpr ViewExpr::sum(std::string var, ViewExpr child) {
  ViewExpr e;
  e.kind = Kind::Sum;
  e.var = std::move(var);
  e.children.push_back(std::move(child));
  return e;
}

ViewExpr ViewExpr::empty(Schema s) {
  ViewExpr e;
  e.kind = Kind::Empty;
  e.schema = std::move(s);
  return e;
}

std::vector<std::string> ViewExpr::out_vars() const {
  switch (kind) {
    case Kind::Leaf:
    case Kind::Empty:
      return schema.vars;
    case Kind::Union:
      return children.front().out_vars();
    case Kind::Sum: {
      std::vector<std::string> vars = children.front().out_vars();
      vars.erase(std::remove(vars.begin(), vars.end(), var), vars.end());
      return vars;
    }
    case Kind::Join: {
      std::vector<std::string> vars = children[0].out_vars();
      for (const auto& v : children[1].out_vars())
        if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
      return vars;
    }
  }
  return {};
}

std::string ViewExpr::str() const {
  switch (kind) {
    case Kind::Leaf:
      return (is_delta ? "d" : "") + rel + schema.str();
    case Kind::Empty:
      return "0" + schema.str();
    case Kind::Join:
      return "(" + children[0].str() + " * " + children[1].str() + ")";
    case Kind::Union: {
      std::string s = "(" + children[0].str();
      for (std::size_t i = 1; i < children.size(); ++i) s += " + " + children[i].str();
      return s + ")";
    }
    case Kind::Sum:
      return "sum_" + var + "(" + children[0].str() + ")";
  }
  return "?";
}

ViewExpr canonical_expr(const Query& q) {
  ViewExpr body = ViewExpr::leaf(q.atoms[0].rel, q.atoms[0].schema);
  for (std::size_t i = 1; i < q.atoms.size(); ++i)
    body = ViewExpr::join(std::move(body), ViewExpr::leaf(q.atoms[i].rel, q.atoms[i].schema));
  for (auto it = q.bound_vars.rbegin(); it != q.bound_vars.rend(); ++it)
    body = ViewExpr::sum(*it, std::move(body));
  return body;
}

ViewExpr derive_delta(const ViewExpr& e, const std::function<bool(const ViewExpr&)>& affected) {
  switch (e.kind) {
    case ViewExpr::Kind::Empty:
      return e;
    case ViewExpr::Kind::Leaf: {
      if (!affected(e)) return ViewExpr::empty(e.schema);
      ViewExpr d = e;
      d.is_delta = true;
      return d;
    }
    case ViewExpr::Kind::Union: {
      std::vector<ViewExpr> parts;
      for (const auto& c : e.children) {
        ViewExpr d = derive_delta(c, affected);
        if (d.kind != ViewExpr::Kind::Empty) parts.push_back(std::move(d));
      }
      if (parts.empty()) return ViewExpr::empty(Schema(e.out_vars()));
      return ViewExpr::unite(std::move(parts));
    }
    case ViewExpr::Kind::Sum: {
      ViewExpr d = derive_delta(e.children[0], affected);
      if (d.kind == ViewExpr::Kind::Empty) return ViewExpr::empty(Schema(e.out_vars()));
      return ViewExpr::sum(e.var, std::move(d));
    }
    case ViewExpr::Kind::Join: {
      const ViewExpr& a = e.children[0];
      const ViewExpr& b = e.children[1];
      ViewExpr da = derive_delta(a, affected);
      ViewExpr db = derive_delta(b, affected);
      bool ha = da.kind != ViewExpr::Kind::Empty;
      bool hb = db.kind != ViewExpr::Kind::Empty;
      std::vector<ViewExpr> parts;
      if (ha) parts.push_back(ViewExpr::join(da, b));
      if (hb) parts.push_back(ViewExpr::join(a, db));
      if (ha && hb) parts.push_back(ViewExpr::join(std::move(da), std::move(db)));
      if (parts.empty()) return ViewExpr::empty(Schema(e.out_vars()));
      return ViewExpr::unite(std::move(parts));
    }
  }
  throw Error("derive_delta: bad expression");
}

ViewExpr derive_delta(const ViewExpr& e, const std::string& rel) {
  return derive_delta(
      e, [&rel](const ViewExpr& leaf) { return !leaf.is_view && leaf.rel == rel; });
}

const Relation& EvalContext::resolve(const ViewExpr& leaf) const {
  if (leaf.is_delta) {
    if (!deltas) throw Error("no delta bindings in context");
    auto it = deltas->find(leaf.rel);
    if (it == deltas->end()) throw Error("no delta binding for " + leaf.rel);
    return *it->second;
  }
  if (leaf.is_view) {
    if (!views) throw Error("no views in context");
    auto it = views->find(leaf.rel);
    if (it == views->end()) throw Error("unknown view " + leaf.rel);
    return it->second;
  }
  if (!db) throw Error("no database in context");
  return db->get(leaf.rel);
}

namespace {

/// Copies a stored relation into query-variable space (positional rename).
Relation rename_to(const Relation& src, const Schema& vars) {
  if (src.schema().arity() != vars.arity())
    throw SchemaError("leaf binding arity mismatch: " + vars.str() + " vs stored " +
                      src.schema().str());
  Relation out(vars);
  for (auto c = src.entries(); c.valid(); c.advance()) out.apply(c.key(), c.payload());
  return out;
}

std::function<Int64Ring::value_type(Value)> lift_fn(const LiftingSpec* lifts,
                                                    const std::string& var) {
  if (!lifts || lifts->trivial(var)) return {};
  auto f = lifts->fns.at(var);
  return [f](Value v) { return f(v); };
}

}  // namespace

Relation eval(const ViewExpr& e, const EvalContext& ctx) {
  switch (e.kind) {
    case ViewExpr::Kind::Empty:
      return Relation(e.schema);
    case ViewExpr::Kind::Leaf:
      return rename_to(ctx.resolve(e), e.schema);
    case ViewExpr::Kind::Join:
      return join(eval(e.children[0], ctx), eval(e.children[1], ctx));
    case ViewExpr::Kind::Union: {
      Relation acc = eval(e.children[0], ctx);
      for (std::size_t i = 1; i < e.children.size(); ++i)
        acc = union_rel(acc, eval(e.children[i], ctx));
      return acc;
    }
    case ViewExpr::Kind::Sum:
      return marginalize(eval(e.children[0], ctx), e.var, lift_fn(ctx.lifts, e.var));
  }
  throw Error("eval: bad expression");
}

std::vector<FlatTerm> flatten(const ViewExpr& e) {
  switch (e.kind) {
    case ViewExpr::Kind::Empty:
      return {};
    case ViewExpr::Kind::Leaf:
      return {FlatTerm{{e}, {}}};
    case ViewExpr::Kind::Union: {
      std::vector<FlatTerm> out;
      for (const auto& c : e.children) {
        auto ts = flatten(c);
        out.insert(out.end(), ts.begin(), ts.end());
      }
      return out;
    }
    case ViewExpr::Kind::Sum: {
      std::vector<FlatTerm> out = flatten(e.children[0]);
      for (auto& t : out) t.sum_vars.push_back(e.var);
      return out;
    }
    case ViewExpr::Kind::Join: {
      std::vector<FlatTerm> left = flatten(e.children[0]);
      std::vector<FlatTerm> right = flatten(e.children[1]);
      std::vector<FlatTerm> out;
      for (const auto& a : left)
        for (const auto& b : right) {
          if (!a.sum_vars.empty() || !b.sum_vars.empty())
            throw Error("flatten: aggregation below a join");
          FlatTerm t;
          t.leaves = a.leaves;
          t.leaves.insert(t.leaves.end(), b.leaves.begin(), b.leaves.end());
          out.push_back(std::move(t));
        }
      return out;
    }
  }
  throw Error("flatten: bad expression");
}

ViewExpr expr_of_term(const FlatTerm& term) {
  if (term.leaves.empty()) throw Error("expr_of_term: no leaves");
  ViewExpr e = term.leaves[0];
  for (std::size_t i = 1; i < term.leaves.size(); ++i)
    e = ViewExpr::join(std::move(e), term.leaves[i]);
  for (const auto& v : term.sum_vars) e = ViewExpr::sum(v, std::move(e));
  return e;
}

std::string term_str(const FlatTerm& term) {
  std::string s;
  if (!term.sum_vars.empty()) {
    s = "sum_{";
    for (auto it = term.sum_vars.rbegin(); it != term.sum_vars.rend(); ++it) {
      if (it != term.sum_vars.rbegin()) s += ",";
      s += *it;
    }
    s += "} ";
  }
  for (std::size_t i = 0; i < term.leaves.size(); ++i) {
    if (i) s += " * ";
    s += term.leaves[i].str();
  }
  return s;
}

TermPlan plan_term(const FlatTerm& term, const std::vector<std::string>& head) {
  const std::size_t n = term.leaves.size();
  TermPlan plan;
  std::vector<bool> used(n, false);

  std::size_t seed = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (term.leaves[i].is_delta) {
      seed = i;
      break;
    }
  plan.order.push_back(seed);
  used[seed] = true;

  std::set<std::string> acc(term.leaves[seed].schema.vars.begin(),
                            term.leaves[seed].schema.vars.end());
  for (std::size_t step = 1; step < n; ++step) {
    // First leaf (in text order) sharing a variable with the accumulator;
    // if nothing connects, the first unused one (disconnected join).
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      bool connected = false;
      for (const auto& v : term.leaves[i].schema.vars)
        if (acc.count(v)) {
          connected = true;
          break;
        }
      if (connected) {
        pick = i;
        break;
      }
      if (pick == n) pick = i;
    }
    used[pick] = true;
    plan.order.push_back(pick);
    for (const auto& v : term.leaves[pick].schema.vars) acc.insert(v);
  }

  // Fold a bound variable right after the last leaf containing it joins in.
  std::set<std::string> head_set(head.begin(), head.end());
  plan.fold_after.resize(n);
  std::set<std::string> seen;
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto& v : term.leaves[plan.order[s]].schema.vars) seen.insert(v);
    std::set<std::string> later;
    for (std::size_t t = s + 1; t < n; ++t)
      for (const auto& v : term.leaves[plan.order[t]].schema.vars) later.insert(v);
    for (const auto& v : seen)
      if (!head_set.count(v) && !later.count(v)) plan.fold_after[s].push_back(v);
    for (const auto& v : plan.fold_after[s]) seen.erase(v);
  }
  return plan;
}

Relation eval_term(const FlatTerm& term, const TermPlan& plan,
                   const std::vector<std::string>& head, const EvalContext& ctx) {
  const ViewExpr& seed_leaf = term.leaves[plan.order[0]];
  Relation acc = rename_to(ctx.resolve(seed_leaf), seed_leaf.schema);

  auto fold = [&](std::size_t step) {
    for (const auto& v : plan.fold_after[step]) acc = marginalize(acc, v, lift_fn(ctx.lifts, v));
  };
  fold(0);

  for (std::size_t step = 1; step < plan.order.size(); ++step) {
    const ViewExpr& leaf = term.leaves[plan.order[step]];
    const Relation& stored = ctx.resolve(leaf);
    if (stored.schema().arity() != leaf.schema.arity())
      throw SchemaError("leaf binding arity mismatch for " + leaf.rel);

    // Shared variables between acc and this leaf, as stored positions.
    std::vector<std::size_t> leaf_shared_pos;
    for (std::size_t p = 0; p < leaf.schema.arity(); ++p)
      if (acc.schema().contains(leaf.schema.vars[p])) leaf_shared_pos.push_back(p);

    std::vector<std::string> extra_vars;
    std::vector<std::size_t> extra_pos;
    for (std::size_t p = 0; p < leaf.schema.arity(); ++p)
      if (!acc.schema().contains(leaf.schema.vars[p])) {
        // A leaf may legitimately repeat none of its vars (parser enforces).
        extra_vars.push_back(leaf.schema.vars[p]);
        extra_pos.push_back(p);
      }

    std::vector<std::string> out_vars = acc.schema().vars;
    out_vars.insert(out_vars.end(), extra_vars.begin(), extra_vars.end());
    Relation next{Schema(out_vars)};

    if (leaf_shared_pos.empty()) {
      for (auto ca = acc.entries(); ca.valid(); ca.advance())
        for (auto cl = stored.entries(); cl.valid(); cl.advance()) {
          Tuple row = ca.key();
          for (std::size_t p : extra_pos) row.vals.push_back(cl.key().vals[p]);
          next.apply(row, Int64Ring::mul(ca.payload(), cl.payload()));
        }
    } else {
      auto idx = stored.ensure_index_positions(leaf_shared_pos);
      std::vector<std::size_t> acc_key_pos;
      for (std::size_t p : stored.index_key_positions(idx))
        acc_key_pos.push_back(acc.schema().require(leaf.schema.vars[p]));
      for (auto ca = acc.entries(); ca.valid(); ca.advance()) {
        Tuple key = project(ca.key(), acc_key_pos);
        for (auto cl = stored.probe(idx, key); cl.valid(); cl.advance()) {
          Tuple row = ca.key();
          for (std::size_t p : extra_pos) row.vals.push_back(cl.key().vals[p]);
          next.apply(row, Int64Ring::mul(ca.payload(), cl.payload()));
        }
      }
    }
    acc = std::move(next);
    fold(step);
  }

  // All remaining variables are the head's; put them in head order.
  if (acc.schema().arity() != head.size())
    throw Error("eval_term: unexpected residual schema " + acc.schema().str());
  return reorder(acc, head);
}

}  // namespace ivm
