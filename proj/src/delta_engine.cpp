#include "ivm/delta_engine.hpp"

#include <algorithm>
#include <deque>

#include "ivm/error.hpp"

namespace ivm {

namespace {

/// Column names for relations the database file never declared.
Schema fresh_schema(std::size_t arity) {
  std::vector<std::string> vars;
  for (std::size_t i = 0; i < arity; ++i) vars.push_back("c" + std::to_string(i));
  return Schema(vars);
}

}  // namespace

Program compile_program(const ViewExpr& e, const std::vector<std::string>& head) {
  Program prog;
  for (auto& term : flatten(e)) {
    TermPlan plan = plan_term(term, head);
    prog.push_back(PlannedTerm{std::move(term), std::move(plan)});
  }
  return prog;
}

Relation run_program(const Program& prog, const std::vector<std::string>& head,
                     const EvalContext& ctx) {
  Relation out{Schema(head)};
  for (const auto& pt : prog) {
    Relation part = eval_term(pt.term, pt.plan, head, ctx);
    for (auto c = part.entries(); c.valid(); c.advance()) out.apply(c.key(), c.payload());
  }
  return out;
}

Relation recompute(const Query& q, const Database& db) {
  EvalContext ctx;
  ctx.db = &db;
  ctx.lifts = &q.lifts;
  Program prog = compile_program(canonical_expr(q), q.free_vars());
  return run_program(prog, q.free_vars(), ctx);
}

EagerEngine::EagerEngine(Query q, Database db)
    : q_(std::move(q)), db_(std::move(db)), head_(q_.free_vars()), output_(Schema(head_)) {
  std::vector<FlatTerm> terms = flatten(canonical_expr(q_));
  if (terms.size() != 1) throw EngineError("query body is not a single product");
  term_ = std::move(terms.front());
  for (const auto& a : q_.atoms)
    if (!db_.has(a.rel)) db_.declare(a.rel, fresh_schema(a.schema.arity()));
  output_ = recompute(q_, db_);
  compile();
}

void EagerEngine::add_view(const Query& def) {
  if (!def.input_vars.empty()) throw EngineError("view " + def.name + " has an access pattern");
  if (view_data_.count(def.name) || db_.has(def.name))
    throw EngineError("view name " + def.name + " already taken");

  // The body must match query atoms one for one, by relation and variables.
  std::vector<std::size_t> matched;
  std::vector<bool> taken(term_.leaves.size(), false);
  for (const auto& a : def.atoms) {
    std::size_t found = term_.leaves.size();
    for (std::size_t i = 0; i < term_.leaves.size(); ++i) {
      if (taken[i] || term_.leaves[i].is_view) continue;
      if (term_.leaves[i].rel == a.rel && term_.leaves[i].schema == a.schema) {
        found = i;
        break;
      }
    }
    if (found == term_.leaves.size())
      throw EngineError("view " + def.name + " does not match the query body at " + a.rel +
                        a.schema.str());
    taken[found] = true;
    matched.push_back(found);
  }

  // Variables the view sums away must be private to the covered atoms.
  for (const auto& v : def.bound_vars) {
    for (const auto& h : head_)
      if (h == v) throw EngineError("view " + def.name + " sums over head variable " + v);
    for (std::size_t i = 0; i < term_.leaves.size(); ++i)
      if (!taken[i] && term_.leaves[i].schema.contains(v))
        throw EngineError("view " + def.name + " sums over " + v + ", used outside it");
    if (!q_.lifts.trivial(v) && def.lifts.trivial(v))
      throw EngineError("view " + def.name + " drops the lifting on " + v);
  }

  ViewInfo info;
  info.def = def;
  info.expr = canonical_expr(def);
  for (const auto& a : def.atoms) info.base_rels.insert(a.rel);
  for (const auto& rel : info.base_rels)
    info.delta[rel] = compile_program(derive_delta(info.expr, rel), def.output_vars);

  EvalContext ctx;
  ctx.db = &db_;
  ctx.lifts = &def.lifts;
  view_data_.emplace(def.name, eval(info.expr, ctx));

  // Rewrite the query term: covered atoms out, one view leaf in their place.
  FlatTerm next;
  std::size_t at = *std::min_element(matched.begin(), matched.end());
  for (std::size_t i = 0; i < term_.leaves.size(); ++i) {
    if (i == at)
      next.leaves.push_back(ViewExpr::leaf(def.name, Schema(def.output_vars), true));
    if (!taken[i]) next.leaves.push_back(term_.leaves[i]);
  }
  for (const auto& v : term_.sum_vars)
    if (std::find(def.bound_vars.begin(), def.bound_vars.end(), v) == def.bound_vars.end())
      next.sum_vars.push_back(v);
  term_ = std::move(next);

  views_.push_back(std::move(info));
  compile();
}

void EagerEngine::compile() {
  programs_.clear();
  std::set<std::string> rels;
  for (const auto& leaf : term_.leaves)
    if (!leaf.is_view) rels.insert(leaf.rel);
  for (const auto& v : views_) rels.insert(v.base_rels.begin(), v.base_rels.end());

  ViewExpr body = expr_of_term(term_);
  for (const auto& rel : rels) {
    auto affected = [&](const ViewExpr& leaf) {
      if (!leaf.is_view) return leaf.rel == rel;
      for (const auto& v : views_)
        if (v.def.name == leaf.rel) return v.base_rels.count(rel) != 0;
      return false;
    };
    programs_[rel] = compile_program(derive_delta(body, affected), head_);
  }
}

const Program& EagerEngine::program_for(const std::string& rel) {
  static const Program none;
  auto it = programs_.find(rel);
  return it == programs_.end() ? none : it->second;
}

Relation EagerEngine::apply(const Update& u) {
  if (u.payload == 0) return Relation{Schema(head_)};
  Relation& base = db_.get(u.rel);

  Relation single{base.schema()};
  single.apply(u.tuple, u.payload);

  std::map<std::string, const Relation*> deltas;
  deltas[u.rel] = &single;

  // View deltas first, all against the pre-update state.
  std::deque<std::pair<std::string, Relation>> view_deltas;
  for (const auto& v : views_) {
    auto it = v.delta.find(u.rel);
    if (it == v.delta.end()) continue;
    EvalContext ctx;
    ctx.db = &db_;
    ctx.views = &view_data_;
    ctx.deltas = &deltas;
    ctx.lifts = &v.def.lifts;
    view_deltas.emplace_back(v.def.name, run_program(it->second, v.def.output_vars, ctx));
    deltas[v.def.name] = &view_deltas.back().second;
  }

  EvalContext ctx;
  ctx.db = &db_;
  ctx.views = &view_data_;
  ctx.deltas = &deltas;
  ctx.lifts = &q_.lifts;
  Relation dq = run_program(program_for(u.rel), head_, ctx);

  base.apply(u.tuple, u.payload);
  for (auto& [name, dv] : view_deltas) {
    Relation& data = view_data_.at(name);
    for (auto c = dv.entries(); c.valid(); c.advance()) data.apply(c.key(), c.payload());
  }
  for (auto c = dq.entries(); c.valid(); c.advance()) output_.apply(c.key(), c.payload());
  ++version_;
  return dq;
}

const Relation& EagerEngine::view(const std::string& name) const {
  auto it = view_data_.find(name);
  if (it == view_data_.end()) throw EngineError("unknown view " + name);
  return it->second;
}

std::string EagerEngine::explain() const {
  std::string s = q_.head_str() + " := " + term_str(term_) + "\n";
  for (const auto& v : views_) {
    auto terms = flatten(v.expr);
    s += v.def.name + Schema(v.def.output_vars).str() + " := " + term_str(terms.front()) + "\n";
  }
  for (const auto& [rel, prog] : programs_) {
    s += "on " + rel + ":";
    if (prog.empty()) s += " (no change)";
    s += "\n";
    for (const auto& pt : prog) s += "  += " + term_str(pt.term) + "\n";
  }
  return s;
}

void EagerEngine::check_consistency() const {
  Relation want = recompute(q_, db_);
  if (!same_entries(want, output_))
    throw EngineError("maintained output deviates from recomputation");
  for (const auto& v : views_) {
    EvalContext ctx;
    ctx.db = &db_;
    ctx.lifts = &v.def.lifts;
    if (!same_entries(eval(v.expr, ctx), view_data_.at(v.def.name)))
      throw EngineError("maintained view " + v.def.name + " deviates from recomputation");
  }
}

LazyEngine::LazyEngine(Query q, Database db)
    : q_(std::move(q)), db_(std::move(db)), cache_(Schema(q_.free_vars())) {
  for (const auto& a : q_.atoms)
    if (!db_.has(a.rel)) db_.declare(a.rel, fresh_schema(a.schema.arity()));
}

void LazyEngine::apply(const Update& u) {
  if (u.payload == 0) return;
  db_.get(u.rel).apply(u.tuple, u.payload);
  stale_ = true;
  ++version_;
}

const Relation& LazyEngine::output() {
  if (stale_) {
    cache_ = recompute(q_, db_);
    stale_ = false;
    ++refresh_;
  }
  return cache_;
}

}  // namespace ivm
