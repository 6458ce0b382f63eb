#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ivm/relation.hpp"

namespace ivm {

/// Per-variable lifting function g_X: domain value -> ring element.
/// Absent variables lift to one, so plain counting needs no setup.
struct LiftingSpec {
  using Fn = std::function<std::int64_t(Value)>;
  std::map<std::string, Fn> fns;

  bool trivial(const std::string& var) const { return fns.find(var) == fns.end(); }

  std::int64_t lift(const std::string& var, Value v) const {
    auto it = fns.find(var);
    return it == fns.end() ? 1 : it->second(v);
  }

  /// Lift that reads the value's spelling as an integer.
  static Fn numeric() {
    return [](Value v) { return numeric_value(v); };
  }
};

/// (R + S)(t) = R(t) + S(t). Schemas must cover the same variables; the
/// second operand may order them differently.
template <RingSpec R>
BasicRelation<R> union_rel(const BasicRelation<R>& a, const BasicRelation<R>& b) {
  if (a.schema().arity() != b.schema().arity() ||
      schema_minus(b.schema(), a.schema()).size() != 0)
    throw SchemaError("union over different schemas " + a.schema().str() + " vs " +
                      b.schema().str());
  BasicRelation<R> out(a.schema());
  for (auto c = a.entries(); c.valid(); c.advance()) out.apply(c.key(), c.payload());
  std::vector<std::size_t> remap;  // b column for each a column
  remap.reserve(a.schema().arity());
  for (const auto& v : a.schema().vars) remap.push_back(b.schema().require(v));
  for (auto c = b.entries(); c.valid(); c.advance()) out.apply(project(c.key(), remap), c.payload());
  return out;
}

/// Natural join on shared variables; payloads multiply. Output schema is
/// the left schema followed by the right-only variables, and output order
/// follows left iteration order (then bucket order), so results are
/// deterministic.
template <RingSpec R>
BasicRelation<R> join(const BasicRelation<R>& s, const BasicRelation<R>& t) {
  std::vector<std::string> shared = schema_intersect(s.schema(), t.schema());
  std::vector<std::string> t_only = schema_minus(t.schema(), s.schema());

  std::vector<std::string> out_vars = s.schema().vars;
  out_vars.insert(out_vars.end(), t_only.begin(), t_only.end());
  BasicRelation<R> out{Schema(out_vars)};

  std::vector<std::size_t> t_extra;
  t_extra.reserve(t_only.size());
  for (const auto& v : t_only) t_extra.push_back(t.schema().require(v));

  if (shared.empty()) {
    for (auto cs = s.entries(); cs.valid(); cs.advance())
      for (auto ct = t.entries(); ct.valid(); ct.advance()) {
        Tuple row = cs.key();
        for (std::size_t p : t_extra) row.vals.push_back(ct.key().vals[p]);
        out.apply(row, R::mul(cs.payload(), ct.payload()));
      }
    return out;
  }

  auto idx = t.ensure_index(shared);
  // Probe keys list values in t's schema order of the key positions.
  std::vector<std::size_t> s_key;
  for (std::size_t tp : t.index_key_positions(idx))
    s_key.push_back(s.schema().require(t.schema().vars[tp]));

  for (auto cs = s.entries(); cs.valid(); cs.advance()) {
    Tuple key = project(cs.key(), s_key);
    for (auto ct = t.probe(idx, key); ct.valid(); ct.advance()) {
      Tuple row = cs.key();
      for (std::size_t p : t_extra) row.vals.push_back(ct.key().vals[p]);
      out.apply(row, R::mul(cs.payload(), ct.payload()));
    }
  }
  return out;
}

/// (sum_X r)(t) = sum over groups of payload * lift(x). Groups follow the
/// remaining columns; lift defaults to the constant one.
template <RingSpec R>
BasicRelation<R> marginalize(const BasicRelation<R>& r, const std::string& var,
                             const std::function<typename R::value_type(Value)>& lift = {}) {
  std::size_t drop = r.schema().require(var);
  std::vector<std::string> out_vars;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < r.schema().arity(); ++i)
    if (i != drop) {
      out_vars.push_back(r.schema().vars[i]);
      keep.push_back(i);
    }
  BasicRelation<R> out{Schema(out_vars)};
  for (auto c = r.entries(); c.valid(); c.advance()) {
    typename R::value_type p = c.payload();
    if (lift) p = R::mul(p, lift(c.key().vals[drop]));
    out.apply(project(c.key(), keep), p);
  }
  return out;
}

/// Folds several variables, innermost first in the order given.
template <RingSpec R>
BasicRelation<R> marginalize_all(BasicRelation<R> r, const std::vector<std::string>& vars,
                                 const LiftingSpec& lifts = {}) {
  for (const auto& v : vars) {
    std::function<typename R::value_type(Value)> fn;
    if (!lifts.trivial(v)) {
      auto f = lifts.fns.at(v);
      fn = [f](Value x) { return static_cast<typename R::value_type>(f(x)); };
    }
    r = marginalize(r, v, fn);
  }
  return r;
}

/// Reorders columns to the target variable list (a permutation of the
/// current schema).
template <RingSpec R>
BasicRelation<R> reorder(const BasicRelation<R>& r, const std::vector<std::string>& vars) {
  if (vars.size() != r.schema().arity())
    throw SchemaError("reorder: variable count mismatch for " + r.schema().str());
  std::vector<std::size_t> ps;
  ps.reserve(vars.size());
  for (const auto& v : vars) ps.push_back(r.schema().require(v));
  BasicRelation<R> out{Schema(vars)};
  for (auto c = r.entries(); c.valid(); c.advance()) out.apply(project(c.key(), ps), c.payload());
  return out;
}

}  // namespace ivm
