#include "ivm/classify.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <unordered_map>

#include "ivm/error.hpp"

namespace ivm {
namespace {

using AtomSet = std::uint64_t;  // bitmask over atom indices

std::map<std::string, AtomSet> atom_sets(const Query& q) {
  std::map<std::string, AtomSet> out;
  for (const auto& v : q.all_vars()) out[v] = 0;
  for (std::size_t i = 0; i < q.atoms.size(); ++i)
    for (const auto& v : q.atoms[i].schema.vars) out[v] |= AtomSet(1) << i;
  return out;
}

bool subset(AtomSet a, AtomSet b) { return (a & ~b) == 0; }

/// Empty detail means hierarchical; otherwise a witness pair description.
std::string hierarchical_witness(const Query& q) {
  auto sets = atom_sets(q);
  for (auto i = sets.begin(); i != sets.end(); ++i)
    for (auto j = std::next(i); j != sets.end(); ++j) {
      AtomSet a = i->second, b = j->second;
      if ((a & b) != 0 && !subset(a, b) && !subset(b, a))
        return "atoms(" + i->first + ") and atoms(" + j->first +
               ") overlap without containment";
    }
  return "";
}

/// Empty detail means free-dominant (every strict dominator of a free
/// variable is free).
std::string free_dominant_witness(const Query& q) {
  auto sets = atom_sets(q);
  for (const auto& [y, ys] : sets) {
    if (!q.is_free(y)) continue;
    for (const auto& [x, xs] : sets)
      if (subset(ys, xs) && ys != xs && !q.is_free(x))
        return "bound " + x + " dominates free " + y;
  }
  return "";
}

std::string input_dominant_witness(const Query& q) {
  auto sets = atom_sets(q);
  for (const auto& [y, ys] : sets) {
    if (!q.is_input(y)) continue;
    for (const auto& [x, xs] : sets)
      if (subset(ys, xs) && ys != xs && !q.is_input(x))
        return "non-input " + x + " dominates input " + y;
  }
  return "";
}

void reject_self_join(const Query& q, const char* what) {
  if (q.has_self_join())
    throw ClassifyError(std::string(what) +
                        " requires distinct relation symbols; query repeats a relation");
}

}  // namespace

Verdict is_hierarchical(const Query& q) {
  reject_self_join(q, "hierarchical classification");
  std::string w = hierarchical_witness(q);
  if (!w.empty()) return {false, w};
  return {true, "atom sets nested or disjoint for all variable pairs"};
}

Verdict is_q_hierarchical(const Query& q) {
  reject_self_join(q, "q-hierarchical classification");
  std::string w = hierarchical_witness(q);
  if (!w.empty()) return {false, w};
  w = free_dominant_witness(q);
  if (!w.empty()) return {false, w};
  return {true, "hierarchical and free variables closed under domination"};
}

std::set<std::string> fd_closure(const std::vector<Fd>& fds,
                                 const std::vector<std::string>& start) {
  std::set<std::string> closure(start.begin(), start.end());
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& fd : fds) {
      bool applies = true;
      for (const auto& v : fd.lhs)
        if (!closure.count(v)) {
          applies = false;
          break;
        }
      if (!applies) continue;
      for (const auto& v : fd.rhs)
        if (closure.insert(v).second) grew = true;
    }
  }
  return closure;
}

Query sigma_reduct(const Query& q) {
  Query out = q;
  // Deterministic order for appended variables: query variable order.
  std::vector<std::string> order = q.all_vars();
  auto extend = [&](std::vector<std::string> vars) {
    auto closure = fd_closure(q.fds, vars);
    for (const auto& v : order)
      if (closure.count(v) && std::find(vars.begin(), vars.end(), v) == vars.end())
        vars.push_back(v);
    return vars;
  };
  for (auto& atom : out.atoms) atom.schema = Schema(extend(atom.schema.vars));
  std::vector<std::string> head = extend(q.free_vars());
  // Keep the output/input split: promoted variables become outputs.
  std::vector<std::string> new_outputs = q.output_vars;
  for (const auto& v : head)
    if (!q.is_free(v)) new_outputs.push_back(v);
  out.output_vars = std::move(new_outputs);
  std::vector<std::string> still_bound;
  for (const auto& v : q.bound_vars)
    if (std::find(head.begin(), head.end(), v) == head.end()) still_bound.push_back(v);
  out.bound_vars = std::move(still_bound);
  return out;
}

Fracture fracture(const Query& q) {
  const std::size_t n = q.atoms.size();
  // Fresh name per occurrence of an input variable.
  std::vector<Atom> modified = q.atoms;
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> occurrences;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < modified[i].schema.vars.size(); ++p)
      if (q.is_input(modified[i].schema.vars[p]))
        occurrences[modified[i].schema.vars[p]].push_back({i, p});

  // Connected components over the modified atoms: only non-input variables
  // connect, since each occurrence of an input variable is now unique.
  std::vector<std::size_t> comp(n);
  for (std::size_t i = 0; i < n; ++i) comp[i] = i;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (comp[x] != x) x = comp[x] = comp[comp[x]];
    return x;
  };
  auto unite = [&](std::size_t a, std::size_t b) { comp[find(a)] = find(b); };
  std::map<std::string, std::size_t> first_atom_with;
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& v : q.atoms[i].schema.vars) {
      if (q.is_input(v)) continue;
      auto [it, fresh] = first_atom_with.try_emplace(v, i);
      if (!fresh) unite(i, it->second);
    }

  // Component ids in order of first atom.
  std::vector<std::size_t> comp_id(n);
  std::vector<std::vector<std::size_t>> components;
  std::map<std::size_t, std::size_t> seen;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t root = find(i);
    auto [it, fresh] = seen.try_emplace(root, components.size());
    if (fresh) components.push_back({});
    comp_id[i] = it->second;
    components[it->second].push_back(i);
  }

  Fracture result;
  result.components = components;
  Query out = q;
  out.atoms = modified;
  out.input_vars.clear();
  bool changed = false;
  for (const auto& origin : q.input_vars) {
    // Components touched by this input variable, in component order.
    std::vector<std::size_t> comps;
    for (const auto& [atom, pos] : occurrences[origin]) {
      std::size_t c = comp_id[atom];
      if (std::find(comps.begin(), comps.end(), c) == comps.end()) comps.push_back(c);
    }
    std::sort(comps.begin(), comps.end());
    bool split = comps.size() > 1;
    if (split) changed = true;
    std::map<std::size_t, std::string> name_for;
    for (std::size_t k = 0; k < comps.size(); ++k)
      name_for[comps[k]] = split ? origin + "#" + std::to_string(k + 1) : origin;
    for (const auto& [atom, pos] : occurrences[origin])
      out.atoms[atom].schema.vars[pos] = name_for[comp_id[atom]];
    for (std::size_t k = 0; k < comps.size(); ++k) out.input_vars.push_back(name_for[comps[k]]);
  }
  result.changed = changed;
  result.query = std::move(out);
  return result;
}

Verdict is_tractable_cqap(const Query& q) {
  Fracture f = fracture(q);
  std::string w = hierarchical_witness(f.query);
  if (!w.empty()) return {false, "fracture not hierarchical: " + w};
  w = free_dominant_witness(f.query);
  if (!w.empty()) return {false, "fracture not free-dominant: " + w};
  w = input_dominant_witness(f.query);
  if (!w.empty()) return {false, "fracture not input-dominant: " + w};
  return {true, "fracture is hierarchical, free-dominant, and input-dominant"};
}

namespace {

/// Exhaustive variable-order search for the static/dynamic condition.
struct SdSearch {
  const Query& q;
  std::vector<std::string> vars;
  std::map<std::string, std::size_t> var_id;
  std::vector<std::uint64_t> atom_vars;  // var bitmask per atom
  std::vector<bool> atom_dynamic;
  std::uint64_t free_mask = 0;
  std::map<std::pair<std::uint64_t, std::uint64_t>, bool> memo;  // (atoms, anc∩vars)

  explicit SdSearch(const Query& query) : q(query) {
    vars = q.all_vars();
    for (std::size_t i = 0; i < vars.size(); ++i) var_id[vars[i]] = i;
    for (const auto& v : q.free_vars()) free_mask |= std::uint64_t(1) << var_id[v];
    for (const auto& a : q.atoms) {
      std::uint64_t m = 0;
      for (const auto& v : a.schema.vars) m |= std::uint64_t(1) << var_id[v];
      atom_vars.push_back(m);
      atom_dynamic.push_back(a.mode == Atom::Mode::dyn);
    }
  }

  std::uint64_t vars_of(std::uint64_t atoms) const {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < atom_vars.size(); ++i)
      if (atoms >> i & 1) m |= atom_vars[i];
    return m;
  }

  /// Splits atoms into connected components over variables not in anc.
  std::vector<std::uint64_t> split_components(std::uint64_t atoms, std::uint64_t anc) const {
    std::vector<std::uint64_t> comps;
    std::uint64_t left = atoms;
    while (left) {
      std::uint64_t seed = left & -left;
      std::uint64_t comp = seed, frontier = seed;
      while (frontier) {
        std::uint64_t vs = 0;
        for (std::size_t i = 0; i < atom_vars.size(); ++i)
          if (frontier >> i & 1) vs |= atom_vars[i] & ~anc;
        std::uint64_t grown = comp;
        for (std::size_t i = 0; i < atom_vars.size(); ++i)
          if ((left >> i & 1) && (atom_vars[i] & vs)) grown |= std::uint64_t(1) << i;
        frontier = grown & ~comp;
        comp = grown;
      }
      comps.push_back(comp);
      left &= ~comp;
    }
    return comps;
  }

  bool component_dynamic(std::uint64_t atoms) const {
    for (std::size_t i = 0; i < atom_vars.size(); ++i)
      if ((atoms >> i & 1) && atom_dynamic[i]) return true;
    return false;
  }

  /// Tries to order the given connected atom set below ancestors anc.
  bool feasible(std::uint64_t atoms, std::uint64_t anc) {
    std::uint64_t remaining = vars_of(atoms) & ~anc;
    if (!remaining) return true;
    std::uint64_t key_anc = anc & vars_of(atoms);
    auto key = std::make_pair(atoms, key_anc);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    bool ok = false;
    for (std::size_t x = 0; x < vars.size() && !ok; ++x) {
      if (!(remaining >> x & 1)) continue;
      bool x_free = free_mask >> x & 1;
      if (!x_free && (remaining & free_mask & ~(std::uint64_t(1) << x)))
        continue;  // a free variable would end up below a bound one
      std::uint64_t anc2 = anc | std::uint64_t(1) << x;
      // Children at x: completed atoms and remaining components.
      std::uint64_t open = 0, completed = 0;
      for (std::size_t i = 0; i < atom_vars.size(); ++i)
        if (atoms >> i & 1) {
          if ((atom_vars[i] & ~anc2) == 0)
            completed |= std::uint64_t(1) << i;
          else
            open |= std::uint64_t(1) << i;
        }
      auto comps = split_components(open, anc2);
      // Sibling views: (schema, dynamic) pairs.
      std::vector<std::pair<std::uint64_t, bool>> sibs;
      for (std::size_t i = 0; i < atom_vars.size(); ++i)
        if (completed >> i & 1) sibs.push_back({atom_vars[i], atom_dynamic[i]});
      for (std::uint64_t c : comps) sibs.push_back({vars_of(c) & anc2, component_dynamic(c)});
      bool cover = true;
      for (const auto& [ds, dyn] : sibs) {
        if (!dyn) continue;
        for (const auto& [es, edyn] : sibs)
          if ((es & ~ds) != 0) {
            cover = false;
            break;
          }
        if (!cover) break;
      }
      if (!cover) continue;
      bool children_ok = true;
      for (std::uint64_t c : comps)
        if (!feasible(c, anc2)) {
          children_ok = false;
          break;
        }
      ok = children_ok;
    }
    memo[key] = ok;
    return ok;
  }
};

}  // namespace

Verdict check_static_dynamic(const Query& q) {
  if (q.atoms.size() > 64 || q.all_vars().size() > 64)
    throw ClassifyError("static/dynamic search supports at most 64 atoms and variables");
  SdSearch search(q);
  std::uint64_t all = q.atoms.size() == 64 ? ~std::uint64_t(0)
                                           : (std::uint64_t(1) << q.atoms.size()) - 1;
  for (std::uint64_t c : search.split_components(all, 0))
    if (!search.feasible(c, 0))
      return {false, "no variable order satisfies sibling cover with a free top fragment"};
  return {true, "found a variable order with covered dynamic siblings and free top fragment"};
}

}  // namespace ivm
