#include "ivm/view_tree.hpp"

#include <algorithm>
#include <set>

#include "ivm/error.hpp"

namespace ivm {

namespace {

Schema fresh_schema(std::size_t arity) {
  std::vector<std::string> vars;
  for (std::size_t i = 0; i < arity; ++i) vars.push_back("c" + std::to_string(i));
  return Schema(vars);
}

std::string names_str(const std::vector<std::string>& names) {
  std::string s = "(";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) s += ",";
    s += names[i];
  }
  return s + ")";
}

}  // namespace

ViewTreeEngine::ViewTreeEngine(Query q, Database db) : q_(std::move(q)) {
  if (q_.has_self_join())
    throw NotQHierarchical("self-joins are not supported by the view tree engine");
  for (const auto& a : q_.atoms)
    if (a.schema.arity() == 0)
      throw NotQHierarchical("atom " + a.rel + " has no variables");
  if (q_.atoms.size() > 64) throw NotQHierarchical("more than 64 atoms");

  Fracture plain = fracture(q_);
  Verdict v = is_q_hierarchical(plain.query);
  if (v) {
    fq_ = std::move(plain.query);
    fracture_split_ = plain.changed;
  } else if (!q_.fds.empty()) {
    Fracture reduced = fracture(sigma_reduct(q_));
    Verdict vr = is_q_hierarchical(reduced.query);
    if (!vr)
      throw NotQHierarchical("not q-hierarchical even under the declared fds: " + vr.detail);
    fq_ = std::move(reduced.query);
    fracture_split_ = reduced.changed;
    used_reduct_ = true;
  } else {
    throw NotQHierarchical(v.detail);
  }

  build_structure();

  // Preprocessing by replay: start empty, push every base tuple through the
  // update path. Non-query relations are carried along untouched.
  for (const auto& a : atoms_)
    if (!db_.has(a.rel)) db_.declare(a.rel, Schema(a.stored_origin));
  for (const auto& [name, rel] : db.rels) {
    if (!atom_of_rel_.count(name)) {
      db_.rels.insert_or_assign(name, rel);
      continue;
    }
    for (auto c = rel.entries(); c.valid(); c.advance()) apply(Update{name, c.key(), c.payload()});
  }
  version_ = 0;
}

void ViewTreeEngine::build_structure() {
  // Tree name -> declared name (the two queries line up positionally).
  const Query base = used_reduct_ ? sigma_reduct(q_) : q_;
  for (std::size_t i = 0; i < base.atoms.size(); ++i)
    for (std::size_t p = 0; p < base.atoms[i].schema.arity(); ++p)
      origin_of_[fq_.atoms[i].schema.vars[p]] = base.atoms[i].schema.vars[p];
  for (const auto& v : q_.bound_vars)
    if (base.is_free(v)) promoted_.push_back(v);

  // Variable ranks: free first, then bound, in head order.
  std::map<std::string, std::size_t> rank;
  {
    std::size_t r = 0;
    for (const auto& v : fq_.free_vars()) rank[v] = r++;
    for (const auto& v : fq_.bound_vars) rank[v] = r++;
  }

  std::map<std::string, std::uint64_t> var_mask;
  for (std::size_t i = 0; i < fq_.atoms.size(); ++i)
    for (const auto& v : fq_.atoms[i].schema.vars)
      var_mask[v] |= std::uint64_t(1) << i;

  // Groups: variables with equal atom sets, ordered by their best rank.
  std::map<std::uint64_t, std::vector<std::string>> by_mask;
  for (const auto& [v, m] : var_mask) by_mask[m].push_back(v);
  std::vector<std::pair<std::size_t, std::uint64_t>> order;
  for (auto& [m, vars] : by_mask) {
    std::sort(vars.begin(), vars.end(),
              [&](const std::string& a, const std::string& b) { return rank[a] < rank[b]; });
    order.push_back({rank[vars.front()], m});
  }
  std::sort(order.begin(), order.end());

  std::map<std::uint64_t, std::size_t> group_of_mask;
  std::vector<std::uint64_t> group_mask;
  for (const auto& [r, m] : order) {
    (void)r;
    GroupInfo g;
    g.vars = by_mask[m];
    for (const auto& v : g.vars)
      (fq_.is_free(v) ? g.free_vars : g.bound_vars).push_back(v);
    g.kind = g.bound_vars.empty()  ? GroupInfo::Kind::AllFree
             : g.free_vars.empty() ? GroupInfo::Kind::AllBound
                                   : GroupInfo::Kind::Mixed;
    group_of_mask[m] = groups_.size();
    group_mask.push_back(m);
    groups_.push_back(std::move(g));
  }

  // Forest: parent is the smallest strict superset (supersets form a chain
  // in hierarchical queries).
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    std::size_t best = npos;
    for (std::size_t j = 0; j < groups_.size(); ++j) {
      if (i == j) continue;
      std::uint64_t mi = group_mask[i], mj = group_mask[j];
      if ((mi & mj) != mi || mi == mj) continue;
      if (best == npos || __builtin_popcountll(group_mask[j]) <
                              __builtin_popcountll(group_mask[best]))
        best = j;
    }
    groups_[i].parent = best;
    if (best == npos)
      roots_.push_back(i);
    else
      groups_[best].children.push_back(i);
  }

  // Atoms: attachment group is the lowest (smallest atom set) among the
  // groups of the atom's variables; stored columns are the declared prefix.
  for (std::size_t i = 0; i < fq_.atoms.size(); ++i) {
    AtomInfo a;
    a.rel = fq_.atoms[i].rel;
    std::size_t arity = q_.atoms[i].schema.arity();
    for (std::size_t p = 0; p < arity; ++p) {
      a.stored_vars.push_back(fq_.atoms[i].schema.vars[p]);
      a.stored_origin.push_back(origin_of_.at(fq_.atoms[i].schema.vars[p]));
    }
    std::size_t attach = npos;
    for (const auto& v : fq_.atoms[i].schema.vars) {
      std::size_t g = group_of_mask.at(var_mask.at(v));
      if (attach == npos || __builtin_popcountll(group_mask[g]) <
                                __builtin_popcountll(group_mask[attach]))
        attach = g;
    }
    a.group = attach;
    groups_[attach].atoms.push_back(i);
    atom_of_rel_[a.rel] = atoms_.size();
    atoms_.push_back(std::move(a));
  }

  // Derivation steps for extension columns: each step lists every atom
  // whose declared schema holds the determinant and the determined
  // variables, tight witnesses (determinant pins the whole key) first.
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    AtomInfo& a = atoms_[i];
    std::set<std::string> known(a.stored_origin.begin(), a.stored_origin.end());
    std::set<std::string> want;
    for (const auto& v : fq_.atoms[i].schema.vars) {
      const std::string& o = origin_of_.at(v);
      if (!known.count(o)) want.insert(o);
    }
    bool grew = true;
    while (!want.empty() && grew) {
      grew = false;
      for (const auto& fd : q_.fds) {
        bool lhs_known = true;
        for (const auto& v : fd.lhs) lhs_known = lhs_known && known.count(v);
        bool rhs_new = false;
        for (const auto& v : fd.rhs) rhs_new = rhs_new || !known.count(v);
        if (!lhs_known || !rhs_new) continue;

        FdStep st;
        for (const auto& v : fd.rhs)
          if (!known.count(v)) st.out_vars.push_back(v);
        std::set<std::string> pinned = fd_closure(q_.fds, fd.lhs);
        for (std::size_t j = 0; j < atoms_.size(); ++j) {
          const auto& wcols = atoms_[j].stored_origin;
          std::set<std::string> cols(wcols.begin(), wcols.end());
          bool all = true;
          for (const auto& v : fd.lhs) all = all && cols.count(v);
          for (const auto& v : fd.rhs) all = all && cols.count(v);
          if (!all) continue;
          Witness w;
          w.atom = j;
          auto pos_of = [&](const std::string& v) {
            return std::size_t(std::find(wcols.begin(), wcols.end(), v) - wcols.begin());
          };
          std::vector<std::pair<std::size_t, std::string>> probes;
          for (const auto& v : fd.lhs) probes.push_back({pos_of(v), v});
          std::sort(probes.begin(), probes.end());
          for (const auto& [p, v] : probes) {
            w.probe_positions.push_back(p);
            w.probe_vars.push_back(v);
          }
          for (const auto& v : st.out_vars) w.out_positions.push_back(pos_of(v));
          w.tight = true;
          for (const auto& v : wcols) w.tight = w.tight && pinned.count(v);
          st.witnesses.push_back(std::move(w));
        }
        if (st.witnesses.empty()) continue;
        std::stable_sort(st.witnesses.begin(), st.witnesses.end(),
                         [](const Witness& x, const Witness& y) { return x.tight > y.tight; });
        for (const auto& v : st.out_vars) {
          known.insert(v);
          want.erase(v);
        }
        a.steps.push_back(std::move(st));
        grew = true;
      }
    }
    if (!want.empty())
      throw FdViolation("no declared relation witnesses a derivation of " + *want.begin() +
                        " for updates to " + a.rel);
  }

  // Per-group view schemas. up_key: ancestor variables that occur in the
  // declared schema of some atom attached in the subtree, ancestors first.
  std::vector<std::set<std::string>> subtree_stored(groups_.size());
  // Group creation order follows the head, not the tree, so gather each
  // subtree explicitly: children first, then the group's own atoms.
  std::function<void(std::size_t)> gather = [&](std::size_t i) {
    for (std::size_t c : groups_[i].children) {
      gather(c);
      subtree_stored[i].insert(subtree_stored[c].begin(), subtree_stored[c].end());
    }
    for (std::size_t ai : groups_[i].atoms)
      for (const auto& v : atoms_[ai].stored_vars) subtree_stored[i].insert(v);
  };
  for (std::size_t r : roots_) gather(r);
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    GroupInfo& g = groups_[i];
    std::vector<std::size_t> anc_chain;
    for (std::size_t p = g.parent; p != npos; p = groups_[p].parent) anc_chain.push_back(p);
    std::reverse(anc_chain.begin(), anc_chain.end());
    for (std::size_t p : anc_chain)
      for (const auto& v : groups_[p].vars)
        if (subtree_stored[i].count(v)) g.up_key.push_back(v);
    g.main_key = g.up_key;
    g.main_key.insert(g.main_key.end(), g.free_vars.begin(), g.free_vars.end());
    g.main = Relation(Schema(g.main_key));
    g.has_branches = g.parent != npos && !g.free_vars.empty();
    if (g.has_branches) g.branches = Relation(Schema(g.up_key));
  }

  // Access support: every strict dominator of an input variable is an input.
  for (std::size_t i = 0; i < groups_.size() && supports_access_; ++i) {
    bool has_input = false;
    for (const auto& v : groups_[i].vars) has_input = has_input || fq_.is_input(v);
    if (!has_input) continue;
    for (std::size_t p = groups_[i].parent; p != npos; p = groups_[p].parent)
      for (const auto& v : groups_[p].vars)
        if (!fq_.is_input(v)) {
          supports_access_ = false;
          access_detail_ = "input variables are dominated by " + v;
        }
  }
  full_enum_ok_ = !fracture_split_;
}

void ViewTreeEngine::extend_values(const AtomInfo& a, ValMap& val) const {
  for (const FdStep& st : a.steps) {
    bool have = false;
    Tuple rhs;
    for (const Witness& w : st.witnesses) {
      if (have) break;
      Tuple key;
      bool ready = true;
      for (const auto& v : w.probe_vars) {
        auto it = val.find(v);
        if (it == val.end()) {
          ready = false;
          break;
        }
        key.vals.push_back(it->second);
      }
      if (!ready) continue;
      const Relation& rel = db_.get(atoms_[w.atom].rel);
      auto idx = rel.ensure_index_positions(w.probe_positions);
      for (auto c = rel.probe(idx, key); c.valid(); c.advance()) {
        Tuple pr = project(c.key(), w.out_positions);
        if (!have) {
          rhs = pr;
          have = true;
        } else if (!(pr == rhs)) {
          throw FdViolation("relation " + atoms_[w.atom].rel + " maps " + key.str() +
                            " to both " + rhs.str() + " and " + pr.str());
        }
      }
    }
    if (have)
      for (std::size_t k = 0; k < st.out_vars.size(); ++k) val[st.out_vars[k]] = rhs.vals[k];
  }
}

bool ViewTreeEngine::values_for(const std::vector<std::string>& names, const ValMap& val,
                                Tuple& out) const {
  out.vals.clear();
  for (const auto& n : names) {
    auto it = val.find(origin_of_.at(n));
    if (it == val.end()) return false;
    out.vals.push_back(it->second);
  }
  return true;
}

std::int64_t ViewTreeEngine::ring_term(const GroupInfo& g, const ValMap& val) const {
  std::int64_t term = 1;
  Tuple key;
  for (std::size_t ai : g.atoms) {
    const AtomInfo& a = atoms_[ai];
    if (!values_for(a.stored_vars, val, key)) throw Error("unresolved atom key");
    term = Int64Ring::mul(term, db_.get(a.rel).at(key));
  }
  for (std::size_t c : g.children) {
    if (!values_for(groups_[c].up_key, val, key)) throw Error("unresolved child key");
    term = Int64Ring::mul(term, groups_[c].main.at(key));
  }
  for (const auto& v : g.bound_vars)
    term = Int64Ring::mul(term, q_.lifts.lift(origin_of_.at(v), val.at(origin_of_.at(v))));
  return term;
}

std::int64_t ViewTreeEngine::gate_product(const GroupInfo& g, const ValMap& val) const {
  std::int64_t p = 1;
  Tuple key;
  for (std::size_t ai : g.atoms) {
    const AtomInfo& a = atoms_[ai];
    if (!values_for(a.stored_vars, val, key)) throw Error("unresolved atom key");
    p = Int64Ring::mul(p, db_.get(a.rel).contains(key) ? 1 : 0);
  }
  for (std::size_t c : g.children) {
    const GroupInfo& ch = groups_[c];
    if (!values_for(ch.up_key, val, key)) throw Error("unresolved child key");
    if (ch.free_vars.empty())
      p = Int64Ring::mul(p, ch.main.contains(key) ? 1 : 0);
    else
      p = Int64Ring::mul(p, ch.branches.at(key));
  }
  return p;
}

/// Ring contribution of an all-free group at emission time: the payloads of
/// its attached atoms times the values of its bound subtrees.
std::int64_t ViewTreeEngine::free_factor(const GroupInfo& g, const ValMap& val) const {
  std::int64_t f = 1;
  Tuple key;
  for (std::size_t ai : g.atoms) {
    const AtomInfo& a = atoms_[ai];
    values_for(a.stored_vars, val, key);
    f = Int64Ring::mul(f, db_.get(a.rel).at(key));
  }
  for (std::size_t c : g.children) {
    const GroupInfo& ch = groups_[c];
    if (ch.kind != GroupInfo::Kind::AllBound) continue;
    values_for(ch.up_key, val, key);
    f = Int64Ring::mul(f, ch.main.at(key));
  }
  return f;
}

void ViewTreeEngine::apply(const Update& u) {
  if (u.payload == 0) return;
  auto found = atom_of_rel_.find(u.rel);
  if (found == atom_of_rel_.end()) {
    // Not part of the query: base data only.
    if (!db_.has(u.rel)) db_.declare(u.rel, fresh_schema(u.tuple.size()));
    db_.get(u.rel).apply(u.tuple, u.payload);
    ++version_;
    return;
  }
  const AtomInfo& a = atoms_[found->second];
  Relation& base = db_.get(a.rel);
  if (u.tuple.size() != base.schema().arity())
    throw SchemaError("update arity mismatch for " + u.rel);

  ValMap val;
  for (std::size_t p = 0; p < a.stored_origin.size(); ++p)
    val[a.stored_origin[p]] = u.tuple.vals[p];
  extend_values(a, val);

  std::vector<std::size_t> chain;
  for (std::size_t g = a.group; g != npos; g = groups_[g].parent) chain.push_back(g);

  // A level is workable while its whole key resolves; everything above the
  // first unresolved level is untouched by this update.
  std::size_t live_levels = 0;
  Tuple scratch;
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const GroupInfo& g = groups_[chain[k]];
    if (!values_for(g.main_key, val, scratch)) break;
    bool ok = true;
    for (const auto& v : g.bound_vars)
      ok = ok && val.count(origin_of_.at(v));
    if (!ok) break;
    live_levels = k + 1;
  }

  // Ring terms read their factors before anything changes underneath them.
  std::vector<std::int64_t> old_term(live_levels, 0);
  for (std::size_t k = 0; k < live_levels; ++k) {
    const GroupInfo& g = groups_[chain[k]];
    if (g.kind != GroupInfo::Kind::AllFree) old_term[k] = ring_term(g, val);
  }

  base.apply(u.tuple, u.payload);

  for (std::size_t k = 0; k < live_levels; ++k) {
    GroupInfo& g = groups_[chain[k]];
    Tuple key;
    values_for(g.main_key, val, key);
    bool had = g.main.contains(key);
    if (g.kind == GroupInfo::Kind::AllFree) {
      std::int64_t neu = gate_product(g, val);
      std::int64_t old = g.main.at(key);
      if (neu != old) g.main.apply(key, Int64Ring::add(neu, -old));
    } else {
      std::int64_t delta = Int64Ring::add(ring_term(g, val), -old_term[k]);
      if (delta != 0) g.main.apply(key, delta);
    }
    bool has = g.main.contains(key);
    if (g.has_branches && had != has) {
      Tuple up;
      values_for(g.up_key, val, up);
      g.branches.apply(up, has ? 1 : -1);
    }
  }
  ++version_;
}

void ViewTreeEngine::enumerate_impl(
    ValMap val, const std::vector<std::string>& head,
    const std::function<void(const Tuple&, std::int64_t)>& emit) const {
  std::int64_t scalar = 1;
  std::vector<std::size_t> open;
  for (std::size_t r : roots_) {
    if (groups_[r].kind == GroupInfo::Kind::AllBound) {
      if (!groups_[r].main.contains(Tuple{})) return;
      scalar = Int64Ring::mul(scalar, groups_[r].main.at(Tuple{}));
    } else {
      open.push_back(r);
    }
  }

  auto finish = [&](std::int64_t acc) {
    Tuple out;
    for (const auto& v : head) out.vals.push_back(val.at(v));
    for (const auto& v : promoted_) acc = Int64Ring::mul(acc, q_.lifts.lift(v, val.at(v)));
    emit(out, acc);
  };

  // Worklist descent over the free fragment: bind one group, then its
  // with-free children join the list. Support gates guarantee every branch
  // taken here reaches an output.
  std::function<void(std::vector<std::size_t>, std::int64_t)> step =
      [&](std::vector<std::size_t> pending, std::int64_t acc) {
        if (pending.empty()) {
          finish(acc);
          return;
        }
        const GroupInfo& g = groups_[pending.front()];
        pending.erase(pending.begin());
        std::vector<std::size_t> next = pending;
        if (g.kind == GroupInfo::Kind::AllFree)
          for (std::size_t c : g.children)
            if (groups_[c].kind != GroupInfo::Kind::AllBound) next.push_back(c);

        std::vector<std::string> unknown;
        std::vector<std::size_t> unknown_pos;
        Tuple known_key;
        std::vector<std::size_t> known_pos;
        for (std::size_t p = 0; p < g.main_key.size(); ++p) {
          const std::string& o = origin_of_.at(g.main_key[p]);
          auto it = val.find(o);
          if (it != val.end()) {
            known_pos.push_back(p);
            known_key.vals.push_back(it->second);
          } else {
            unknown.push_back(o);
            unknown_pos.push_back(p);
          }
        }

        auto visit = [&](const Tuple& row, std::int64_t stored) {
          for (std::size_t i = 0; i < unknown.size(); ++i)
            val[unknown[i]] = row.vals[unknown_pos[i]];
          std::int64_t contrib = g.kind == GroupInfo::Kind::Mixed ? stored : free_factor(g, val);
          step(next, Int64Ring::mul(acc, contrib));
          for (const auto& o : unknown) val.erase(o);
        };

        if (unknown.empty()) {
          if (g.main.contains(known_key)) visit(known_key, g.main.at(known_key));
        } else if (known_pos.empty()) {
          for (auto c = g.main.entries(); c.valid(); c.advance()) visit(c.key(), c.payload());
        } else {
          auto idx = g.main.ensure_index_positions(known_pos);
          for (auto c = g.main.probe(idx, known_key); c.valid(); c.advance())
            visit(c.key(), c.payload());
        }
      };

  step(open, scalar);
}

void ViewTreeEngine::enumerate(
    const std::function<void(const Tuple&, std::int64_t)>& emit) const {
  if (!full_enum_ok_)
    throw UnsupportedAccessPattern(
        "full enumeration needs the input variables bound; use the access form");
  enumerate_impl({}, q_.free_vars(), emit);
}

Relation ViewTreeEngine::output() const {
  Relation out{Schema(q_.free_vars())};
  enumerate([&](const Tuple& t, std::int64_t p) { out.apply(t, p); });
  return out;
}

void ViewTreeEngine::enumerate_at(
    const Tuple& inputs, const std::function<void(const Tuple&, std::int64_t)>& emit) const {
  if (inputs.size() != q_.input_vars.size())
    throw SchemaError("access binding arity mismatch");
  if (!supports_access_) throw UnsupportedAccessPattern(access_detail_);
  ValMap val;
  for (std::size_t i = 0; i < q_.input_vars.size(); ++i) val[q_.input_vars[i]] = inputs.vals[i];
  enumerate_impl(std::move(val), q_.output_vars, emit);
}

Relation ViewTreeEngine::output_at(const Tuple& inputs) const {
  Relation out{Schema(q_.output_vars)};
  enumerate_at(inputs, [&](const Tuple& t, std::int64_t p) { out.apply(t, p); });
  return out;
}

std::string ViewTreeEngine::explain() const {
  std::string s = "view tree for " + q_.head_str();
  if (used_reduct_) s += " [schemas extended by fd closures]";
  if (fracture_split_) s += " [split on input variables]";
  s += "\n";
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    const GroupInfo& g = groups_[i];
    s += "group " + names_str(g.vars);
    s += g.kind == GroupInfo::Kind::AllFree  ? " free"
         : g.kind == GroupInfo::Kind::Mixed ? " mixed"
                                            : " bound";
    if (g.parent == npos) s += " root";
    s += ": ";
    s += g.kind == GroupInfo::Kind::AllFree ? "gate" : "view";
    s += names_str(g.main_key);
    if (g.has_branches) s += " branches" + names_str(g.up_key);
    if (!g.atoms.empty()) {
      s += " atoms:";
      for (std::size_t ai : g.atoms) s += " " + atoms_[ai].rel + names_str(atoms_[ai].stored_vars);
    }
    if (!g.children.empty()) {
      s += " children:";
      for (std::size_t c : g.children) s += " " + names_str(groups_[c].vars);
    }
    s += "\n";
  }
  return s;
}

void ViewTreeEngine::check_invariants() const {
  ViewTreeEngine fresh(q_, db_);
  if (fresh.groups_.size() != groups_.size()) throw EngineError("view tree shape drifted");
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (!same_entries(groups_[i].main, fresh.groups_[i].main))
      throw EngineError("maintained view deviates from rebuild at group " +
                        names_str(groups_[i].vars));
    if (groups_[i].has_branches &&
        !same_entries(groups_[i].branches, fresh.groups_[i].branches))
      throw EngineError("branch counts deviate from rebuild at group " +
                        names_str(groups_[i].vars));
  }
}

}  // namespace ivm
