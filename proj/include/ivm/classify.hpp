#pragma once

#include <set>
#include <string>
#include <vector>

#include "ivm/query.hpp"

namespace ivm {

struct Verdict {
  bool ok = false;
  std::string detail;  // witness for failures, short reason for passes
  explicit operator bool() const { return ok; }
};

/// For every pair of variables the atom sets must be nested or disjoint.
/// Rejects self-joins (the dichotomy assumes distinct relation symbols);
/// use is_tractable_cqap for queries with repeated symbols.
Verdict is_hierarchical(const Query& q);

/// Hierarchical, and whenever atoms(X) strictly contains atoms(Y) with Y
/// free, X is free as well.
Verdict is_q_hierarchical(const Query& q);

/// Fixpoint closure of the variable set under the dependencies.
std::set<std::string> fd_closure(const std::vector<Fd>& fds, const std::vector<std::string>& start);

/// Extends every atom schema and the free head by its FD closure. A bound
/// variable pulled into the head stops being bound. Data payloads are a
/// maintenance concern, not a classification one: the reduct is used for
/// its structure.
Query sigma_reduct(const Query& q);

struct Fracture {
  Query query;                                       // rewritten query
  std::vector<std::vector<std::size_t>> components;  // atom indices per component
  bool changed = false;                              // any input variable split
};

/// Replaces each occurrence of an input variable by a fresh variable,
/// splits into connected components, then re-merges fresh variables of the
/// same origin inside each component. Input variables that stay in one
/// component keep their name, so a query equal to its fracture is returned
/// verbatim.
Fracture fracture(const Query& q);

/// A query with an access pattern is tractable when its fracture is
/// hierarchical, free-dominant, and input-dominant. Structural conditions
/// are computed over atom occurrences, so repeated relation symbols are
/// fine here.
Verdict is_tractable_cqap(const Query& q);

/// Searches all variable orders for a view tree in which every dynamic
/// view's schema covers each sibling's schema and no free variable sits
/// below a bound one. Exhaustive with memoization; query sizes are small.
Verdict check_static_dynamic(const Query& q);

}  // namespace ivm
