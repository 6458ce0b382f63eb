#pragma once

#include <set>
#include <string>
#include <vector>

#include "ivm/ops.hpp"
#include "ivm/tuple.hpp"

namespace ivm {

/// One relation occurrence in a query body. A repeated relation name is a
/// self-join; occurrences stay distinct (identified by index in the query).
struct Atom {
  std::string rel;
  Schema schema;  // variable names, bound positionally to the relation's columns
  enum class Mode { none, stat, dyn };
  Mode mode = Mode::none;
};

struct Fd {
  std::vector<std::string> lhs, rhs;
};

/// Conjunctive query with group-by aggregates:
///   Q(out...|in...) := sum(bound...) R(A,B), S(B,C), ...
/// Head variables before '|' are outputs, after it inputs; both are free.
/// Queries without an access pattern have no inputs. Optional fd: lines
/// declare functional dependencies over the query's variables.
struct Query {
  std::string name = "Q";
  std::vector<std::string> output_vars;
  std::vector<std::string> input_vars;
  std::vector<std::string> bound_vars;
  std::vector<Atom> atoms;
  std::vector<Fd> fds;
  LiftingSpec lifts;

  std::vector<std::string> free_vars() const {
    std::vector<std::string> out = output_vars;
    out.insert(out.end(), input_vars.begin(), input_vars.end());
    return out;
  }

  std::vector<std::string> all_vars() const {
    std::vector<std::string> out = free_vars();
    out.insert(out.end(), bound_vars.begin(), bound_vars.end());
    return out;
  }

  bool is_free(const std::string& v) const {
    for (const auto& x : output_vars)
      if (x == v) return true;
    for (const auto& x : input_vars)
      if (x == v) return true;
    return false;
  }

  bool is_input(const std::string& v) const {
    for (const auto& x : input_vars)
      if (x == v) return true;
    return false;
  }

  bool has_self_join() const {
    std::set<std::string> seen;
    for (const auto& a : atoms)
      if (!seen.insert(a.rel).second) return true;
    return false;
  }

  std::string head_str() const;
  std::string str() const;
};

/// Atom indices whose schema mentions the variable.
std::vector<std::size_t> atoms_of(const Query& q, const std::string& var);

/// Parses a query file: one head := body line, then optional fd: lines.
/// '#' starts a comment. Validates well-formedness: head and sum variables
/// are disjoint, every variable occurs in some atom, every atom variable is
/// declared either in the head or in sum(...), and no atom repeats a
/// variable.
Query parse_query(const std::string& text);
Query parse_query_file(const std::string& path);

}  // namespace ivm
