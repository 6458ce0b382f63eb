#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ivm/classify.hpp"
#include "ivm/database.hpp"
#include "ivm/query.hpp"
#include "ivm/update.hpp"

namespace ivm {

/// Incremental engine for q-hierarchical queries. Variables with equal atom
/// sets form groups; groups form a forest by strict atom-set inclusion, and
/// every atom's schema covers its attachment group plus all its ancestors.
/// Updates walk one root-to-leaf chain with point probes; enumeration walks
/// the free groups top-down with constant delay, guarded by support counts
/// so that ring cancellations below never strand a dead branch.
///
/// Queries that are not q-hierarchical as written are retried after
/// extending schemas by their functional dependency closures; the extension
/// columns live only in view keys, the stored relations keep their declared
/// columns, and extension values are fetched from witnessing relations at
/// update time (a partial-key probe finding two distinct value groups
/// raises FdViolation). Queries with access patterns are split on input
/// variables first, so each component is maintained independently and
/// probed under one input binding.
class ViewTreeEngine {
 public:
  ViewTreeEngine(Query q, Database db);

  void apply(const Update& u);

  /// Emits every output tuple (free variables in head order) with payload.
  /// Unsupported when the access-pattern split separated an input variable.
  void enumerate(const std::function<void(const Tuple&, std::int64_t)>& emit) const;
  Relation output() const;

  /// Outputs for one input binding (values in head order after '|').
  /// Emitted tuples cover the output variables only.
  void enumerate_at(const Tuple& inputs,
                    const std::function<void(const Tuple&, std::int64_t)>& emit) const;
  Relation output_at(const Tuple& inputs) const;

  bool supports_access() const { return supports_access_; }
  bool supports_full_enumeration() const { return full_enum_ok_; }
  const Query& query() const { return q_; }
  const Database& database() const { return db_; }
  std::uint64_t version() const { return version_; }
  std::string explain() const;

  /// Rebuilds from the current base relations and compares every view.
  void check_invariants() const;

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// One way to derive extension columns: probe a witnessing atom on the
  /// determinant columns, take the (unique) determined projection.
  struct Witness {
    std::size_t atom = 0;
    std::vector<std::size_t> probe_positions;  // witness columns, sorted
    std::vector<std::string> probe_vars;       // origin names, same order
    std::vector<std::size_t> out_positions;
    bool tight = false;  // determinant pins the whole declared key
  };

  /// One derivation step: try every witness until one has matching rows.
  /// A later insert into any witness retries the probe on other updates,
  /// so values missing today do not strand views tomorrow.
  struct FdStep {
    std::vector<std::string> out_vars;  // origin names
    std::vector<Witness> witnesses;     // tight ones first
  };

  struct AtomInfo {
    std::string rel;
    std::vector<std::string> stored_vars;    // tree names of stored columns
    std::vector<std::string> stored_origin;  // declared names of stored columns
    std::size_t group = 0;                   // attachment group
    std::vector<FdStep> steps;
  };

  struct GroupInfo {
    enum class Kind { AllFree, Mixed, AllBound };
    Kind kind = Kind::AllFree;
    std::vector<std::string> vars;  // tree names, rank order
    std::vector<std::string> free_vars;
    std::vector<std::string> bound_vars;
    std::size_t parent = npos;
    std::vector<std::size_t> children;
    std::vector<std::size_t> atoms;
    std::vector<std::string> up_key;    // ancestor vars stored below here
    std::vector<std::string> main_key;  // up_key ++ free_vars
    Relation main;                      // AllFree: support gate; else ring view
    Relation branches;                  // live main entries per up_key value
    bool has_branches = false;
  };

  using ValMap = std::map<std::string, Value>;

  void build_structure();
  void extend_values(const AtomInfo& a, ValMap& val) const;
  bool values_for(const std::vector<std::string>& names, const ValMap& val, Tuple& out) const;
  std::int64_t ring_term(const GroupInfo& g, const ValMap& val) const;
  std::int64_t gate_product(const GroupInfo& g, const ValMap& val) const;
  std::int64_t free_factor(const GroupInfo& g, const ValMap& val) const;
  void enumerate_impl(ValMap val, const std::vector<std::string>& head,
                      const std::function<void(const Tuple&, std::int64_t)>& emit) const;

  Query q_;   // as declared
  Query fq_;  // tree query: schemas extended by fds, inputs split
  bool used_reduct_ = false;
  bool fracture_split_ = false;
  Database db_;
  std::map<std::string, std::size_t> atom_of_rel_;
  std::vector<AtomInfo> atoms_;
  std::vector<GroupInfo> groups_;
  std::vector<std::size_t> roots_;
  std::map<std::string, std::string> origin_of_;  // tree name -> declared name
  std::vector<std::string> promoted_;             // bound vars pulled free by fds
  bool supports_access_ = true;
  std::string access_detail_;
  bool full_enum_ok_ = true;
  std::uint64_t version_ = 0;
};

}  // namespace ivm
