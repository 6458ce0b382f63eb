#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "ivm/database.hpp"
#include "ivm/update.hpp"

namespace ivm {

/// Skew-aware incremental triangle count over R(A,B), S(B,C), T(C,A).
///
/// Each relation is split into a light and a heavy part by the degree of
/// its first column against a threshold of ceil(N^eps). A delta against one
/// relation decomposes over the parts of the other two: light blocks are
/// short enough to scan, the heavy-light combination is a single lookup in
/// a materialized two-way view, and the heavy-heavy combination scans the
/// distinct heavy keys, of which there are at most N over the threshold.
/// With eps = 1/2 every case is O(sqrt(N)) per update.
///
/// Thresholds drift between rebalances: a key migrates only when its degree
/// leaves [threshold/2, 2*threshold), and everything is repartitioned from
/// scratch when the database size leaves [N0/2, 2*N0] with N0 the size at
/// the last rebalance, so migration cost amortizes against the updates
/// that caused it.
class IvmEpsEngine {
 public:
  explicit IvmEpsEngine(const Database& db, double eps = 0.5);

  void apply(const Update& u);

  /// Maintained payload of the nullary count; no probes.
  std::int64_t count() const { return count_; }

  /// Whether any triangle exists. Valid for update streams that never drive
  /// a multiplicity negative, where the count is zero exactly on absence.
  bool detect() const { return count_ != 0; }

  /// Strict repartition at the current size: light strictly below the new
  /// threshold, heavy at or above it, views rebuilt. Count is unchanged.
  void rebalance();

  double eps() const { return eps_; }
  std::size_t threshold() const { return theta_; }
  std::size_t size() const;

  struct PartSizes {
    std::size_t light = 0, heavy = 0;
    bool operator==(const PartSizes&) const = default;
  };
  std::array<PartSizes, 3> partition_sizes() const;

  std::uint64_t version() const { return version_; }
  std::string explain() const;

  /// Verifies partition disjointness, the degree window, both views against
  /// direct evaluation, and the count against recomputation.
  void check_invariants() const;

 private:
  struct Part {
    Relation light{Schema({"x", "y"})};
    Relation heavy{Schema({"x", "y"})};
  };

  static std::size_t index_of(const std::string& rel);
  std::size_t degree(std::size_t i, const Value& key) const;
  bool is_heavy(std::size_t i, const Value& key) const;
  void place(std::size_t i, bool heavy, const Tuple& t, std::int64_t p);
  void migrate(std::size_t i, const Value& key, bool to_heavy);
  std::int64_t delta_factor(std::size_t i, const Tuple& t) const;
  std::int64_t recompute_count() const;
  Relation view_direct(std::size_t j) const;

  double eps_;
  std::size_t theta_ = 1;
  std::size_t n0_ = 0;
  // parts_[0] = R on A, parts_[1] = S on B, parts_[2] = T on C.
  std::array<Part, 3> parts_;
  // views_[i](y, x) = sum_z next_H(y, z) * prev_L(z, x), where next is the
  // relation after i and prev the one before: V_ST(B,A), V_TR(C,B),
  // V_RS(A,C). views_[i] answers the heavy-light case of deltas against i.
  std::array<Relation, 3> views_;
  std::int64_t count_ = 0;
  std::uint64_t version_ = 0;
};

}  // namespace ivm
