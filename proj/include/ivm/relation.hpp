#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ivm/error.hpp"
#include "ivm/probes.hpp"
#include "ivm/ring.hpp"
#include "ivm/tuple.hpp"

namespace ivm {

/// Map from tuples to ring payloads. An entry whose payload becomes the
/// ring zero is evicted immediately, so size() is always the live count.
/// Iteration follows insertion order (re-inserted tuples move to the back),
/// which keeps enumeration deterministic across identical operation
/// sequences. Secondary hash indices over column subsets are maintained
/// incrementally by every mutation; their buckets also iterate in insertion
/// order. Single writer; concurrent readers are fine on a frozen relation.
template <RingSpec R>
class BasicRelation {
 public:
  using ring = R;
  using payload_t = typename R::value_type;
  using IndexId = std::size_t;

  static constexpr std::uint32_t npos = 0xffffffffu;

  BasicRelation() = default;
  explicit BasicRelation(Schema s) : schema_(std::move(s)) {}

  const Schema& schema() const { return schema_; }
  std::size_t size() const { return live_; }
  bool empty() const { return live_ == 0; }

  /// Stored payload, or ring zero when absent. One probe.
  payload_t at(const Tuple& t) const {
    probes::bump();
    auto it = pos_.find(t);
    return it == pos_.end() ? R::zero() : slots_[it->second].payload;
  }

  bool contains(const Tuple& t) const {
    probes::bump();
    return pos_.find(t) != pos_.end();
  }

  /// Applies a single-tuple delta: insert if absent, accumulate if present,
  /// evict when the payload reaches zero. The only mutation primitive.
  void apply(const Tuple& t, payload_t delta) {
    if (t.size() != schema_.arity())
      throw SchemaError("tuple arity " + std::to_string(t.size()) + " does not match schema " +
                        schema_.str());
    if (R::is_zero(delta)) return;
    probes::bump();
    auto it = pos_.find(t);
    if (it == pos_.end()) {
      std::uint32_t s = alloc_slot();
      Slot& slot = slots_[s];
      slot.key = t;
      slot.payload = delta;
      slot.live = true;
      slot.prev = tail_;
      slot.next = npos;
      if (tail_ != npos)
        slots_[tail_].next = s;
      else
        head_ = s;
      tail_ = s;
      pos_.emplace(t, s);
      for (auto& idx : indices_) index_insert(idx, s);
      ++live_;
      return;
    }
    std::uint32_t s = it->second;
    payload_t next = R::add(slots_[s].payload, delta);  // may throw before any mutation
    if (!R::is_zero(next)) {
      slots_[s].payload = next;
      return;
    }
    for (auto& idx : indices_) index_erase(idx, s);
    Slot& slot = slots_[s];
    if (slot.prev != npos)
      slots_[slot.prev].next = slot.next;
    else
      head_ = slot.next;
    if (slot.next != npos)
      slots_[slot.next].prev = slot.prev;
    else
      tail_ = slot.prev;
    slot.live = false;
    pos_.erase(it);
    free_.push_back(s);
    --live_;
  }

  void clear() {
    slots_.clear();
    free_.clear();
    pos_.clear();
    head_ = tail_ = npos;
    live_ = 0;
    for (auto& idx : indices_) {
      idx.buckets.clear();
      idx.links.clear();
    }
  }

  /// Registers (or finds) an index keyed by the given variables. Key
  /// positions are normalized to schema order, so probe keys must list
  /// values in schema order of the key variables.
  IndexId ensure_index(const std::vector<std::string>& key_vars) const {
    std::vector<std::size_t> ps;
    ps.reserve(key_vars.size());
    for (const auto& v : key_vars) ps.push_back(schema_.require(v));
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    return ensure_index_positions(std::move(ps));
  }

  IndexId ensure_index_positions(std::vector<std::size_t> ps) const {
    for (std::size_t i = 0; i < indices_.size(); ++i)
      if (indices_[i].key_pos == ps) return i;
    indices_.emplace_back();
    IndexImpl& idx = indices_.back();
    idx.key_pos = std::move(ps);
    idx.links.resize(slots_.size());
    for (std::uint32_t s = head_; s != npos; s = slots_[s].next) {
      probes::bump();
      index_insert(idx, s);
    }
    return indices_.size() - 1;
  }

  const std::vector<std::size_t>& index_key_positions(IndexId id) const {
    return indices_.at(id).key_pos;
  }

  /// Number of live tuples sharing this key (the key's degree). One probe.
  std::size_t bucket_size(IndexId id, const Tuple& key) const {
    probes::bump();
    const IndexImpl& idx = indices_.at(id);
    auto it = idx.buckets.find(key);
    return it == idx.buckets.end() ? 0 : it->second.count;
  }

  /// Number of distinct keys in the index.
  std::size_t distinct_keys(IndexId id) const { return indices_.at(id).buckets.size(); }

  /// Forward cursor over entries; counts one probe per positioning/advance.
  class Cursor {
   public:
    bool valid() const { return slot_ != npos; }
    const Tuple& key() const { return rel_->slots_[slot_].key; }
    payload_t payload() const { return rel_->slots_[slot_].payload; }
    void advance() {
      probes::bump();
      slot_ = index_ == npos ? rel_->slots_[slot_].next : rel_->indices_[index_].links[slot_].next;
    }

   private:
    friend class BasicRelation;
    Cursor(const BasicRelation* rel, std::size_t index, std::uint32_t slot)
        : rel_(rel), index_(static_cast<std::uint32_t>(index)), slot_(slot) {}
    const BasicRelation* rel_;
    std::uint32_t index_;
    std::uint32_t slot_;
  };

  /// All live entries, insertion order.
  Cursor entries() const {
    probes::bump();
    return Cursor(this, npos, head_);
  }

  /// Entries in the index bucket for this key, bucket insertion order.
  Cursor probe(IndexId id, const Tuple& key) const {
    probes::bump();
    const IndexImpl& idx = indices_.at(id);
    auto it = idx.buckets.find(key);
    return Cursor(this, id, it == idx.buckets.end() ? npos : it->second.head);
  }

  /// Iterates the distinct keys of an index (bucket map order: use only
  /// where order does not matter, e.g. repartitioning or invariant checks).
  template <class F>
  void for_each_index_key(IndexId id, F&& f) const {
    for (const auto& [key, bucket] : indices_.at(id).buckets) f(key, bucket.count);
  }

  /// Test support: verifies map/list/index agreement and the no-zero
  /// invariant. Throws Error on any mismatch. O(size * indices).
  void check_consistency() const {
    std::size_t walked = 0;
    for (std::uint32_t s = head_; s != npos; s = slots_[s].next) {
      const Slot& slot = slots_[s];
      if (!slot.live) throw Error("consistency: dead slot in live list");
      if (R::is_zero(slot.payload)) throw Error("consistency: zero payload stored");
      auto it = pos_.find(slot.key);
      if (it == pos_.end() || it->second != s) throw Error("consistency: map does not match list");
      ++walked;
    }
    if (walked != live_ || pos_.size() != live_)
      throw Error("consistency: live count mismatch");
    for (const auto& idx : indices_) {
      std::size_t total = 0;
      for (const auto& [key, bucket] : idx.buckets) {
        std::size_t n = 0;
        for (std::uint32_t s = bucket.head; s != npos; s = idx.links[s].next) {
          if (!slots_[s].live) throw Error("consistency: dead slot in bucket");
          if (!(project(slots_[s].key, idx.key_pos) == key))
            throw Error("consistency: slot in wrong bucket");
          ++n;
        }
        if (n != bucket.count) throw Error("consistency: bucket count mismatch");
        total += n;
      }
      if (total != live_) throw Error("consistency: index size mismatch");
    }
  }

 private:
  struct Slot {
    Tuple key;
    payload_t payload{};
    std::uint32_t prev = npos, next = npos;
    bool live = false;
  };
  struct Link {
    std::uint32_t prev = npos, next = npos;
  };
  struct Bucket {
    std::uint32_t head = npos, tail = npos;
    std::size_t count = 0;
  };
  struct IndexImpl {
    std::vector<std::size_t> key_pos;
    std::unordered_map<Tuple, Bucket, TupleHash> buckets;
    std::vector<Link> links;  // parallel to slots_
  };

  std::uint32_t alloc_slot() {
    if (!free_.empty()) {
      std::uint32_t s = free_.back();
      free_.pop_back();
      return s;
    }
    slots_.emplace_back();
    for (auto& idx : indices_) idx.links.emplace_back();
    return static_cast<std::uint32_t>(slots_.size() - 1);
  }

  void index_insert(IndexImpl& idx, std::uint32_t s) const {
    probes::bump();
    Tuple key = project(slots_[s].key, idx.key_pos);
    Bucket& b = idx.buckets[key];
    Link& link = idx.links[s];
    link.prev = b.tail;
    link.next = npos;
    if (b.tail != npos)
      idx.links[b.tail].next = s;
    else
      b.head = s;
    b.tail = s;
    ++b.count;
  }

  void index_erase(IndexImpl& idx, std::uint32_t s) const {
    probes::bump();
    Tuple key = project(slots_[s].key, idx.key_pos);
    auto it = idx.buckets.find(key);
    if (it == idx.buckets.end()) throw Error("index erase: bucket missing");
    Bucket& b = it->second;
    Link& link = idx.links[s];
    if (link.prev != npos)
      idx.links[link.prev].next = link.next;
    else
      b.head = link.next;
    if (link.next != npos)
      idx.links[link.next].prev = link.prev;
    else
      b.tail = link.prev;
    --b.count;
    if (b.count == 0) idx.buckets.erase(it);
  }

  Schema schema_;
  std::vector<Slot> slots_;
  std::vector<std::uint32_t> free_;
  std::unordered_map<Tuple, std::uint32_t, TupleHash> pos_;
  std::uint32_t head_ = npos, tail_ = npos;
  std::size_t live_ = 0;
  // Index registration is memoizing and logically const.
  mutable std::vector<IndexImpl> indices_;
};

using Relation = BasicRelation<Int64Ring>;

/// Exact map equality: same schema variables, same entries and payloads.
template <RingSpec R>
bool same_entries(const BasicRelation<R>& a, const BasicRelation<R>& b) {
  if (a.schema() != b.schema() || a.size() != b.size()) return false;
  for (auto c = a.entries(); c.valid(); c.advance())
    if (b.at(c.key()) != c.payload()) return false;
  return true;
}

}  // namespace ivm
