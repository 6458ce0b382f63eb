#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "ivm/error.hpp"
#include "ivm/value.hpp"

namespace ivm {

/// Ordered list of variable names naming a relation's columns.
struct Schema {
  std::vector<std::string> vars;

  Schema() = default;
  Schema(std::initializer_list<std::string> v) : vars(v) {}
  explicit Schema(std::vector<std::string> v) : vars(std::move(v)) {}

  std::size_t arity() const { return vars.size(); }
  bool operator==(const Schema&) const = default;

  int position_of(std::string_view var) const {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == var) return static_cast<int>(i);
    return -1;
  }

  bool contains(std::string_view var) const { return position_of(var) >= 0; }

  std::size_t require(std::string_view var) const {
    int p = position_of(var);
    if (p < 0) throw SchemaError("variable " + std::string(var) + " not in schema " + str());
    return static_cast<std::size_t>(p);
  }

  std::string str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (i) s += ",";
      s += vars[i];
    }
    return s + ")";
  }
};

inline std::vector<std::string> schema_intersect(const Schema& a, const Schema& b) {
  std::vector<std::string> out;
  for (const auto& v : a.vars)
    if (b.contains(v)) out.push_back(v);
  return out;
}

inline std::vector<std::string> schema_minus(const Schema& a, const Schema& b) {
  std::vector<std::string> out;
  for (const auto& v : a.vars)
    if (!b.contains(v)) out.push_back(v);
  return out;
}

struct Tuple {
  std::vector<Value> vals;

  Tuple() = default;
  explicit Tuple(std::vector<Value> v) : vals(std::move(v)) {}
  Tuple(std::initializer_list<Value> v) : vals(v) {}

  std::size_t size() const { return vals.size(); }
  bool operator==(const Tuple&) const = default;

  /// Human-readable form; also the canonical sort key in fingerprints.
  std::string str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i) s += ",";
      s += spell(vals[i]);
    }
    return s + ")";
  }
};

struct TupleHash {
  std::size_t operator()(const Tuple& t) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (Value v : t.vals) {
      std::size_t x = static_cast<std::size_t>(static_cast<std::uint32_t>(v));
      h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

inline Tuple project(const Tuple& t, const std::vector<std::size_t>& positions) {
  Tuple out;
  out.vals.reserve(positions.size());
  for (std::size_t p : positions) out.vals.push_back(t.vals[p]);
  return out;
}

/// Convenience for tests and loaders: tuple from spellings.
inline Tuple tuple_of(std::initializer_list<std::string_view> parts) {
  Tuple t;
  t.vals.reserve(parts.size());
  for (auto p : parts) t.vals.push_back(intern(p));
  return t;
}

}  // namespace ivm
