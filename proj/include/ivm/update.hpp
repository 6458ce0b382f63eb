#pragma once

#include <cstdint>
#include <string>

#include "ivm/tuple.hpp"
#include "ivm/value.hpp"

namespace ivm {

/// Single-tuple change. Positive payload inserts (with multiplicity),
/// negative deletes; engines treat both as one ring delta.
struct Update {
  std::string rel;
  Tuple tuple;
  std::int64_t payload = 1;

  std::string str() const {
    std::string s = payload < 0 ? "- " : "+ ";
    s += rel + "(";
    for (std::size_t i = 0; i < tuple.vals.size(); ++i) {
      if (i) s += ",";
      s += spell(tuple.vals[i]);
    }
    s += ")";
    std::int64_t m = payload < 0 ? -payload : payload;
    if (m != 1) s += " * " + std::to_string(m);
    return s;
  }
};

}  // namespace ivm
