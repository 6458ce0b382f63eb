#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "ivm/relation.hpp"

namespace ivm {

/// Named relations. std::map keeps iteration deterministic.
struct Database {
  std::map<std::string, Relation> rels;

  bool has(const std::string& name) const { return rels.count(name) != 0; }

  Relation& get(const std::string& name) {
    auto it = rels.find(name);
    if (it == rels.end()) throw Error("unknown relation " + name);
    return it->second;
  }
  const Relation& get(const std::string& name) const {
    auto it = rels.find(name);
    if (it == rels.end()) throw Error("unknown relation " + name);
    return it->second;
  }

  Relation& declare(const std::string& name, Schema schema) {
    auto [it, inserted] = rels.try_emplace(name, Relation(std::move(schema)));
    return it->second;
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& [name, rel] : rels) n += rel.size();
    return n;
  }
};

/// Text format, one declaration or entry per line:
///   # comment
///   schema R(A,B)
///   R(a1,b1) -> 2
/// Entries accumulate (repeated tuples sum payloads). Lines must reference
/// a declared schema with matching arity.
Database load_database(std::istream& in);
Database load_database_file(const std::string& path);
void save_database(const Database& db, std::ostream& out);

}  // namespace ivm
