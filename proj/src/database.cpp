#include "ivm/database.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "ivm/text_util.hpp"

namespace ivm {

Database load_database(std::istream& in) {
  Database db;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = strip_comment(line);
    if (body.empty()) continue;
    auto where = [&] { return "line " + std::to_string(lineno) + ": "; };
    if (body.rfind("schema ", 0) == 0) {
      auto [name, parts] = parse_call(body.substr(7), where());
      if (db.has(name)) throw ParseError(where() + "duplicate schema for " + name);
      for (const auto& v : parts)
        if (v.empty()) throw ParseError(where() + "empty variable name");
      db.declare(name, Schema(parts));
      continue;
    }
    auto arrow = body.find("->");
    if (arrow == std::string::npos)
      throw ParseError(where() + "expected 'schema ...' or 'name(...) -> payload'");
    auto [name, parts] = parse_call(trim(body.substr(0, arrow)), where());
    if (!db.has(name)) throw ParseError(where() + "relation " + name + " not declared");
    Relation& rel = db.get(name);
    if (parts.size() != rel.schema().arity())
      throw ParseError(where() + "arity mismatch for " + name);
    std::string payload_text = trim(body.substr(arrow + 2));
    std::int64_t payload = 0;
    auto [ptr, ec] =
        std::from_chars(payload_text.data(), payload_text.data() + payload_text.size(), payload);
    if (ec != std::errc() || ptr != payload_text.data() + payload_text.size())
      throw ParseError(where() + "bad payload '" + payload_text + "'");
    Tuple t;
    t.vals.reserve(parts.size());
    for (const auto& p : parts) {
      if (p.empty()) throw ParseError(where() + "empty value");
      t.vals.push_back(intern(p));
    }
    rel.apply(t, payload);
  }
  return db;
}

Database load_database_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open database file " + path);
  return load_database(in);
}

void save_database(const Database& db, std::ostream& out) {
  for (const auto& [name, rel] : db.rels) {
    out << "schema " << name << rel.schema().str() << "\n";
  }
  for (const auto& [name, rel] : db.rels) {
    for (auto c = rel.entries(); c.valid(); c.advance())
      out << name << c.key().str() << " -> " << c.payload() << "\n";
  }
}

}  // namespace ivm
