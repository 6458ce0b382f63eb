#include "ivm/query.hpp"

#include <fstream>
#include <sstream>

#include "ivm/text_util.hpp"

namespace ivm {

std::string Query::head_str() const {
  std::string s = name + "(";
  for (std::size_t i = 0; i < output_vars.size(); ++i) {
    if (i) s += ",";
    s += output_vars[i];
  }
  if (!input_vars.empty()) {
    s += "|";
    for (std::size_t i = 0; i < input_vars.size(); ++i) {
      if (i) s += ",";
      s += input_vars[i];
    }
  }
  return s + ")";
}

std::string Query::str() const {
  std::string s = head_str() + " :=";
  if (!bound_vars.empty()) {
    s += " sum(";
    for (std::size_t i = 0; i < bound_vars.size(); ++i) {
      if (i) s += ",";
      s += bound_vars[i];
    }
    s += ")";
  }
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    s += i ? ", " : " ";
    s += atoms[i].rel + atoms[i].schema.str();
    if (atoms[i].mode == Atom::Mode::stat) s += "@static";
    if (atoms[i].mode == Atom::Mode::dyn) s += "@dynamic";
  }
  return s;
}

std::vector<std::size_t> atoms_of(const Query& q, const std::string& var) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < q.atoms.size(); ++i)
    if (q.atoms[i].schema.contains(var)) out.push_back(i);
  return out;
}

namespace {

void check_well_formed(const Query& q) {
  std::set<std::string> head;
  for (const auto& v : q.output_vars)
    if (!head.insert(v).second) throw ParseError("duplicate free variable " + v);
  for (const auto& v : q.input_vars)
    if (!head.insert(v).second) throw ParseError("duplicate free variable " + v);
  std::set<std::string> bound;
  for (const auto& v : q.bound_vars) {
    if (head.count(v)) throw ParseError("variable " + v + " is both free and bound");
    if (!bound.insert(v).second) throw ParseError("duplicate bound variable " + v);
  }
  std::set<std::string> declared = head;
  declared.insert(bound.begin(), bound.end());
  for (const auto& a : q.atoms) {
    std::set<std::string> in_atom;
    for (const auto& v : a.schema.vars) {
      if (!declared.count(v))
        throw ParseError("variable " + v + " of atom " + a.rel +
                         " is neither free nor listed in sum(...)");
      if (!in_atom.insert(v).second)
        throw ParseError("variable " + v + " repeated inside atom " + a.rel);
    }
  }
  for (const auto& v : declared)
    if (atoms_of(q, v).empty()) throw ParseError("variable " + v + " occurs in no atom");
  for (const auto& fd : q.fds) {
    for (const auto& v : fd.lhs)
      if (!declared.count(v)) throw ParseError("fd uses unknown variable " + v);
    for (const auto& v : fd.rhs)
      if (!declared.count(v)) throw ParseError("fd uses unknown variable " + v);
    if (fd.lhs.empty() || fd.rhs.empty()) throw ParseError("fd needs variables on both sides");
  }
  if (q.atoms.empty()) throw ParseError("query has no atoms");
}

Atom parse_atom(std::string text) {
  Atom a;
  text = trim(text);
  auto at = text.find('@');
  if (at != std::string::npos) {
    std::string mode = trim(text.substr(at + 1));
    if (mode == "static")
      a.mode = Atom::Mode::stat;
    else if (mode == "dynamic")
      a.mode = Atom::Mode::dyn;
    else
      throw ParseError("unknown atom annotation @" + mode);
    text = trim(text.substr(0, at));
  }
  auto [name, parts] = parse_call(text, "atom: ");
  a.rel = name;
  for (const auto& p : parts)
    if (p.empty()) throw ParseError("empty variable in atom " + name);
  a.schema = Schema(parts);
  return a;
}

// Splits the body's atom list on commas not nested in parentheses.
std::vector<std::string> split_atoms(const std::string& body) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : body) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

}  // namespace

Query parse_query(const std::string& text) {
  Query q;
  std::istringstream in(text);
  std::string line;
  bool have_query = false;
  while (std::getline(in, line)) {
    std::string body = strip_comment(line);
    if (body.empty()) continue;
    if (body.rfind("fd:", 0) == 0) {
      if (!have_query) throw ParseError("fd: line before the query");
      auto arrow = body.find("->");
      if (arrow == std::string::npos) throw ParseError("fd: expected 'fd: X,Y -> Z'");
      Fd fd;
      fd.lhs = split(trim(body.substr(3, arrow - 3)), ',');
      fd.rhs = split(trim(body.substr(arrow + 2)), ',');
      for (auto& v : fd.lhs)
        if (v.empty()) throw ParseError("fd: empty variable");
      for (auto& v : fd.rhs)
        if (v.empty()) throw ParseError("fd: empty variable");
      q.fds.push_back(std::move(fd));
      continue;
    }
    if (have_query) throw ParseError("unexpected line after query: " + body);
    auto assign = body.find(":=");
    if (assign == std::string::npos) throw ParseError("expected 'head := body'");
    std::string head = trim(body.substr(0, assign));
    std::string rest = trim(body.substr(assign + 2));

    auto open = head.find('(');
    if (open == std::string::npos || head.back() != ')')
      throw ParseError("bad query head '" + head + "'");
    q.name = trim(head.substr(0, open));
    std::string inner = head.substr(open + 1, head.size() - open - 2);
    auto bar = inner.find('|');
    std::string out_part = bar == std::string::npos ? inner : inner.substr(0, bar);
    std::string in_part = bar == std::string::npos ? "" : inner.substr(bar + 1);
    if (!trim(out_part).empty()) q.output_vars = split(out_part, ',');
    if (!trim(in_part).empty()) q.input_vars = split(in_part, ',');

    if (rest.rfind("sum", 0) == 0) {
      auto sopen = rest.find('(');
      auto sclose = rest.find(')');
      if (sopen == std::string::npos || sclose == std::string::npos || sclose < sopen)
        throw ParseError("bad sum(...) clause");
      std::string sum_inner = trim(rest.substr(sopen + 1, sclose - sopen - 1));
      if (!sum_inner.empty()) q.bound_vars = split(sum_inner, ',');
      rest = trim(rest.substr(sclose + 1));
    }
    for (const auto& part : split_atoms(rest)) q.atoms.push_back(parse_atom(part));
    have_query = true;
  }
  if (!have_query) throw ParseError("no query found");
  check_well_formed(q);
  return q;
}

Query parse_query_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open query file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_query(buf.str());
}

}  // namespace ivm
