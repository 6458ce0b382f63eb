#include "doctest.h"
#include "ivm/error.hpp"
#include "ivm/query.hpp"

using namespace ivm;

TEST_SUITE("query_parse") {
  TEST_CASE("aggregate query with bound variables") {
    Query q = parse_query("Q(A,B) := sum(C) R(A,B), S(B,C)");
    CHECK(q.name == "Q");
    CHECK(q.output_vars == std::vector<std::string>{"A", "B"});
    CHECK(q.bound_vars == std::vector<std::string>{"C"});
    CHECK(q.atoms.size() == 2);
    CHECK(q.atoms[1].rel == "S");
    CHECK(q.atoms[1].schema.vars == std::vector<std::string>{"B", "C"});
    CHECK(q.input_vars.empty());
  }

  TEST_CASE("access pattern splits the head") {
    Query q = parse_query("Q(A|B) := S(A,B), T(B)");
    CHECK(q.output_vars == std::vector<std::string>{"A"});
    CHECK(q.input_vars == std::vector<std::string>{"B"});
    CHECK(q.free_vars() == std::vector<std::string>{"A", "B"});
    CHECK(q.is_input("B"));

    Query all_in = parse_query("Q(|A,B,C) := E(A,B), E(B,C), E(C,A)");
    CHECK(all_in.output_vars.empty());
    CHECK(all_in.input_vars.size() == 3);
    CHECK(all_in.has_self_join());
  }

  TEST_CASE("functional dependencies and annotations") {
    Query q = parse_query(
        "Q(Z,Y,X,W) := R(X,W)@dynamic, S(X,Y), T(Y,Z)@static\n"
        "fd: X -> Y\n"
        "fd: X,Y -> Z\n");
    REQUIRE(q.fds.size() == 2);
    CHECK(q.fds[0].lhs == std::vector<std::string>{"X"});
    CHECK(q.fds[0].rhs == std::vector<std::string>{"Y"});
    CHECK(q.fds[1].lhs == std::vector<std::string>{"X", "Y"});
    CHECK(q.atoms[0].mode == Atom::Mode::dyn);
    CHECK(q.atoms[1].mode == Atom::Mode::none);
    CHECK(q.atoms[2].mode == Atom::Mode::stat);
  }

  TEST_CASE("nullary head and comments") {
    Query q = parse_query(
        "# triangle count\n"
        "Q() := sum(A,B,C) R(A,B), S(B,C), T(C,A)  # cyclic join\n");
    CHECK(q.free_vars().empty());
    CHECK(q.bound_vars.size() == 3);
    CHECK(q.atoms.size() == 3);
  }

  TEST_CASE("text round trip") {
    for (const char* text : {
             "Q(A,B) := sum(C) R(A,B), S(B,C)",
             "Q() := sum(A,B,C) R(A,B), S(B,C), T(C,A)",
             "Q(A|B) := S(A,B), T(B)",
         }) {
      Query q = parse_query(text);
      CHECK(parse_query(q.str()).str() == q.str());
    }
  }

  TEST_CASE("malformed queries are rejected") {
    CHECK_THROWS_AS(parse_query("Q(A) R(A)"), ParseError);                      // no :=
    CHECK_THROWS_AS(parse_query("Q(A) := R(A,B)"), ParseError);                 // B undeclared
    CHECK_THROWS_AS(parse_query("Q(A,B) := sum(B) R(A,B)"), ParseError);        // head and sum
    CHECK_THROWS_AS(parse_query("Q(A) := sum(B) R(A)"), ParseError);            // B unused
    CHECK_THROWS_AS(parse_query("Q(A) := R(A,A)"), ParseError);                 // repeated var
    CHECK_THROWS_AS(parse_query("Q(A) := sum(B) R(A,B)@maybe"), ParseError);    // bad mode
    CHECK_THROWS_AS(parse_query("fd: A -> B\nQ(A) := R(A)"), ParseError);       // fd first
    CHECK_THROWS_AS(parse_query("Q(A) := R(A)\nfd: A -> B"), ParseError);       // fd var unknown
  }
}
