#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "ivm/database.hpp"
#include "ivm/ops.hpp"
#include "ivm/probes.hpp"
#include "support/naive_eval.hpp"

using namespace ivm;

namespace {

Tuple tup(std::initializer_list<const char*> parts) {
  Tuple t;
  for (const char* p : parts) t.vals.push_back(intern(p));
  return t;
}

Database cycle_db() {
  return load_database_file(std::string(TEST_DATA_DIR) + "/cycle.db");
}

}  // namespace

TEST_SUITE("ring") {
  TEST_CASE("int64 ring arithmetic is checked") {
    CHECK(Int64Ring::add(2, 3) == 5);
    CHECK(Int64Ring::mul(-4, 5) == -20);
    CHECK(Int64Ring::neg(7) == -7);
    CHECK(Int64Ring::is_zero(0));
    auto big = std::numeric_limits<std::int64_t>::max();
    CHECK_THROWS_AS(Int64Ring::add(big, 1), OverflowError);
    CHECK_THROWS_AS(Int64Ring::mul(big, 2), OverflowError);
    CHECK_THROWS_AS(Int64Ring::neg(std::numeric_limits<std::int64_t>::min()), OverflowError);
  }

  TEST_CASE("relations work over other rings") {
    BasicRelation<testing::Mod7Ring> r{Schema({"A"})};
    r.apply(tup({"x"}), 3);
    r.apply(tup({"x"}), 4);  // 3 + 4 = 0 mod 7, entry evicts
    CHECK(r.empty());
    r.apply(tup({"x"}), 6);
    r.apply(tup({"x"}), 6);
    CHECK(r.at(tup({"x"})) == 5);
  }
}

TEST_SUITE("relation") {
  TEST_CASE("apply accumulates and evicts zeros") {
    Relation r{Schema({"A", "B"})};
    r.apply(tup({"a", "b"}), 2);
    r.apply(tup({"a", "c"}), 1);
    CHECK(r.size() == 2);
    r.apply(tup({"a", "b"}), -1);
    CHECK(r.at(tup({"a", "b"})) == 1);
    r.apply(tup({"a", "b"}), -1);
    CHECK(r.size() == 1);
    CHECK(!r.contains(tup({"a", "b"})));
    r.apply(tup({"x", "y"}), 0);
    CHECK(r.size() == 1);
    CHECK_THROWS_AS(r.apply(tup({"a"}), 1), SchemaError);
  }

  TEST_CASE("overflow leaves the relation untouched") {
    Relation r{Schema({"A"})};
    auto big = std::numeric_limits<std::int64_t>::max();
    r.apply(tup({"a"}), big);
    CHECK_THROWS_AS(r.apply(tup({"a"}), 1), OverflowError);
    CHECK(r.at(tup({"a"})) == big);
    CHECK(r.size() == 1);
    r.check_consistency();
  }

  TEST_CASE("point and bucket probes count") {
    Relation r{Schema({"A", "B"})};
    r.apply(tup({"a", "b"}), 1);
    r.apply(tup({"a", "c"}), 1);
    r.apply(tup({"d", "b"}), 1);
    auto idx = r.ensure_index({"A"});
    probes::reset();
    CHECK(r.at(tup({"a", "b"})) == 1);
    CHECK(r.contains(tup({"d", "b"})));
    auto before = probes::count();
    CHECK(before >= 2);
    std::size_t seen = 0;
    for (auto c = r.probe(idx, tup({"a"})); c.valid(); c.advance()) ++seen;
    CHECK(seen == 2);
    CHECK(probes::count() > before);
  }

  TEST_CASE("buckets track deletes") {
    Relation r{Schema({"A", "B"})};
    auto idx = r.ensure_index({"A"});
    r.apply(tup({"a", "b"}), 1);
    r.apply(tup({"a", "c"}), 2);
    CHECK(r.bucket_size(idx, tup({"a"})) == 2);
    r.apply(tup({"a", "b"}), -1);
    CHECK(r.bucket_size(idx, tup({"a"})) == 1);
    CHECK(r.distinct_keys(idx) == 1);
    r.check_consistency();
  }
}

TEST_SUITE("ops") {
  TEST_CASE("triangle join on the worked example") {
    Database db = cycle_db();
    Relation rs = join(db.get("R"), db.get("S"));
    Relation rst = join(rs, db.get("T"));
    CHECK(rst.size() == 3);
    CHECK(rst.at(tup({"a1", "b1", "c1"})) == 4);
    CHECK(rst.at(tup({"a1", "b1", "c2"})) == 6);
    CHECK(rst.at(tup({"a2", "b1", "c2"})) == 9);
    Relation total = marginalize_all(rst, {"A", "B", "C"});
    CHECK(total.at(Tuple{}) == 19);
  }

  TEST_CASE("hop view on the worked example") {
    Database db = cycle_db();
    Relation st = join(db.get("S"), db.get("T"));
    Relation v = marginalize(st, "C");
    CHECK(v.size() == 2);
    CHECK(v.at(tup({"b1", "a1"})) == 5);
    CHECK(v.at(tup({"b1", "a2"})) == 3);
  }

  TEST_CASE("join over empty input is empty") {
    Relation r{Schema({"A", "B"})};
    Relation s{Schema({"B", "C"})};
    r.apply(tup({"a", "b"}), 2);
    CHECK(join(r, s).empty());
  }

  TEST_CASE("numeric lift weighs the folded column") {
    Relation r{Schema({"A", "B"})};
    r.apply(tup({"a", "1"}), 2);
    r.apply(tup({"a", "2"}), 3);
    Relation m = marginalize<Int64Ring>(r, "B", LiftingSpec::numeric());
    CHECK(m.at(tup({"a"})) == 8);
  }

  TEST_CASE("union matches columns by name") {
    Relation a{Schema({"A", "B"})};
    Relation b{Schema({"B", "A"})};
    a.apply(tup({"x", "y"}), 1);
    b.apply(tup({"y", "x"}), 2);
    b.apply(tup({"q", "p"}), 5);
    Relation u = union_rel(a, b);
    CHECK(u.at(tup({"x", "y"})) == 3);
    CHECK(u.at(tup({"p", "q"})) == 5);
    CHECK_THROWS_AS(union_rel(a, Relation{Schema({"A", "C"})}), SchemaError);
  }
}

TEST_SUITE("database") {
  TEST_CASE("file format round trip") {
    Database db = cycle_db();
    CHECK(db.get("R").at(tup({"a2", "b1"})) == 3);
    CHECK(db.total_size() == 7);
    std::ostringstream out;
    save_database(db, out);
    std::istringstream in(out.str());
    Database back = load_database(in);
    for (const auto& name : {"R", "S", "T"})
      CHECK(same_entries(db.get(name), back.get(name)));
  }

  TEST_CASE("loader rejects malformed input") {
    std::istringstream bad1("R(a,b) -> 1\n");  // no schema line
    CHECK_THROWS_AS(load_database(bad1), ParseError);
    std::istringstream bad2("schema R(A,B)\nR(a) -> 1\n");
    CHECK_THROWS_AS(load_database(bad2), Error);
  }
}
