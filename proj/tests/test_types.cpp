#include <catch2/catch_amalgamated.hpp>

#include "rc/types.hpp"

using namespace rc;

TEST_CASE("subtyping basics") {
  CHECK(subtype(t_nat(), t_val()));
  CHECK(subtype(t_int(), t_val()));
  CHECK(subtype(t_pid(), t_union({TypeKind::Pid, TypeKind::Lbl})));
  CHECK_FALSE(subtype(t_pid(), t_val()));
  CHECK_FALSE(subtype(t_lbl(), t_val()));
  CHECK(subtype(t_maybe(t_str()), t_val()));
  CHECK(subtype(t_record({{"n", t_int()}}), t_val()));
  // Transitivity through VAL into a union.
  CHECK(subtype(t_nat(), t_union({TypeKind::Val, TypeKind::Pid})));
}

TEST_CASE("subtyping is a partial order on a finite universe") {
  std::vector<TypeExpr> universe = {
      t_nat(),  t_int(),  t_bool(), t_str(),
      t_unit(), t_val(),  t_pid(),  t_lbl(),
      t_maybe(t_str()),   t_record({{"n", t_int()}, {"v", t_int()}}),
      t_union({TypeKind::Pid, TypeKind::Lbl}),
      t_union({TypeKind::Val, TypeKind::Pid}),
      t_union({TypeKind::Val, TypeKind::Pid, TypeKind::Lbl})};
  for (const auto& a : universe) {
    CHECK(subtype(a, a));  // reflexive
    for (const auto& b : universe) {
      if (subtype(a, b) && subtype(b, a)) CHECK(a == b);  // antisymmetric
      for (const auto& c : universe) {                    // transitive
        if (subtype(a, b) && subtype(b, c)) CHECK(subtype(a, c));
      }
    }
  }
}

TEST_CASE("unions collapse singletons and reject datatypes") {
  CHECK(t_union({TypeKind::Pid}) == t_pid());
  CHECK_THROWS_AS(t_union({TypeKind::Nat}), std::invalid_argument);
}

TEST_CASE("values inhabit their canonical types") {
  CHECK(inhabits(v_int(5), t_int()));
  CHECK(inhabits(v_int(5), t_nat()));
  CHECK_FALSE(inhabits(v_int(-1), t_nat()));
  CHECK(inhabits(v_int(5), t_val()));
  CHECK_FALSE(inhabits(v_pid("p"), t_val()));
  CHECK(inhabits(v_pid("p"), t_union({TypeKind::Pid, TypeKind::Lbl})));
  CHECK(inhabits(v_some("x"), t_maybe(t_str())));
  CHECK(inhabits(v_none(), t_maybe(t_str())));
  Value rec = v_record({{"n", v_int(2)}, {"v", v_int(7)}});
  CHECK(inhabits(rec, t_record({{"n", t_int()}, {"v", t_int()}})));
  CHECK_FALSE(inhabits(rec, t_record({{"n", t_int()}})));
}

TEST_CASE("record helpers keep fields sorted") {
  Value rec = v_record({{"v", v_int(7)}, {"n", v_int(2)}});
  CHECK(rec.fields.front().first == "n");
  Value upd = record_with(rec, "n", v_int(1));
  CHECK(record_field(upd, "n")->i == 1);
  CHECK(record_field(upd, "v")->i == 7);
}
