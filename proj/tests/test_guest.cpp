#include <catch2/catch_amalgamated.hpp>

#include "rc/guest.hpp"

using namespace rc;
using namespace rc::guest;

TEST_CASE("unary evaluation") {
  const auto& reg = default_registry();
  CHECK(reg.eval1(FuncRef::named("id"), v_int(5)) == v_int(5));
  Value cell = v_record({{"n", v_int(2)}, {"v", v_int(9)}});
  Value dec = reg.eval1(FuncRef::named("dec_n"), cell);
  CHECK(record_field(dec, "n")->i == 1);
  CHECK(record_field(dec, "v")->i == 9);
  CHECK(reg.eval1(FuncRef::named("some"), v_str("r")) == v_some("r"));
  CHECK(reg.eval1(FuncRef::lit(v_int(42)), v_unit()) == v_int(42));
}

TEST_CASE("binary evaluation") {
  const auto& reg = default_registry();
  CHECK(reg.eval2(FuncRef::named("snd_arg"), v_unit(), v_int(7)) == v_int(7));
  Value cell = v_record({{"n", v_int(1)}, {"v", v_int(3)}});
  CHECK(reg.eval2(FuncRef::named("noop"), cell, v_unit()) == cell);
  Value acc = v_record({{"acc", v_str("a")}});
  Value out = reg.eval2(FuncRef::named("concat_resp"), acc, v_str("b"));
  CHECK(record_field(out, "acc")->s == "ab");
}

TEST_CASE("evaluation errors") {
  const auto& reg = default_registry();
  CHECK_THROWS_AS(reg.eval1(FuncRef::named("nope"), v_int(0)), UnknownFunction);
  CHECK_THROWS_AS(reg.eval1(FuncRef::named("id"), v_str("x")), TypeMismatch);
  CHECK_THROWS_AS(reg.eval2(FuncRef::named("keep"), v_int(0), v_str("x")),
                  TypeMismatch);
  CHECK_THROWS_AS(reg.eval2(FuncRef::named("id"), v_int(0), v_int(0)),
                  TypeMismatch);  // arity
}

TEST_CASE("signature checks") {
  const auto& reg = default_registry();
  CHECK(reg.check_signature(FuncRef::named("id"),
                            Signature{false, t_int(), t_unit(), t_int()}));
  CHECK(reg.check_signature(
      FuncRef::named("some"),
      Signature{false, t_str(), t_unit(), t_maybe(t_str())}));
  CHECK_FALSE(reg.check_signature(FuncRef::named("id"),
                                  Signature{false, t_int(), t_unit(), t_bool()}));
  // Result subtyping is allowed.
  CHECK(reg.check_signature(FuncRef::named("id"),
                            Signature{false, t_int(), t_unit(), t_val()}));
  CHECK_THROWS_AS(reg.check_signature(FuncRef::named("nope"),
                                      Signature{false, t_int(), t_unit(), t_int()}),
                  UnknownFunction);
}

TEST_CASE("registered functions are deterministic and type sound") {
  const auto& reg = default_registry();
  std::mt19937_64 rng(20240817);
  for (const auto& [name, entry] : reg.entries()) {
    for (int i = 0; i < 1000; ++i) {
      if (entry.sig.binary) {
        Value cell = random_inhabitant(entry.sig.arg, rng);
        Value pay = random_inhabitant(entry.sig.payload, rng);
        Value a = reg.eval2(FuncRef::named(name), cell, pay);
        Value b = reg.eval2(FuncRef::named(name), cell, pay);
        REQUIRE(a == b);
        REQUIRE(inhabits(a, entry.sig.result));
      } else {
        Value arg = random_inhabitant(entry.sig.arg, rng);
        Value a = reg.eval1(FuncRef::named(name), arg);
        Value b = reg.eval1(FuncRef::named(name), arg);
        REQUIRE(a == b);
        REQUIRE(inhabits(a, entry.sig.result));
      }
    }
  }
}
