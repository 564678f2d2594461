#include <catch2/catch_amalgamated.hpp>

#include "rc/ast.hpp"
#include "rc/parser.hpp"
#include "rc/pretty.hpp"

using namespace rc;

namespace {

Program parse(const std::string& src) { return parse_choreography(src); }

}  // namespace

TEST_CASE("process_names on basic terms") {
  CHECK(process_names(Chor{}).empty());

  Program p = parse(
      "frame k: Int from s to r in {\n"
      "  send(k, s.id);\n"
      "  recv(k, r.keep);\n"
      "}\n");
  const Item& send = p.term.items[1];
  CHECK(process_names(send) == std::set<std::string>{"s"});

  Program q = parse(
      "frame k: Int from p to q in {\n"
      "  send(k, p.id);\n"
      "  if p.sent(k) { q.inc; } else { q.dec; p.inc; }\n"
      "}\n");
  const Item& cond = q.term.items[2];
  CHECK(process_names(cond) == std::set<std::string>{"p", "q"});
}

TEST_CASE("substitution on the empty body is the identity") {
  NameSupply supply({});
  Chor out = substitute(Chor{}, {}, Bindings{}, supply);
  CHECK(out.items.empty());
}

TEST_CASE("substitution renames formals and rewrites recursive calls") {
  Program p = parse(
      "def sendWhile(frame k: Int from s to r, s: Int, f: Int -> Int,"
      "              c: Int -> Int, g: Int -> Bool) {\n"
      "  send(k, s.f);\n"
      "  if !s.sent(k) {\n"
      "    if s.g { s.c; sendWhile(k, s, f, c, g); }\n"
      "  }\n"
      "}\n"
      "0\n");
  const ProcDef& def = p.defs.at("sendWhile");
  Bindings args;
  args.frames["k"] = "k1";
  args.procs["s"] = "a";
  args.funcs["f"] = FuncRef::named("inc");
  args.funcs["c"] = FuncRef::named("dec");
  args.funcs["g"] = FuncRef::named("always");
  std::set<std::string> used = {"k1", "a"};
  NameSupply supply(used);
  Chor body = substitute(def.body, def.params, args, supply);

  const auto& send = std::get<SendStmt>(body.items[0]);
  CHECK(send.frame == "k1");
  CHECK(send.subject.proc == "a");
  CHECK(send.subject.fn == FuncRef::named("inc"));

  const auto& outer = std::get<CondStmt>(body.items[1]);
  const auto& inner = std::get<CondStmt>(outer.else_branch->items[0]);
  const auto& call =
      std::get<CallStmt>(inner.then_branch->items[1]);
  CHECK(call.args.frames.at("k") == "k1");
  CHECK(call.args.procs.at("s") == "a");
  CHECK(call.args.funcs.at("g") == FuncRef::named("always"));
}

TEST_CASE("substitution freshens bound names away from the bindings' range") {
  Program p = parse(
      "def mk(s: Int, r: Int, f: Int -> Int) {\n"
      "  frame kp: Int from s to r in {\n"
      "    send(kp, s.f);\n"
      "    recv(kp, r.keep);\n"
      "  }\n"
      "}\n"
      "0\n");
  const ProcDef& def = p.defs.at("mk");
  Bindings args;
  args.procs["s"] = "a";
  args.procs["r"] = "b";
  args.funcs["f"] = FuncRef::named("id");
  NameSupply supply({"a", "b", "kp"});
  Chor body = substitute(def.body, def.params, args, supply);
  const auto& nf = std::get<NewFrame>(body.items[0]);
  CHECK(nf.frame != "kp");  // freshened
  const auto& send = std::get<SendStmt>(body.items[1]);
  CHECK(send.frame == nf.frame);
  // Free-name containment: fn(result) is inside range(args) plus non-bound
  // names of the body.
  std::set<std::string> fns = free_names(body);
  for (const auto& n : fns)
    CHECK((n == "a" || n == "b" || n == "id" || n == "keep"));
}

TEST_CASE("substitution rejects domain mismatches") {
  Program p = parse(
      "def f2(s: Int, f: Int -> Int) { s.f; }\n"
      "0\n");
  const ProcDef& def = p.defs.at("f2");
  Bindings missing;
  missing.procs["s"] = "a";
  NameSupply supply({});
  CHECK_THROWS_AS(substitute(def.body, def.params, missing, supply),
                  DomainMismatch);
  Bindings extra;
  extra.procs["s"] = "a";
  extra.funcs["f"] = FuncRef::named("id");
  extra.frames["zz"] = "zz";
  CHECK_THROWS_AS(substitute(def.body, def.params, extra, supply),
                  DomainMismatch);
}

TEST_CASE("fresh names avoid every used name deterministically") {
  NameSupply supply({"k_1", "k_2"});
  CHECK(supply.fresh("k") == "k_3");
  CHECK(supply.fresh("k") == "k_4");
  // A suffixed base reuses its stem.
  CHECK(supply.fresh("k_2") == "k_5");
}

TEST_CASE("free names of a conditional exclude branch-bound frames") {
  Program p = parse(
      "process a: Int = 0;\n"
      "process b: Int = 0;\n"
      "if a.always {\n"
      "  frame kin: Int from a to b in { send(kin, a.id); }\n"
      "}\n");
  std::set<std::string> fns = free_names(p.term);
  CHECK(fns.count("a") == 1);
  CHECK(fns.count("kin") == 0);
}
