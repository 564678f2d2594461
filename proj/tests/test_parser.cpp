#include <catch2/catch_amalgamated.hpp>

#include "rc/parser.hpp"
#include "rc/pretty.hpp"

using namespace rc;

namespace {
const char* kEndToEnd =
    "frame k: Int from s to r in {\n"
    "  send(k, s.id);\n"
    "  recv(k, r.keep);\n"
    "}\n";
}

TEST_CASE("empty program parses to the nil term") {
  Program p = parse_choreography("0");
  CHECK(p.term.items.empty());
  CHECK(p.defs.empty());
}

TEST_CASE("the end-to-end communication parses to binder, send, recv") {
  Program p = parse_choreography(kEndToEnd);
  REQUIRE(p.term.items.size() == 3);
  const auto& nf = std::get<NewFrame>(p.term.items[0]);
  CHECK(nf.frame == "k");
  CHECK(nf.sender == "s");
  CHECK(nf.receiver == "r");
  CHECK(nf.payload == t_int());
  const auto& snd = std::get<SendStmt>(p.term.items[1]);
  CHECK(snd.subject.kind == SubjectKind::Func);
  CHECK(snd.subject.proc == "s");
  const auto& rcv = std::get<RecvStmt>(p.term.items[2]);
  CHECK(rcv.subject.proc == "r");
  CHECK(rcv.subject.has_fn);
}

TEST_CASE("negated guards desugar by swapping branches") {
  const char* a =
      "frame k: Int from p to q in {\n"
      "  send(k, p.id);\n"
      "  if p.sent(k) { } else { p.inc; }\n"
      "}\n";
  const char* b =
      "frame k: Int from p to q in {\n"
      "  send(k, p.id);\n"
      "  if !p.sent(k) { p.inc; }\n"
      "}\n";
  CHECK(parse_choreography(a).term == parse_choreography(b).term);
}

TEST_CASE("call shorthand expands to same-name bindings") {
  const char* a =
      "def go(frame k: Int from s to r, s: Int, f: Int -> Int) {"
      " send(k, s.f); }\n"
      "frame k: Int from s to r in { go(k, s, f := id); }\n";
  Program p = parse_choreography(a);
  const auto& call = std::get<CallStmt>(p.term.items[1]);
  CHECK(call.args.frames.at("k") == "k");
  CHECK(call.args.procs.at("s") == "s");
  CHECK(call.args.funcs.at("f") == FuncRef::named("id"));
}

TEST_CASE("subjects are classified by frame payload type") {
  const char* src =
      "frame kp: PID from a to b in {\n"
      "  frame kl: LBL from a to b in {\n"
      "    send(kp, a.c);\n"
      "    recv(kp, b);\n"
      "    send(kl, a.go);\n"
      "    recv(kl, b);\n"
      "  }\n"
      "}\n";
  Program p = parse_choreography(src);
  const auto& pid_send = std::get<SendStmt>(p.term.items[2]);
  CHECK(pid_send.subject.kind == SubjectKind::Pid);
  CHECK(pid_send.subject.name == "c");
  const auto& lbl_send = std::get<SendStmt>(p.term.items[4]);
  CHECK(lbl_send.subject.kind == SubjectKind::Lbl);
  CHECK(lbl_send.subject.name == "go");
  const auto& pid_recv = std::get<RecvStmt>(p.term.items[3]);
  CHECK_FALSE(pid_recv.subject.has_fn);
}

TEST_CASE("errors carry location and kind") {
  CHECK_THROWS_AS(parse_choreography("frame k: Int from s"), SyntaxError);
  CHECK_THROWS_AS(parse_choreography("send(k, s.id);"), UnboundName);
  CHECK_THROWS_AS(parse_choreography("go(k);"), UnboundName);
  CHECK_THROWS_AS(
      parse_choreography(
          "frame k: LBL from a to b in { send(k, a.default); }"),
      ReservedLabel);
  try {
    parse_choreography("frame k: Int from s to\n  !");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("declaration blocks cannot be followed by statements") {
  CHECK_THROWS_AS(
      parse_choreography(
          "frame k: Int from s to r in { send(k, s.id); }\ns.id;"),
      SyntaxError);
}

TEST_CASE("choreography round-trip: parse after pretty is the identity") {
  std::vector<std::string> sources = {
      kEndToEnd,
      "process a: Int = 3;\nconnect a <-> b;\nprocess b: Int = 0;\n"
      "frame k: Int from a to b in {\n  send(k, a.id);\n"
      "  if !a.sent(k) { a.inc; } else { recv(k, b.keep); }\n}\n",
      "def go(frame k: Int from s to r, s: Int, f: Int -> Int) {"
      " send(k, s.f); go(k, s, f); }\n"
      "frame k: Int from s to r in { go(k, s, f := id); }\n",
      "0",
  };
  for (const auto& src : sources) {
    Program p1 = parse_choreography(src);
    std::string printed = pretty(p1);
    Program p2 = parse_choreography(printed);
    CHECK(p1.term == p2.term);
    CHECK(p1.defs.size() == p2.defs.size());
    for (const auto& [name, def] : p1.defs) {
      REQUIRE(p2.defs.count(name) == 1);
      CHECK(def.body == p2.defs.at(name).body);
      CHECK(def.params == p2.defs.at(name).params);
    }
    // Printing is idempotent.
    CHECK(pretty(p2) == printed);
  }
}

TEST_CASE("process level: empty network") {
  proc::ProcProgram p = parse_process_network("0");
  CHECK(p.network.processes.empty());
  CHECK(p.defs.empty());
}

TEST_CASE("process level: round trip") {
  const char* src =
      "def com_s(frame k, pid r, f: Int -> Int) {\n"
      "  new(r, k);\n"
      "  send(r, k, f);\n"
      "}\n"
      "process s = 42 {\n"
      "  com_s(k := kk, r, f := id);\n"
      "}\n"
      "process r = 0 {\n"
      "  new(s, kk);\n"
      "  recv(s, kk, keep);\n"
      "  branch(s, kk) {\n"
      "    default: {\n"
      "      compute(inc);\n"
      "    }\n"
      "    go: {\n"
      "    }\n"
      "  }\n"
      "}\n";
  proc::ProcProgram p1 = parse_process_network(src);
  std::string printed = proc::pretty(p1);
  proc::ProcProgram p2 = parse_process_network(printed);
  CHECK(proc::pretty(p2) == printed);
  REQUIRE(p2.network.processes.size() == 2);
  CHECK(p2.network.processes[0].name == "r");
  CHECK(p2.network.processes[1].name == "s");
  // Named processes start connected with zeroed counters.
  CHECK(p2.network.processes[0].theta.fc.at("s") == 0);
}

TEST_CASE("runtime-only terms are rejected in sources") {
  CHECK_THROWS_AS(parse_process_network("bag(1, p -> q, 5);"), RuntimeOnlyTerm);
  CHECK_THROWS_AS(
      parse_process_network("process p = 0 { send(q, 1, id); }"),
      RuntimeOnlyTerm);
  CHECK_THROWS_AS(
      parse_process_network("process p = 0 { bag(1, p -> q, 5); }"),
      RuntimeOnlyTerm);
}
