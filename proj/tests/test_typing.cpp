#include <catch2/catch_amalgamated.hpp>

#include "rc/parser.hpp"
#include "rc/typing.hpp"
#include "typing_oracle.hpp"

using namespace rc;
using namespace rc::typing;
using chor::Setting;

namespace {

const char* kEndToEnd =
    "process s: Int = 42;\n"
    "process r: Int = 0;\n"
    "frame k: Int from s to r in {\n"
    "  send(k, s.id);\n"
    "  recv(k, r.keep);\n"
    "}\n";

// Retry loops: try once, then loop while the outcome is negative.
const char* kComDefs =
    "def send_loop(frame k: Int from s to r, s: Int, f: Int -> Int) {\n"
    "  send(k, s.f);\n"
    "  if !s.sent(k) { send_loop(k, s, f); }\n"
    "}\n"
    "def recv_loop(frame k: Int from s to r, r: Int, g: Int * Int -> Int) {\n"
    "  recv(k, r.g);\n"
    "  if !r.received(k) { recv_loop(k, r, g); }\n"
    "}\n"
    "def com(s: Int, r: Int, f: Int -> Int, g: Int * Int -> Int) {\n"
    "  frame k: Int from s to r in {\n"
    "    send_loop(k, s, f);\n"
    "    recv_loop(k, r, g);\n"
    "  }\n"
    "}\n";

CheckResult check_src(const std::string& src, Setting s) {
  Program p = parse_choreography(src);
  return check(p, s);
}

}  // namespace

TEST_CASE("slot abstraction tables") {
  using chor::StackSlot;
  CHECK(alpha_s(StackSlot::empty()) == AbstractSlot::bot());
  CHECK(alpha_s(StackSlot::holding(v_int(3))) == AbstractSlot::dot());
  CHECK(alpha_s(StackSlot::removed(v_int(3))) == AbstractSlot::dot());
  CHECK(alpha_s(StackSlot::holding(v_lbl("ok"))) == AbstractSlot::lbl("ok"));
  CHECK(alpha_s(StackSlot::removed(v_lbl("ok"))) == AbstractSlot::lbl("ok"));
  CHECK(alpha_s(StackSlot::holding(v_pid("p"))) == AbstractSlot::pid("p"));

  CHECK(alpha_r(StackSlot::empty()) == AbstractSlot::bot());
  CHECK(alpha_r(StackSlot::holding(v_int(3))) == AbstractSlot::bot());
  CHECK(alpha_r(StackSlot::holding(v_lbl("ok"))) == AbstractSlot::bot());
  CHECK(alpha_r(StackSlot::holding(v_pid("p"))) == AbstractSlot::bot());
  CHECK(alpha_r(StackSlot::removed(v_int(3))) == AbstractSlot::dot());
  CHECK(alpha_r(StackSlot::removed(v_lbl("ok"))) == AbstractSlot::lbl("ok"));
  CHECK(alpha_r(StackSlot::removed(v_pid("p"))) == AbstractSlot::pid("p"));
}

TEST_CASE("slot-set merging") {
  SlotSet bot{AbstractSlot::bot()};
  SlotSet dot{AbstractSlot::dot()};
  CHECK(merge_slots(bot, dot) ==
        SlotSet{AbstractSlot::bot(), AbstractSlot::dot()});
  CHECK(merge_slots(bot, bot) == bot);
  CHECK_THROWS_AS(
      merge_slots({AbstractSlot::lbl("l1")}, {AbstractSlot::lbl("l2")}),
      PayloadDisagreement);
  CHECK_THROWS_AS(merge_slots({AbstractSlot::dot()}, {AbstractSlot::pid("p")}),
                  PayloadDisagreement);

  // Idempotent, commutative, associative where defined.
  std::vector<SlotSet> sets = {bot, dot,
                               {AbstractSlot::bot(), AbstractSlot::dot()},
                               {AbstractSlot::lbl("a")},
                               {AbstractSlot::bot(), AbstractSlot::lbl("a")}};
  for (const auto& x : sets) {
    CHECK(merge_slots(x, x) == x);
    for (const auto& y : sets) {
      bool xy_ok = true;
      SlotSet xy;
      try {
        xy = merge_slots(x, y);
      } catch (const PayloadDisagreement&) {
        xy_ok = false;
      }
      bool yx_ok = true;
      SlotSet yx;
      try {
        yx = merge_slots(y, x);
      } catch (const PayloadDisagreement&) {
        yx_ok = false;
      }
      CHECK(xy_ok == yx_ok);
      if (xy_ok) CHECK(xy == yx);
      for (const auto& z : sets) {
        try {
          SlotSet a = merge_slots(merge_slots(x, y), z);
          SlotSet b = merge_slots(x, merge_slots(y, z));
          CHECK(a == b);
        } catch (const PayloadDisagreement&) {
          // undefined on at least one association order: fine
        }
      }
    }
  }
}

TEST_CASE("the nil program types with the empty judgement") {
  CheckResult r = check_src("0", Setting::Reliable);
  REQUIRE(r.ok);
  CHECK(r.judgement.pre.frames.empty());
  CHECK(r.judgement.post.frames.empty());
}

TEST_CASE("the end-to-end program is well-typed in both settings") {
  for (Setting s : {Setting::Reliable, Setting::Unreliable}) {
    CheckResult r = check_src(kEndToEnd, s);
    INFO(r.rejection.reason);
    REQUIRE(r.ok);
    REQUIRE(r.frame_exit.size() == 1);
    const AbstractFrame& exit = r.frame_exit.begin()->second;
    CHECK(exit.snd == SlotSet{AbstractSlot::bot(), AbstractSlot::dot()});
    CHECK(exit.rcv == SlotSet{AbstractSlot::bot(), AbstractSlot::dot()});
  }
}

TEST_CASE("double send is rejected under reliable, accepted under unreliable") {
  const char* src =
      "process p: Int = 0;\nprocess q: Int = 0;\n"
      "frame k: Int from p to q in {\n"
      "  send(k, p.id);\n"
      "  send(k, p.id);\n"
      "}\n";
  CheckResult rel = check_src(src, Setting::Reliable);
  REQUIRE_FALSE(rel.ok);
  CHECK(rel.rejection.rule == "R-SndV");
  CheckResult unrel = check_src(src, Setting::Unreliable);
  INFO(unrel.rejection.reason);
  CHECK(unrel.ok);
}

TEST_CASE("a receive that cannot be matched to a send is rejected") {
  const char* src =
      "process p: Int = 0;\nprocess q: Int = 0;\n"
      "frame k: Int from p to q in { recv(k, q.keep); }\n";
  for (Setting s : {Setting::Reliable, Setting::Unreliable}) {
    CheckResult r = check_src(src, s);
    REQUIRE_FALSE(r.ok);
    CHECK(r.rejection.rule == "T-RcvV");
  }
}

TEST_CASE("consecutive receives are rejected") {
  const char* src =
      "process p: Int = 0;\nprocess q: Int = 0;\n"
      "frame k: Int from p to q in {\n"
      "  send(k, p.id);\n"
      "  recv(k, q.keep);\n"
      "  recv(k, q.keep);\n"
      "}\n";
  CheckResult r = check_src(src, Setting::Unreliable);
  REQUIRE_FALSE(r.ok);
  CHECK(r.rejection.rule == "T-RcvV");
  CHECK(r.rejection.reason.find("consecutive") != std::string::npos);
}

TEST_CASE("unconnected endpoints are rejected") {
  const char* src =
      "process p: Int = 0;\nprocess q: Int = 0;\nprocess z: Int = 0;\n"
      "connect p <-> z;\n"
      "frame k: Int from p to q in { send(k, p.id); }\n";
  CheckResult r = check_src(src, Setting::Reliable);
  REQUIRE_FALSE(r.ok);
  CHECK(r.rejection.rule == "T-NF");
}

TEST_CASE("checking a sent guard before any send is a dead branch") {
  const char* src =
      "process p: Int = 0;\nprocess q: Int = 0;\n"
      "frame k: Int from p to q in {\n"
      "  if p.sent(k) { p.inc; } else { p.dec; }\n"
      "}\n";
  for (Setting s : {Setting::Reliable, Setting::Unreliable}) {
    CheckResult r = check_src(src, s);
    REQUIRE_FALSE(r.ok);
    CHECK(r.rejection.rule == "T-IfSnd");
  }
}

TEST_CASE("payload type mismatches are rejected") {
  const char* src =
      "process p: Str = \"x\";\nprocess q: Int = 0;\n"
      "frame k: Int from p to q in { send(k, p.id_str); }\n";
  CheckResult r = check_src(src, Setting::Reliable);
  REQUIRE_FALSE(r.ok);
  CHECK(r.rejection.rule == "R-SndV");
  CHECK(r.rejection.reason.find("payload") != std::string::npos);
}

TEST_CASE("retry loops type with definite outcomes") {
  std::string src = std::string(kComDefs) +
                    "process a: Int = 7;\nprocess b: Int = 0;\n"
                    "com(s := a, r := b, f := id, g := keep);\n";
  CheckResult r = check_src(src, Setting::Reliable);
  INFO(r.rejection.reason);
  REQUIRE(r.ok);
  // The frame bound inside com ends delivered on both sides.
  REQUIRE(r.frame_exit.size() == 1);
  const AbstractFrame& exit = r.frame_exit.begin()->second;
  CHECK(exit.snd == SlotSet{AbstractSlot::dot()});
  CHECK(exit.rcv == SlotSet{AbstractSlot::dot()});
}

TEST_CASE("a textual receive-before-send types via a scheduling alternative") {
  const char* src =
      "process p: Int = 0;\nprocess q: Int = 0;\n"
      "frame k: Int from p to q in {\n"
      "  recv(k, q.keep);\n"
      "  send(k, p.id);\n"
      "}\n";
  for (Setting s : {Setting::Reliable, Setting::Unreliable}) {
    CheckResult r = check_src(src, s);
    INFO(r.rejection.reason);
    CHECK(r.ok);
  }
}

TEST_CASE("swap-related programs agree on typability") {
  std::vector<std::pair<std::string, std::string>> pairs = {
      {"process a: Int = 0;\nprocess b: Int = 0;\na.inc; b.dec;",
       "process a: Int = 0;\nprocess b: Int = 0;\nb.dec; a.inc;"},
      {"process p: Int = 0;\nprocess q: Int = 0;\n"
       "frame k: Int from p to q in { send(k, p.id); recv(k, q.keep); }",
       "process p: Int = 0;\nprocess q: Int = 0;\n"
       "frame k: Int from p to q in { recv(k, q.keep); send(k, p.id); }"},
  };
  for (const auto& [a, b] : pairs) {
    CHECK(check_src(a, Setting::Reliable).ok ==
          check_src(b, Setting::Reliable).ok);
  }
}

TEST_CASE("weakening: an unrelated frame does not disturb a typing") {
  std::string src = std::string(kComDefs) +
                    "process a: Int = 7;\nprocess b: Int = 0;\n"
                    "process c: Int = 0;\nprocess d: Int = 0;\n"
                    "frame unused: Int from c to d in {\n"
                    "  com(s := a, r := b, f := id, g := keep);\n"
                    "}\n";
  CheckResult r = check_src(src, Setting::Reliable);
  INFO(r.rejection.reason);
  REQUIRE(r.ok);
  // The unused frame exits untouched.
  bool found_untouched = false;
  for (const auto& [id, exit] : r.frame_exit) {
    if (r.frame_exit_names.at(id) == "unused") {
      CHECK(exit.snd == SlotSet{AbstractSlot::bot()});
      CHECK(exit.rcv == SlotSet{AbstractSlot::bot()});
      found_untouched = true;
    }
  }
  CHECK(found_untouched);
}

TEST_CASE("concrete network states check against nominal types") {
  TypingEnv env;
  env.procs["s"] = t_int();
  env.procs["r"] = t_int();
  env.frames["k"] = FrameDecl{t_int(), "s", "r"};
  chor::ConnectionGraph g;
  g.add_edge("s", "r");
  g.add_edge("r", "s");

  chor::FrameDict phi;
  phi["k"] = chor::FrameState{"s", "r", chor::StackSlot::empty(),
                              chor::StackSlot::empty()};
  NetworkType nominal;
  nominal.graph = g;
  nominal.frames["k"] = AbstractFrame{};  // <{_},{_}>
  CHECK(check_network(env, phi, g, nominal));

  // Sender transmitted, receiver still holding: sender view is the payload,
  // receiver view stays undetermined.
  phi["k"].snd = chor::StackSlot::removed(v_int(1));
  phi["k"].rcv = chor::StackSlot::holding(v_int(1));
  nominal.frames["k"].snd = {AbstractSlot::dot()};
  CHECK(check_network(env, phi, g, nominal));

  // Runtime connections beyond the nominal graph are rejected.
  chor::ConnectionGraph bigger = g;
  bigger.add_edge("s", "r2");
  bigger.add_edge("r2", "s");
  CHECK_FALSE(check_network(env, phi, bigger, nominal));
}

TEST_CASE("well-formedness violations are reported per clause") {
  TypingEnv env;
  env.procs["p"] = t_int();
  env.frames["k"] = FrameDecl{t_int(), "p", "q"};
  NetworkType n;
  n.graph.add_node("p");
  n.graph.add_node("z");
  n.frames["k2"] = AbstractFrame{};
  auto v = wellformed_violations(env, n);
  // Missing q connection, k missing from F, k2 undeclared, z undeclared.
  CHECK(v.size() == 4);
}

TEST_CASE("runtime configurations of a well-typed program stay well-typed") {
  Program p = parse_choreography(kEndToEnd);
  chor::RuntimeConfig cfg = chor::initial_config(p, Setting::Unreliable);
  std::string why;
  bool ok = typing::check_runtime(cfg, p, Setting::Unreliable, &why);
  INFO(why);
  CHECK(ok);

  // A corrupted memory cell is detected.
  chor::RuntimeConfig bad = cfg;
  bad.memory["s"] = v_str("oops");
  CHECK_FALSE(typing::check_runtime(bad, p, Setting::Unreliable));
}

TEST_CASE(
    "minimal typing matches the enumeration oracle on the end-to-end body") {
  Program p = parse_choreography(kEndToEnd);
  using rc::testing::OracleStmt;
  for (Setting s : {Setting::Reliable, Setting::Unreliable}) {
    auto mine = infer_minimal_types(p, s);
    auto oracle = rc::testing::oracle_minimal(rc::testing::oracle_judgements(
        {OracleStmt::Send, OracleStmt::Recv}, s == Setting::Reliable));
    REQUIRE(mine.size() == oracle.size());
    for (const auto& j : mine) {
      rc::testing::OracleState pre{j.pre.at("k").snd, j.pre.at("k").rcv};
      rc::testing::OracleState post{j.post.at("k").snd, j.post.at("k").rcv};
      CHECK(oracle.count({pre, post}) == 1);
    }
  }
}

TEST_CASE("minimal typing of retry loops excludes the undetermined marker") {
  std::string src = std::string(kComDefs) +
                    "process a: Int = 7;\nprocess b: Int = 0;\n"
                    "frame kk: Int from a to b in {\n"
                    "  send_loop(k := kk, s := a, f := id);\n"
                    "  recv_loop(k := kk, r := b, g := keep);\n"
                    "}\n";
  Program p = parse_choreography(src);
  auto mine = infer_minimal_types(p, Setting::Reliable);
  bool found = false;
  for (const auto& j : mine) {
    if (j.pre.at("kk").snd == SlotSet{AbstractSlot::bot()} &&
        j.pre.at("kk").rcv == SlotSet{AbstractSlot::bot()}) {
      CHECK(j.post.at("kk").snd == SlotSet{AbstractSlot::dot()});
      CHECK(j.post.at("kk").rcv == SlotSet{AbstractSlot::dot()});
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("minimal typing requires a well-typed program") {
  const char* src =
      "process p: Int = 0;\nprocess q: Int = 0;\n"
      "frame k: Int from p to q in { recv(k, q.keep); }\n";
  Program p = parse_choreography(src);
  CHECK_THROWS_AS(infer_minimal_types(p, Setting::Reliable), NotWellTyped);
}
