#include <catch2/catch_amalgamated.hpp>

#include "rc/chor_runtime.hpp"
#include "rc/parser.hpp"
#include "rc/pretty.hpp"
#include "swap_oracle.hpp"

using namespace rc;
using namespace rc::chor;

namespace {

const char* kEndToEnd =
    "process s: Int = 42;\n"
    "process r: Int = 0;\n"
    "frame k: Int from s to r in {\n"
    "  send(k, s.id);\n"
    "  recv(k, r.keep);\n"
    "}\n";

RuntimeConfig make_cfg(const Program& p, Setting s) {
  return initial_config(p, s);
}

std::set<std::string> ready_keys(const Chor& term) {
  std::set<std::string> keys;
  for (const auto& e : ready_statements(term)) {
    if (const auto* cond = std::get_if<CondStmt>(&e.item)) {
      keys.insert("if " + pretty(cond->guard));
    } else {
      Chor single;
      single.items.push_back(e.item);
      keys.insert(pretty(single));
    }
  }
  return keys;
}

std::set<std::string> rule_names(const MoveSet& ms) {
  std::set<std::string> out;
  for (const auto& m : ms.moves) out.insert(m.rule);
  return out;
}

const ReductionMove& find_move(const MoveSet& ms, const std::string& rule) {
  for (const auto& m : ms.moves)
    if (m.rule == rule) return m;
  FAIL("move not found: " + rule);
  throw std::logic_error("unreachable");
}

// Classifies an explored end-to-end state as one of the diagram's letters.
char classify(const RuntimeConfig& cfg) {
  int sends = 0, recvs = 0, frames_decl = 0;
  for (const auto& it : cfg.term.items) {
    if (std::holds_alternative<SendStmt>(it)) ++sends;
    if (std::holds_alternative<RecvStmt>(it)) ++recvs;
    if (std::holds_alternative<NewFrame>(it)) ++frames_decl;
  }
  if (frames_decl) return 'a';
  auto fit = cfg.frames.begin();
  REQUIRE(fit != cfg.frames.end());
  const FrameState& fs = fit->second;
  auto slot = [](const StackSlot& s) {
    switch (s.state) {
      case SlotState::Empty: return 'E';
      case SlotState::Holding: return 'H';
      case SlotState::Removed: return 'R';
    }
    return '?';
  };
  char snd = slot(fs.snd), rcv = slot(fs.rcv);
  if (sends == 1 && recvs == 1) return 'b';
  if (sends == 0 && recvs == 1) {
    if (snd == 'H' && rcv == 'E') return 'c';
    if (snd == 'R' && rcv == 'H') return 'd';
    if (snd == 'E' && rcv == 'E') return 'g';
    if (snd == 'R' && rcv == 'E') return 'j';
  }
  if (sends == 1 && recvs == 0) return 'f';
  if (sends == 0 && recvs == 0) {
    if (snd == 'R' && rcv == 'R') return 'e';
    if (snd == 'E' && rcv == 'E') return 'h';
    if (snd == 'H' && rcv == 'E') return 'i';
    if (snd == 'R' && rcv == 'E') return 'k';
    if (snd == 'R' && rcv == 'H') return 'l';
  }
  return '?';
}

}  // namespace

TEST_CASE("ready set: disjoint statements are both ready") {
  Program p = parse_choreography(
      "process a: Int = 0;\nprocess b: Int = 0;\na.inc;\nb.dec;\n");
  auto keys = ready_keys(p.term);
  CHECK(keys == std::set<std::string>{"a.inc;\n", "b.dec;\n"});
  CHECK(ready_keys(Chor{}).empty());
}

TEST_CASE("ready set: same process blocks reordering") {
  Program p = parse_choreography("process a: Int = 0;\na.inc;\na.dec;\n");
  CHECK(ready_keys(p.term) == std::set<std::string>{"a.inc;\n"});
}

TEST_CASE("ready set matches the swap-law closure oracle") {
  std::vector<std::string> sources = {
      "a.inc; b.dec; c.inc;",
      "a.inc; a.dec; b.inc;",
      "frame k: Int from a to b in { send(k, a.id); recv(k, b.keep); }",
      "frame k: Int from a to b in { c.inc; send(k, a.id); }",
      // Shared head statement in both branches of a conditional.
      "if a.always { b.inc; a.inc; } else { b.inc; a.dec; } c.inc;",
      // Statement blocked by the guard's process.
      "if a.always { a.inc; } else { a.dec; } b.inc;",
      // Nested conditionals with disjoint guards.
      "if a.always { if b.always { c.inc; } else { c.dec; } }"
      " else { if b.always { d.inc; } else { d.dec; } }",
  };
  for (const auto& src : sources) {
    INFO(src);
    Program p = parse_choreography(src);
    auto direct = ready_keys(p.term);
    auto oracle = rc::testing::reachable_front_items(p.term);
    CHECK(direct == oracle);
  }
}

TEST_CASE("enabled moves through the end-to-end execution") {
  Program p = parse_choreography(kEndToEnd);
  RuntimeConfig a = make_cfg(p, Setting::Unreliable);

  MoveSet at_a = enabled_moves(a, p.defs);
  CHECK(rule_names(at_a) == std::set<std::string>{"C-NF"});

  RuntimeConfig b = apply(a, find_move(at_a, "C-NF"), p.defs);
  const FrameState& fs = b.frames.at("k");
  CHECK(fs.snd.state == SlotState::Empty);
  CHECK(fs.rcv.state == SlotState::Empty);
  CHECK(fs.sender == "s");
  CHECK(fs.receiver == "r");

  MoveSet at_b = enabled_moves(b, p.defs);
  CHECK(rule_names(at_b) ==
        std::set<std::string>{"C-Snd", "C-SndFail", "C-RcvFail"});

  // C-SndFail leaves the frame dictionary unchanged.
  RuntimeConfig g = apply(b, find_move(at_b, "C-SndFail"), p.defs);
  CHECK(g.frames.at("k") == b.frames.at("k"));

  RuntimeConfig c = apply(b, find_move(at_b, "C-Snd"), p.defs);
  CHECK(c.frames.at("k").snd == StackSlot::holding(v_int(42)));

  MoveSet at_c = enabled_moves(c, p.defs);
  CHECK(rule_names(at_c) == std::set<std::string>{"C-Comm", "C-Loss",
                                                  "C-RcvFail"});

  RuntimeConfig d = apply(c, find_move(at_c, "C-Comm"), p.defs);
  CHECK(d.frames.at("k").snd == StackSlot::removed(v_int(42)));
  CHECK(d.frames.at("k").rcv == StackSlot::holding(v_int(42)));

  MoveSet at_d = enabled_moves(d, p.defs);
  RuntimeConfig e = apply(d, find_move(at_d, "C-RcvV"), p.defs);
  CHECK(e.frames.at("k").rcv == StackSlot::removed(v_int(42)));
  CHECK(e.memory.at("r") == v_int(42));
  CHECK(e.term.items.empty());

  // Terminated program with a held payload still moves (i-style states).
  RuntimeConfig i = apply(c, find_move(at_c, "C-RcvFail"), p.defs);
  MoveSet at_i = enabled_moves(i, p.defs);
  CHECK(rule_names(at_i) == std::set<std::string>{"C-Comm", "C-Loss"});

  // The empty term with no frames has no moves.
  RuntimeConfig nil = make_cfg(parse_choreography("0"), Setting::Unreliable);
  CHECK(enabled_moves(nil, {}).moves.empty());
}

TEST_CASE("reliable setting never offers loss") {
  Program p = parse_choreography(kEndToEnd);
  RuntimeConfig cfg = make_cfg(p, Setting::Reliable);
  StateGraph g = explore(cfg, p.defs, 1);
  for (const auto& e : g.edges) CHECK(e.rule != "C-Loss");
}

TEST_CASE("failure-free reliable run walks the unique success path") {
  Program p = parse_choreography(kEndToEnd);
  RuntimeConfig cfg = make_cfg(p, Setting::Reliable);
  SchedulerParams sched;
  sched.seed = 7;
  RunResult res = run(cfg, p.defs, sched, 100);
  std::vector<std::string> rules;
  for (const auto& s : res.steps) rules.push_back(s.rule);
  CHECK(rules ==
        std::vector<std::string>{"C-NF", "C-Snd", "C-Comm", "C-RcvV"});
  CHECK(res.terminal == "terminated");
  CHECK(res.final_config.memory.at("r") == v_int(42));

  // Determinism under a fixed seed, including failure draws.
  SchedulerParams noisy;
  noisy.seed = 99;
  noisy.send_fail_prob = 0.5;
  noisy.recv_fail_prob = 0.5;
  noisy.loss_prob = 0.5;
  RuntimeConfig ucfg = make_cfg(p, Setting::Unreliable);
  RunResult r1 = run(ucfg, p.defs, noisy, 100);
  RunResult r2 = run(ucfg, p.defs, noisy, 100);
  REQUIRE(r1.steps.size() == r2.steps.size());
  for (size_t i = 0; i < r1.steps.size(); ++i)
    CHECK(r1.steps[i].rule == r2.steps[i].rule);

  RunResult r0 = run(cfg, p.defs, sched, 0);
  CHECK(r0.steps.empty());
  CHECK(config_key(r0.final_config) == config_key(cfg));
}

TEST_CASE("exploration reproduces the end-to-end state diagram") {
  Program p = parse_choreography(kEndToEnd);
  RuntimeConfig cfg = make_cfg(p, Setting::Unreliable);
  StateGraph g = explore(cfg, p.defs, 1);

  REQUIRE(g.nodes.size() == 12);
  std::map<int, char> letter;
  std::set<char> seen;
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    char c = classify(g.nodes[i].config);
    REQUIRE(c != '?');
    letter[static_cast<int>(i)] = c;
    seen.insert(c);
  }
  CHECK(seen.size() == 12);

  std::set<std::string> expected = {
      "a>b:C-NF",      "b>c:C-Snd",     "c>d:C-Comm",    "d>e:C-RcvV",
      "b>f:C-RcvFail", "b>g:C-SndFail", "f>h:C-SndFail", "f>i:C-Snd",
      "g>h:C-RcvFail", "c>i:C-RcvFail", "c>j:C-Loss",    "i>l:C-Comm",
      "i>k:C-Loss",    "j>k:C-RcvFail"};
  std::set<std::string> actual;
  for (const auto& e : g.edges) {
    std::string s;
    s += letter[e.from];
    s += '>';
    s += letter[e.to];
    s += ':';
    s += e.rule;
    actual.insert(s);
  }
  CHECK(actual == expected);

  // Reliable transmission: the two loss states disappear.
  StateGraph gr = explore(make_cfg(p, Setting::Reliable), p.defs, 1);
  CHECK(gr.nodes.size() == 10);
  std::set<char> rel;
  for (const auto& n : gr.nodes) rel.insert(classify(n.config));
  CHECK(rel.count('j') == 0);
  CHECK(rel.count('k') == 0);

  // The nil program explores to a single state.
  StateGraph g0 =
      explore(make_cfg(parse_choreography("0"), Setting::Unreliable), {}, 1);
  CHECK(g0.nodes.size() == 1);
}

TEST_CASE("trace invariants on the explored graph") {
  Program p = parse_choreography(kEndToEnd);
  for (Setting s : {Setting::Reliable, Setting::Unreliable}) {
    StateGraph g = explore(make_cfg(p, s), p.defs, 2);
    for (const auto& e : g.edges) {
      const RuntimeConfig& from = g.nodes[e.from].config;
      const RuntimeConfig& to = g.nodes[e.to].config;
      // Delivery is final: a removed receiver slot never changes again.
      for (const auto& [k, fs] : from.frames) {
        if (fs.rcv.state == SlotState::Removed)
          CHECK(to.frames.at(k).rcv == fs.rcv);
        if (s == Setting::Reliable) {
          // Sender slots only move forward: empty, holding, removed.
          int a = static_cast<int>(fs.snd.state);
          int b = static_cast<int>(to.frames.at(k).snd.state);
          CHECK(b >= a);
        }
      }
      // Connections only grow.
      CHECK(from.graph.subgraph_of(to.graph));
    }
  }
}

TEST_CASE("state budget aborts oversized explorations") {
  Program p = parse_choreography(kEndToEnd);
  CHECK_THROWS_AS(explore(make_cfg(p, Setting::Unreliable), p.defs, 1, 3),
                  StateBudgetExceeded);
}

TEST_CASE("stuck statements are reported, not silently dropped") {
  Program p = parse_choreography(
      "process a: Int = 0;\nprocess b: Int = 0;\n"
      "frame k: Int from a to b in { recv(k, b.keep); }\n");
  RuntimeConfig cfg = make_cfg(p, Setting::Reliable);
  MoveSet ms = enabled_moves(cfg, p.defs);
  RuntimeConfig c2 = apply(cfg, find_move(ms, "C-NF"), p.defs);
  c2.frames.clear();  // simulate a receive on a frame with no runtime state
  MoveSet stuck = enabled_moves(c2, p.defs);
  CHECK(stuck.moves.empty());
  REQUIRE(stuck.stuck.size() == 1);
  CHECK(stuck.stuck[0].reason == "frame has no runtime state");
}

TEST_CASE("applying a non-enabled move is rejected") {
  Program p = parse_choreography(kEndToEnd);
  RuntimeConfig cfg = make_cfg(p, Setting::Reliable);
  ReductionMove bogus;
  bogus.rule = "C-Comm";
  bogus.frame = "k";
  CHECK_THROWS_AS(apply(cfg, bogus, p.defs), IllegalMove);
}
