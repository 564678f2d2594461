#pragma once

// Small-step interpreter for process networks: per-process behaviours with
// local frame counters, in-transit bags, a seeded scheduler, and a budgeted
// exhaustive explorer.

#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rc/chor_runtime.hpp"  // Setting, SchedulerParams, hashing
#include "rc/guest.hpp"
#include "rc/pretty.hpp"
#include "rc/proc_ast.hpp"

namespace rc::proc {

using chor::SchedulerParams;
using chor::Setting;
using chor::StateBudgetExceeded;

struct IllegalMove : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProcConfig {
  Network net;
  Setting setting = Setting::Reliable;
};

struct ProcMove {
  std::string rule;
  std::string process;  // empty for bag loss
  int bag_index = -1;   // consumed bag for receives and loss
  int src_id = -1;      // failure-budget key
  std::string describe() const {
    return rule + (process.empty() ? "" : " @" + process);
  }
};

struct ProcStuck {
  std::string process;
  std::string reason;
};

struct ProcMoveSet {
  std::vector<ProcMove> moves;
  std::vector<ProcStuck> stuck;
};

// --- structural normalisation ---------------------------------------------------

// Discards branch items with no alternatives; keeps calls folded.
inline Behaviour strip_discardable(const Behaviour& b) {
  Behaviour out;
  for (const auto& it : b.items) {
    if (const auto* br = std::get_if<BranchB>(&it)) {
      if (br->arms.empty()) continue;
      BranchB nb;
      nb.peer = br->peer;
      nb.frame = br->frame;
      nb.src_id = br->src_id;
      for (const auto& [l, arm] : br->arms)
        nb.arms[l] = std::make_shared<Behaviour>(strip_discardable(*arm));
      out.items.push_back(std::move(nb));
      continue;
    }
    if (const auto* cb = std::get_if<CondB>(&it)) {
      CondB nc;
      nc.guard = cb->guard;
      nc.src_id = cb->src_id;
      nc.then_branch =
          std::make_shared<Behaviour>(strip_discardable(*cb->then_branch));
      nc.else_branch =
          std::make_shared<Behaviour>(strip_discardable(*cb->else_branch));
      out.items.push_back(std::move(nc));
      continue;
    }
    if (const auto* sp = std::get_if<SpawnB>(&it)) {
      SpawnB ns = *sp;
      ns.child_body =
          std::make_shared<Behaviour>(strip_discardable(*sp->child_body));
      out.items.push_back(std::move(ns));
      continue;
    }
    out.items.push_back(it);
  }
  return out;
}

struct ExposureOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unfolds calls at the head of a behaviour until an action is exposed.
inline Behaviour expose_behaviour(Behaviour b, const ProcDefSet& defs,
                                  int max_unfolds = 64) {
  b = strip_discardable(b);
  for (int round = 0; round < max_unfolds; ++round) {
    if (b.items.empty()) return b;
    const auto* call = std::get_if<CallB>(&b.items.front());
    if (!call) return b;
    auto dit = defs.find(call->callee);
    if (dit == defs.end())
      throw DomainMismatch("call to unknown procedure " + call->callee);
    std::set<std::string> used;
    all_names(b, used);
    for (const auto& [_, d] : defs) all_names(d.body, used);
    NameSupply supply(used);
    Behaviour body =
        substitute_proc(dit->second.body, dit->second.params, call->args, supply);
    Behaviour next = strip_discardable(body);
    for (size_t i = 1; i < b.items.size(); ++i) next.items.push_back(b.items[i]);
    b = std::move(next);
  }
  throw ExposureOverflow("call unfolding did not converge");
}

inline Network expose_network(const Network& net, const ProcDefSet& defs) {
  Network out = net;
  for (auto& p : out.processes)
    p.behaviour = expose_behaviour(p.behaviour, defs);
  return out;
}

// --- enabled moves ----------------------------------------------------------------

inline ProcMoveSet enabled_moves_proc(const ProcConfig& cfg,
                                      const ProcDefSet& defs,
                                      const guest::FunctionRegistry& reg =
                                          guest::default_registry()) {
  ProcMoveSet out;
  Network net = expose_network(cfg.net, defs);
  for (const auto& p : net.processes) {
    if (p.behaviour.items.empty()) continue;
    const BItem& head = p.behaviour.items.front();
    bool found = false;
    std::string reason;
    auto add = [&](std::string rule, int bag, int src) {
      out.moves.push_back(ProcMove{std::move(rule), p.name, bag, src});
      found = true;
    };
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, SpawnB>) {
            if (net.find(x.child)) {
              reason = "process name already in use";
              return;
            }
            try {
              reg.eval1(x.fn, p.cell);
            } catch (const std::exception& ex) {
              reason = ex.what();
              return;
            }
            add("P-NP", -1, x.src_id);
          } else if constexpr (std::is_same_v<T, NewFrameB>) {
            if (!p.theta.knows(x.peer)) {
              reason = "peer " + x.peer + " is unknown";
              return;
            }
            add("P-NF", -1, x.src_id);
          } else if constexpr (std::is_same_v<T, LocalB>) {
            try {
              reg.eval1(x.fn, p.cell);
            } catch (const std::exception& ex) {
              reason = ex.what();
              return;
            }
            add("P-Int", -1, x.src_id);
          } else if constexpr (std::is_same_v<T, SendB>) {
            if (!x.frame.numeric) {
              reason = "send on an unallocated frame name";
              return;
            }
            add("P-SndFail", -1, x.src_id);
            bool can_send = true;
            if (x.kind == SubjectKind::Func) {
              try {
                reg.eval1(x.fn, p.cell);
              } catch (const std::exception&) {
                can_send = false;
              }
            }
            if (can_send) add("P-Snd", -1, x.src_id);
          } else if constexpr (std::is_same_v<T, RecvB>) {
            if (!x.frame.numeric) {
              reason = "receive on an unallocated frame name";
              return;
            }
            add("P-RcvFail", -1, x.src_id);
            for (size_t bi = 0; bi < net.bags.size(); ++bi) {
              const Bag& bag = net.bags[bi];
              if (bag.to != p.name || bag.from != x.peer ||
                  bag.id != x.frame.num)
                continue;
              switch (x.mode) {
                case RecvMode::Value: {
                  if (bag.payload.kind == ValueKind::Pid ||
                      bag.payload.kind == ValueKind::Lbl)
                    break;
                  try {
                    reg.eval2(x.fn, p.cell, bag.payload);
                  } catch (const std::exception&) {
                    break;
                  }
                  add("P-RcvV", static_cast<int>(bi), x.src_id);
                  break;
                }
                case RecvMode::PidBind:
                  if (bag.payload.kind == ValueKind::Pid)
                    add("P-RcvP", static_cast<int>(bi), x.src_id);
                  break;
                case RecvMode::Label:
                  if (bag.payload.kind == ValueKind::Lbl)
                    add("P-RcvL", static_cast<int>(bi), x.src_id);
                  break;
              }
            }
          } else if constexpr (std::is_same_v<T, BranchB>) {
            if (!x.frame.numeric) {
              reason = "branch on an unallocated frame name";
              return;
            }
            auto l = p.theta.label(x.peer, x.frame.num);
            if (l && *l != kDefaultLabel && x.arms.count(*l)) {
              add("P-Branch", -1, x.src_id);
            } else if (!l && x.arms.count(kDefaultLabel)) {
              add("P-BranchFail", -1, x.src_id);
            } else {
              reason = l ? "received label " + *l + " has no matching arm"
                         : "no label received and no default arm";
            }
          } else if constexpr (std::is_same_v<T, CondB>) {
            if (x.guard.kind == PGuardKind::Delivered) {
              if (!x.guard.frame.numeric) {
                reason = "guard on an unallocated frame name";
                return;
              }
              add("P-IfFrame", -1, x.src_id);
            } else {
              try {
                Value v = reg.eval1(x.guard.fn, p.cell);
                if (v.kind != ValueKind::Bool) {
                  reason = "guard did not evaluate to a boolean";
                  return;
                }
              } catch (const std::exception& ex) {
                reason = ex.what();
                return;
              }
              add("P-IfExp", -1, x.src_id);
            }
          } else {
            static_assert(std::is_same_v<T, CallB>);
            reason = "unfolding did not expose this call";
          }
        },
        head);
    if (!found)
      out.stuck.push_back(
          {p.name, reason.empty() ? "no reduction rule applies" : reason});
  }
  if (cfg.setting == Setting::Unreliable) {
    for (size_t bi = 0; bi < net.bags.size(); ++bi)
      out.moves.push_back(ProcMove{"P-Loss", "", static_cast<int>(bi), -1});
  }
  return out;
}

// --- applying a move ---------------------------------------------------------------

inline ProcConfig apply_proc(const ProcConfig& cfg, const ProcMove& move,
                             const ProcDefSet& defs,
                             const guest::FunctionRegistry& reg =
                                 guest::default_registry()) {
  ProcConfig next = cfg;
  next.net = expose_network(cfg.net, defs);

  if (move.rule == "P-Loss") {
    if (move.bag_index < 0 ||
        move.bag_index >= static_cast<int>(next.net.bags.size()))
      throw IllegalMove("loss of a bag that does not exist");
    next.net.bags.erase(next.net.bags.begin() + move.bag_index);
    return next;
  }

  Process* p = next.net.find(move.process);
  if (!p || p->behaviour.items.empty())
    throw IllegalMove("move on a process with no behaviour");
  BItem head = p->behaviour.items.front();
  auto drop_head = [&] {
    p->behaviour.items.erase(p->behaviour.items.begin());
  };
  auto splice = [&](const Behaviour& b) {
    std::vector<BItem> rest(p->behaviour.items.begin() + 1,
                            p->behaviour.items.end());
    p->behaviour.items = b.items;
    for (auto& it : rest) p->behaviour.items.push_back(std::move(it));
  };
  auto take_bag = [&]() {
    if (move.bag_index < 0 ||
        move.bag_index >= static_cast<int>(next.net.bags.size()))
      throw IllegalMove("receive without a matching bag");
    Bag bag = next.net.bags[move.bag_index];
    next.net.bags.erase(next.net.bags.begin() + move.bag_index);
    return bag;
  };

  if (move.rule == "P-NP") {
    const auto& x = std::get<SpawnB>(head);
    Value v = reg.eval1(x.fn, p->cell);
    Process child;
    child.name = x.child;
    child.behaviour = *x.child_body;
    child.cell = v;
    // The child learns the parent and, mirroring connection inheritance at
    // the global level, starts a counter for every peer the parent knows.
    child.theta.fc[p->name] = 0;
    for (const auto& [peer, _] : p->theta.fc)
      if (peer != x.child) child.theta.fc[peer] = 0;
    p->theta.fc[x.child] = 0;
    drop_head();
    next.net.processes.push_back(std::move(child));
    std::sort(next.net.processes.begin(), next.net.processes.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
  } else if (move.rule == "P-NF") {
    const auto& x = std::get<NewFrameB>(head);
    int n = p->theta.fc.at(x.peer) + 1;
    p->theta.fc[x.peer] = n;
    p->theta.fs[{x.peer, n}] = false;
    std::string frame = x.frame;
    drop_head();
    Behaviour rest;
    rest.items = p->behaviour.items;
    p->behaviour = subst_frame_id(rest, frame, n);
  } else if (move.rule == "P-Int") {
    const auto& x = std::get<LocalB>(head);
    p->cell = reg.eval1(x.fn, p->cell);
    drop_head();
  } else if (move.rule == "P-Snd") {
    const auto& x = std::get<SendB>(head);
    Value u;
    switch (x.kind) {
      case SubjectKind::Func: u = reg.eval1(x.fn, p->cell); break;
      case SubjectKind::Pid: u = v_pid(x.name); break;
      case SubjectKind::Lbl: u = v_lbl(x.name); break;
    }
    p->theta.fs[{x.peer, x.frame.num}] = true;
    next.net.bags.push_back(Bag{x.frame.num, p->name, x.peer, std::move(u)});
    drop_head();
  } else if (move.rule == "P-SndFail" || move.rule == "P-RcvFail") {
    drop_head();
  } else if (move.rule == "P-RcvV") {
    const auto& x = std::get<RecvB>(head);
    Bag bag = take_bag();
    p->cell = reg.eval2(x.fn, p->cell, bag.payload);
    p->theta.fs[{x.peer, x.frame.num}] = true;
    drop_head();
  } else if (move.rule == "P-RcvP") {
    const auto& x = std::get<RecvB>(head);
    Bag bag = take_bag();
    p->theta.fs[{x.peer, x.frame.num}] = true;
    if (!p->theta.fc.count(bag.payload.s)) p->theta.fc[bag.payload.s] = 0;
    std::string bound = x.bind_pid;
    drop_head();
    Behaviour rest;
    rest.items = p->behaviour.items;
    p->behaviour = subst_pid(rest, bound, bag.payload.s);
  } else if (move.rule == "P-RcvL") {
    const auto& x = std::get<RecvB>(head);
    Bag bag = take_bag();
    p->theta.fs[{x.peer, x.frame.num}] = true;
    p->theta.lb[{x.peer, x.frame.num}] = bag.payload.s;
    drop_head();
  } else if (move.rule == "P-IfFrame") {
    const auto& x = std::get<CondB>(head);
    bool flag = p->theta.flag(x.guard.peer, x.guard.frame.num);
    Behaviour branch = flag ? *x.then_branch : *x.else_branch;
    splice(branch);
  } else if (move.rule == "P-IfExp") {
    const auto& x = std::get<CondB>(head);
    Value v = reg.eval1(x.guard.fn, p->cell);
    Behaviour branch = v.b ? *x.then_branch : *x.else_branch;
    splice(branch);
  } else if (move.rule == "P-Branch") {
    const auto& x = std::get<BranchB>(head);
    auto l = p->theta.label(x.peer, x.frame.num);
    if (!l || !x.arms.count(*l)) throw IllegalMove("no branch for the label");
    Behaviour arm = *x.arms.at(*l);
    splice(arm);
  } else if (move.rule == "P-BranchFail") {
    const auto& x = std::get<BranchB>(head);
    auto dit = x.arms.find(kDefaultLabel);
    if (dit == x.arms.end()) throw IllegalMove("no default arm");
    Behaviour arm = *dit->second;
    splice(arm);
  } else {
    throw IllegalMove("unknown rule " + move.rule);
  }
  return next;
}

// --- canonical keys ----------------------------------------------------------------

inline std::string theta_key(const Theta& t) {
  std::ostringstream os;
  for (const auto& [q, n] : t.fc) os << q << "=" << n << ",";
  os << "/";
  for (const auto& [key, l] : t.lb)
    os << key.first << ":" << key.second << "=" << l << ",";
  os << "/";
  for (const auto& [key, f] : t.fs)
    if (f) os << key.first << ":" << key.second << ",";
  return os.str();
}

inline std::string config_key(const ProcConfig& cfg) {
  std::ostringstream os;
  for (const auto& p : cfg.net.processes) {
    os << "[" << p.name << "|" << pretty(strip_discardable(p.behaviour)) << "|"
       << value_to_string(p.cell) << "|" << theta_key(p.theta) << "]";
  }
  std::vector<std::string> bags;
  for (const auto& b : cfg.net.bags) {
    std::ostringstream bs;
    bs << b.id << ":" << b.from << ">" << b.to << ":"
       << value_to_string(b.payload);
    bags.push_back(bs.str());
  }
  std::sort(bags.begin(), bags.end());
  os << "||";
  for (const auto& b : bags) os << b << ";";
  os << "|" << chor::setting_name(cfg.setting);
  return os.str();
}

// --- seeded single-trace execution ---------------------------------------------------

struct ProcTraceStep {
  std::string rule;
  std::string detail;
  ProcConfig after;
};

struct ProcRunResult {
  std::vector<ProcTraceStep> steps;
  ProcConfig final_config;
  std::string terminal;
  std::vector<ProcStuck> diagnostics;
};

inline bool network_terminated(const Network& net) {
  for (const auto& p : net.processes)
    if (!p.behaviour.items.empty()) return false;
  return true;
}

inline ProcRunResult run_proc(const ProcConfig& initial, const ProcDefSet& defs,
                              const SchedulerParams& params, int max_steps,
                              const guest::FunctionRegistry& reg =
                                  guest::default_registry()) {
  ProcRunResult res;
  std::mt19937_64 rng(params.seed);
  auto bernoulli = [&](double prob) {
    if (prob <= 0.0) return false;
    if (prob >= 1.0) return true;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < prob;
  };
  ProcConfig cfg = initial;
  for (int step = 0; step < max_steps; ++step) {
    ProcMoveSet ms = enabled_moves_proc(cfg, defs, reg);
    std::vector<ProcMove> candidates;
    bool blocked_recv = false;
    for (const auto& m : ms.moves) {
      if (m.rule == "P-Snd") continue;  // paired below
      if (m.rule == "P-SndFail") {
        const ProcMove* snd = nullptr;
        for (const auto& o : ms.moves)
          if (o.rule == "P-Snd" && o.process == m.process) snd = &o;
        if (snd && !bernoulli(params.send_fail_prob))
          candidates.push_back(*snd);
        else
          candidates.push_back(m);
        continue;
      }
      if (m.rule == "P-RcvFail") {
        bool has_delivery = false;
        for (const auto& o : ms.moves)
          if (o.process == m.process &&
              (o.rule == "P-RcvV" || o.rule == "P-RcvP" || o.rule == "P-RcvL"))
            has_delivery = true;
        if (has_delivery) continue;  // deliver instead
        if (bernoulli(params.recv_fail_prob))
          candidates.push_back(m);
        else
          blocked_recv = true;
        continue;
      }
      if (m.rule == "P-Loss") {
        if (bernoulli(params.loss_prob)) candidates.push_back(m);
        continue;
      }
      candidates.push_back(m);
    }
    if (candidates.empty()) {
      if (!ms.stuck.empty()) {
        res.terminal = "stuck";
        res.diagnostics = ms.stuck;
      } else if (blocked_recv) {
        res.terminal = "blocked";
      } else {
        res.terminal = "terminated";
      }
      break;
    }
    size_t pick = candidates.size() == 1
                      ? 0
                      : std::uniform_int_distribution<size_t>(
                            0, candidates.size() - 1)(rng);
    cfg = apply_proc(cfg, candidates[pick], defs, reg);
    res.steps.push_back({candidates[pick].rule, candidates[pick].describe(), cfg});
  }
  if (res.terminal.empty())
    res.terminal = static_cast<int>(res.steps.size()) >= max_steps
                       ? "max-steps"
                       : "terminated";
  res.final_config = cfg;
  return res;
}

// --- budgeted exhaustive exploration ---------------------------------------------------

struct ProcExploreNode {
  ProcConfig config;
  std::map<int, int> failures_used;
  std::set<std::string> lost_bags;  // "from>to:id"
  std::vector<ProcStuck> stuck;
  bool terminal = false;
};

struct ProcExploreEdge {
  int from = 0;
  int to = 0;
  std::string rule;
};

struct ProcStateGraph {
  std::vector<ProcExploreNode> nodes;
  std::vector<ProcExploreEdge> edges;
  std::map<std::string, std::vector<int>> by_config;
};

inline ProcStateGraph explore_proc(const ProcConfig& initial,
                                   const ProcDefSet& defs, int failure_budget,
                                   int max_states = 200000,
                                   const guest::FunctionRegistry& reg =
                                       guest::default_registry()) {
  ProcStateGraph g;
  std::map<std::string, int> index;
  std::deque<int> frontier;

  auto bag_key = [](const Bag& b) {
    return b.from + ">" + b.to + ":" + std::to_string(b.id);
  };
  auto node_key = [&](const ProcExploreNode& n) {
    std::ostringstream os;
    os << config_key(n.config) << "|budget:";
    for (const auto& [id, c] : n.failures_used) os << id << "=" << c << ",";
    os << "|lost:";
    for (const auto& k : n.lost_bags) os << k << ",";
    return os.str();
  };
  auto intern = [&](ProcExploreNode n) {
    std::string key = node_key(n);
    auto it = index.find(key);
    if (it != index.end()) return std::make_pair(it->second, false);
    if (static_cast<int>(g.nodes.size()) >= max_states)
      throw StateBudgetExceeded("state budget exceeded at " +
                                std::to_string(max_states) + " states");
    int id = static_cast<int>(g.nodes.size());
    index[key] = id;
    g.by_config[config_key(n.config)].push_back(id);
    g.nodes.push_back(std::move(n));
    return std::make_pair(id, true);
  };

  ProcExploreNode init;
  init.config = initial;
  init.config.net = expose_network(initial.net, defs);
  intern(std::move(init));
  frontier.push_back(0);

  while (!frontier.empty()) {
    int cur = frontier.front();
    frontier.pop_front();
    ProcExploreNode node = g.nodes[cur];
    ProcMoveSet ms = enabled_moves_proc(node.config, defs, reg);
    g.nodes[cur].stuck = ms.stuck;
    Network exposed = expose_network(node.config.net, defs);
    int applied = 0;
    for (const auto& m : ms.moves) {
      bool is_fail = m.rule == "P-SndFail" || m.rule == "P-RcvFail";
      if (is_fail) {
        auto uit = node.failures_used.find(m.src_id);
        int used = uit == node.failures_used.end() ? 0 : uit->second;
        if (used >= failure_budget) continue;
      }
      std::string lost_key;
      if (m.rule == "P-Loss") {
        lost_key = bag_key(exposed.bags.at(m.bag_index));
        if (node.lost_bags.count(lost_key)) continue;
      }
      ProcExploreNode succ;
      succ.config = apply_proc(node.config, m, defs, reg);
      succ.failures_used = node.failures_used;
      succ.lost_bags = node.lost_bags;
      if (is_fail) succ.failures_used[m.src_id]++;
      if (m.rule == "P-Loss") succ.lost_bags.insert(lost_key);
      auto [id, is_new] = intern(std::move(succ));
      g.edges.push_back({cur, id, m.rule});
      if (is_new) frontier.push_back(id);
      ++applied;
    }
    g.nodes[cur].terminal = applied == 0;
  }
  return g;
}

}  // namespace rc::proc
