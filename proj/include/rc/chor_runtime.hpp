#pragma once

// Small-step interpreter for choreographies: runtime configurations,
// reduction moves, a seeded scheduler, and a budgeted exhaustive explorer.
//
// Out-of-order execution is computed directly as a ready set: an item is
// ready when no earlier item in program order shares a process name with it
// (and it does not cross a binder that captures one of its names). Items
// heading both branches of a conditional are ready when additionally
// disjoint from the guard.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rc/ast.hpp"
#include "rc/guest.hpp"
#include "rc/pretty.hpp"

namespace rc::chor {

struct IllegalMove : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StateBudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Setting { Reliable, Unreliable };

inline std::string setting_name(Setting s) {
  return s == Setting::Reliable ? "reliable" : "unreliable";
}

// --- frame stacks -------------------------------------------------------------

enum class SlotState { Empty, Holding, Removed };

struct StackSlot {
  SlotState state = SlotState::Empty;
  Value payload;

  static StackSlot empty() { return {}; }
  static StackSlot holding(Value v) {
    return StackSlot{SlotState::Holding, std::move(v)};
  }
  static StackSlot removed(Value v) {
    return StackSlot{SlotState::Removed, std::move(v)};
  }
  bool operator==(const StackSlot& o) const {
    return state == o.state && payload == o.payload;
  }
  std::string str() const {
    switch (state) {
      case SlotState::Empty: return "_";
      case SlotState::Holding: return value_to_string(payload);
      case SlotState::Removed: return value_to_string(payload) + "*";
    }
    return "?";
  }
};

struct FrameState {
  std::string sender;
  std::string receiver;
  StackSlot snd;
  StackSlot rcv;
  bool operator==(const FrameState& o) const {
    return sender == o.sender && receiver == o.receiver && snd == o.snd &&
           rcv == o.rcv;
  }
};

using FrameDict = std::map<std::string, FrameState>;

struct ConnectionGraph {
  std::set<std::string> nodes;
  std::set<std::pair<std::string, std::string>> edges;

  bool has_edge(const std::string& p, const std::string& q) const {
    return edges.count({p, q}) > 0;
  }
  bool bidirectional(const std::string& p, const std::string& q) const {
    return has_edge(p, q) && has_edge(q, p);
  }
  void add_node(const std::string& p) { nodes.insert(p); }
  void add_edge(const std::string& p, const std::string& q) {
    nodes.insert(p);
    nodes.insert(q);
    edges.insert({p, q});
  }
  bool subgraph_of(const ConnectionGraph& o) const {
    for (const auto& e : edges)
      if (!o.edges.count(e)) return false;
    return true;
  }
  bool operator==(const ConnectionGraph& o) const {
    return nodes == o.nodes && edges == o.edges;
  }
};

using MemoryStore = std::map<std::string, Value>;

// Frame/process declarations accumulated while running; not part of state
// identity, but needed to re-type runtime configurations.
struct ConfigMeta {
  struct FrameInfo {
    TypeExpr type;
    int origin = -1;  // src id of the declaration this frame came from
  };
  std::map<std::string, FrameInfo> frames;
  std::map<std::string, TypeExpr> proc_types;
};

struct RuntimeConfig {
  Chor term;
  MemoryStore memory;
  FrameDict frames;
  ConnectionGraph graph;
  Setting setting = Setting::Reliable;
  ConfigMeta meta;
};

// ---------------------------------------------------------------------------
// Initial configurations

// Infers cell types of free processes from the first function applied to
// each cell. Declared processes take priority.
inline std::map<std::string, TypeExpr> infer_process_types(
    const Program& prog,
    const guest::FunctionRegistry& reg = guest::default_registry()) {
  std::map<std::string, TypeExpr> types;
  for (const auto& pd : prog.processes) types[pd.name] = pd.type;

  auto suggest = [&](const std::string& p, const TypeExpr& t) {
    types.emplace(p, t);
  };
  auto fn_arg = [&](const FuncRef& f) -> std::optional<TypeExpr> {
    if (f.is_const || !reg.has(f.name)) return std::nullopt;
    return reg.lookup(f.name).sig.arg;
  };

  std::function<void(const Chor&)> walk = [&](const Chor& c) {
    for (const auto& it : c.items) {
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, LocalStmt>) {
              if (auto t = fn_arg(x.fn)) suggest(x.proc, *t);
            } else if constexpr (std::is_same_v<T, SendStmt>) {
              if (x.subject.kind == SubjectKind::Func)
                if (auto t = fn_arg(x.subject.fn)) suggest(x.subject.proc, *t);
            } else if constexpr (std::is_same_v<T, RecvStmt>) {
              if (x.subject.has_fn)
                if (auto t = fn_arg(x.subject.fn)) suggest(x.subject.proc, *t);
            } else if constexpr (std::is_same_v<T, CallStmt>) {
              auto dit = prog.defs.find(x.callee);
              if (dit != prog.defs.end()) {
                for (const auto& param : dit->second.params) {
                  if (param.kind != ParamKind::Proc) continue;
                  auto ait = x.args.procs.find(param.name);
                  if (ait != x.args.procs.end()) suggest(ait->second, param.type);
                }
              }
            } else if constexpr (std::is_same_v<T, CondStmt>) {
              if (x.guard.kind == GuardKind::Expr)
                if (auto t = fn_arg(x.guard.fn)) suggest(x.guard.proc, *t);
              walk(*x.then_branch);
              walk(*x.else_branch);
            } else if constexpr (std::is_same_v<T, NewProc>) {
              if (auto t = fn_arg(x.fn)) suggest(x.parent, *t);
            }
          },
          it);
    }
  };
  walk(prog.term);
  for (const auto& p : process_names(prog.term)) types.emplace(p, t_unit());
  return types;
}

// The canonical starting configuration of a program: declared cells (or
// defaults), the declared connection graph (or the complete one), no frames.
inline RuntimeConfig initial_config(const Program& prog, Setting setting,
                                    const guest::FunctionRegistry& reg =
                                        guest::default_registry()) {
  RuntimeConfig cfg;
  cfg.term = prog.term;
  cfg.setting = setting;
  std::map<std::string, TypeExpr> types = infer_process_types(prog, reg);
  for (const auto& [p, t] : types) {
    cfg.meta.proc_types[p] = t;
    cfg.memory[p] = default_inhabitant(t);
    cfg.graph.add_node(p);
  }
  for (const auto& pd : prog.processes)
    if (pd.has_init) cfg.memory[pd.name] = pd.init;
  if (prog.has_connect_decls) {
    for (const auto& cd : prog.connections) {
      cfg.graph.add_edge(cd.from, cd.to);
      if (cd.bidirectional) cfg.graph.add_edge(cd.to, cd.from);
    }
  } else {
    for (const auto& a : cfg.graph.nodes)
      for (const auto& b : cfg.graph.nodes)
        if (a != b) cfg.graph.edges.insert({a, b});
  }
  return cfg;
}

// --- moves ---------------------------------------------------------------------

struct PathStep {
  int index = 0;
  int branch = 0;  // 0: the item itself, 1: then-branch, 2: else-branch
  bool operator==(const PathStep& o) const {
    return index == o.index && branch == o.branch;
  }
};
using Path = std::vector<PathStep>;

struct ReadyEntry {
  Item item;                // representative copy
  std::vector<Path> paths;  // all copies this entry stands for
};

struct ReductionMove {
  std::string rule;
  std::vector<Path> paths;  // statement moves; empty for stack moves
  std::string frame;        // stack moves and frame-touching statements
  int src_id = -1;          // failure-budget key for send/recv statements
  std::string describe() const {
    return rule + (frame.empty() ? "" : " @" + frame);
  }
};

struct StuckInfo {
  std::string statement;
  std::string reason;
};

struct MoveSet {
  std::vector<ReductionMove> moves;
  std::vector<StuckInfo> stuck;
};

// ---------------------------------------------------------------------------
// Ready-set computation

namespace detail {

inline std::set<std::string> item_free_names(const Item& it) {
  Chor c;
  c.items.push_back(it);
  return free_names(c);
}

inline bool is_cond(const Item& it) {
  return std::holds_alternative<CondStmt>(it);
}

inline bool entry_key_matches(const Item& a, const Item& b) {
  const auto* ca = std::get_if<CondStmt>(&a);
  const auto* cb = std::get_if<CondStmt>(&b);
  if (ca && cb) return ca->guard == cb->guard;
  if (ca || cb) return false;
  return a == b;
}

inline void ready_core(const Chor& c, std::vector<ReadyEntry>& out);

// Entries ready in both branches with matching keys, extractable past the
// guard. Plain items use their own names for the disjointness checks;
// nested conditionals additionally require both guards disjoint.
inline std::vector<ReadyEntry> extract_from_cond(const CondStmt& cond) {
  std::vector<ReadyEntry> r1, r2, out;
  ready_core(*cond.then_branch, r1);
  ready_core(*cond.else_branch, r2);
  std::set<std::string> guard_pn = process_names(cond.guard);
  for (const auto& e1 : r1) {
    for (const auto& e2 : r2) {
      if (!entry_key_matches(e1.item, e2.item)) continue;
      std::set<std::string> pn;
      if (is_cond(e1.item))
        pn = process_names(std::get<CondStmt>(e1.item).guard);
      else
        pn = process_names(e1.item);
      bool disjoint = true;
      for (const auto& p : pn)
        if (guard_pn.count(p)) disjoint = false;
      if (!disjoint) continue;
      ReadyEntry e;
      e.item = e1.item;
      for (const auto& p : e1.paths) {
        Path np;
        np.push_back({0, 1});
        np.insert(np.end(), p.begin(), p.end());
        e.paths.push_back(np);
      }
      for (const auto& p : e2.paths) {
        Path np;
        np.push_back({0, 2});
        np.insert(np.end(), p.begin(), p.end());
        e.paths.push_back(np);
      }
      out.push_back(std::move(e));
      break;  // one partner per entry
    }
  }
  return out;
}

inline void ready_core(const Chor& c, std::vector<ReadyEntry>& out) {
  std::set<std::string> blocked;
  std::set<std::string> crossed_binders;
  for (size_t idx = 0; idx < c.items.size(); ++idx) {
    const Item& it = c.items[idx];
    std::set<std::string> pn = process_names(it);
    std::set<std::string> fn = item_free_names(it);

    auto clears = [&](const std::set<std::string>& names,
                      const std::set<std::string>& frees) {
      for (const auto& n : names)
        if (blocked.count(n)) return false;
      for (const auto& n : frees)
        if (crossed_binders.count(n)) return false;
      return true;
    };

    bool item_ready = clears(pn, fn);
    if (item_ready) {
      ReadyEntry e;
      e.item = it;
      e.paths.push_back({PathStep{static_cast<int>(idx), 0}});
      out.push_back(std::move(e));
    }
    if (const auto* cond = std::get_if<CondStmt>(&it)) {
      for (ReadyEntry sub : extract_from_cond(*cond)) {
        // Nested conditionals ride inside the rearranged outer conditional,
        // so they need the whole conditional clear of earlier items.
        bool sub_ok;
        if (is_cond(sub.item)) {
          sub_ok = item_ready;
        } else {
          std::set<std::string> spn = process_names(sub.item);
          std::set<std::string> sfn = item_free_names(sub.item);
          sub_ok = clears(spn, sfn);
        }
        if (!sub_ok) continue;
        for (auto& p : sub.paths) p.front().index = static_cast<int>(idx);
        out.push_back(std::move(sub));
      }
    }
    blocked.insert(pn.begin(), pn.end());
    if (auto b = bound_name(it)) crossed_binders.insert(*b);
  }
}

}  // namespace detail

inline std::vector<ReadyEntry> ready_statements(const Chor& term) {
  std::vector<ReadyEntry> out;
  detail::ready_core(term, out);
  return out;
}

// ---------------------------------------------------------------------------
// Call exposure (lazy unfolding)

namespace detail {

inline const Item* item_at(const Chor& c, const Path& path, size_t depth = 0) {
  const PathStep& s = path.at(depth);
  const Item& it = c.items.at(s.index);
  if (s.branch == 0) return &it;
  const auto& cond = std::get<CondStmt>(it);
  const Chor& br = s.branch == 1 ? *cond.then_branch : *cond.else_branch;
  return item_at(br, path, depth + 1);
}

// Rewrites the item each path points at into a replacement sequence.
// `make_replacement` sees the targeted item and produces the items that take
// its place.
template <typename Fn>
inline Chor rewrite_at(const Chor& c, const std::vector<Path>& paths,
                       size_t depth, const Fn& make_replacement) {
  Chor out;
  for (size_t idx = 0; idx < c.items.size(); ++idx) {
    std::vector<const Path*> here;
    std::vector<const Path*> deeper1;
    std::vector<const Path*> deeper2;
    for (const auto& p : paths) {
      if (p.at(depth).index != static_cast<int>(idx)) continue;
      if (p.at(depth).branch == 0)
        here.push_back(&p);
      else if (p.at(depth).branch == 1)
        deeper1.push_back(&p);
      else
        deeper2.push_back(&p);
    }
    const Item& it = c.items[idx];
    if (!here.empty()) {
      for (Item& rep : make_replacement(it)) out.items.push_back(std::move(rep));
      continue;
    }
    if (!deeper1.empty() || !deeper2.empty()) {
      const auto& cond = std::get<CondStmt>(it);
      CondStmt next;
      next.guard = cond.guard;
      next.src_id = cond.src_id;
      std::vector<Path> ps1, ps2;
      for (const auto* p : deeper1) ps1.push_back(*p);
      for (const auto* p : deeper2) ps2.push_back(*p);
      next.then_branch = std::make_shared<Chor>(
          ps1.empty() ? *cond.then_branch
                      : rewrite_at(*cond.then_branch, ps1, depth + 1,
                                   make_replacement));
      next.else_branch = std::make_shared<Chor>(
          ps2.empty() ? *cond.else_branch
                      : rewrite_at(*cond.else_branch, ps2, depth + 1,
                                   make_replacement));
      out.items.push_back(std::move(next));
      continue;
    }
    out.items.push_back(it);
  }
  return out;
}

}  // namespace detail

struct ExposureOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unfolds ready calls until none remain at the frontier. Fresh names are
// chosen from the names used anywhere in the term and definitions, so the
// result is a deterministic function of its inputs.
inline Chor expose(Chor term, const ProcedureSet& defs, int max_unfolds = 64) {
  for (int round = 0; round < max_unfolds; ++round) {
    std::vector<ReadyEntry> entries = ready_statements(term);
    const ReadyEntry* call = nullptr;
    for (const auto& e : entries) {
      if (std::holds_alternative<CallStmt>(e.item)) {
        call = &e;
        break;
      }
    }
    if (!call) return term;
    const auto& cs = std::get<CallStmt>(call->item);
    auto dit = defs.find(cs.callee);
    if (dit == defs.end())
      throw rc::DomainMismatch("call to unknown procedure " + cs.callee);
    std::set<std::string> used = all_names(term);
    all_names(defs, used);
    NameSupply supply(used);
    Chor body = substitute(dit->second.body, dit->second.params, cs.args, supply);
    term = detail::rewrite_at(term, call->paths, 0, [&](const Item&) {
      std::vector<Item> reps;
      for (const auto& it : body.items) reps.push_back(it);
      return reps;
    });
  }
  throw ExposureOverflow("call unfolding did not converge");
}

// ---------------------------------------------------------------------------
// Enabled moves

namespace detail {

inline bool is_datatype_value(const Value& v) {
  return v.kind != ValueKind::Pid && v.kind != ValueKind::Lbl;
}

}  // namespace detail

inline MoveSet enabled_moves_exposed(const RuntimeConfig& cfg,
                                     const Chor& exposed,
                                     const guest::FunctionRegistry& reg) {
  MoveSet out;
  for (const auto& e : ready_statements(exposed)) {
    bool found = false;
    std::string stuck_reason;
    auto add = [&](std::string rule, std::string frame, int src) {
      ReductionMove m;
      m.rule = std::move(rule);
      m.paths = e.paths;
      m.frame = std::move(frame);
      m.src_id = src;
      out.moves.push_back(std::move(m));
      found = true;
    };
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, NewProc>) {
            if (cfg.graph.nodes.count(x.child)) {
              stuck_reason = "process name already in use";
              return;
            }
            auto sit = cfg.memory.find(x.parent);
            if (sit == cfg.memory.end()) {
              stuck_reason = "parent process has no memory cell";
              return;
            }
            try {
              reg.eval1(x.fn, sit->second);
            } catch (const std::exception& ex) {
              stuck_reason = ex.what();
              return;
            }
            add("C-NP", "", x.src_id);
          } else if constexpr (std::is_same_v<T, NewFrame>) {
            if (cfg.frames.count(x.frame)) {
              stuck_reason = "frame name already in use";
              return;
            }
            add("C-NF", x.frame, x.src_id);
          } else if constexpr (std::is_same_v<T, LocalStmt>) {
            auto sit = cfg.memory.find(x.proc);
            if (sit == cfg.memory.end()) {
              stuck_reason = "process has no memory cell";
              return;
            }
            try {
              reg.eval1(x.fn, sit->second);
            } catch (const std::exception& ex) {
              stuck_reason = ex.what();
              return;
            }
            add("C-Int", "", x.src_id);
          } else if constexpr (std::is_same_v<T, SendStmt>) {
            // A send may always fail; success needs the frame, the edge and
            // a computable payload.
            add("C-SndFail", x.frame, x.src_id);
            auto fit = cfg.frames.find(x.frame);
            if (fit == cfg.frames.end()) return;
            const FrameState& fs = fit->second;
            if (fs.sender != x.subject.proc) return;
            if (!cfg.graph.has_edge(fs.sender, fs.receiver)) return;
            if (x.subject.kind == SubjectKind::Func) {
              auto sit = cfg.memory.find(x.subject.proc);
              if (sit == cfg.memory.end()) return;
              try {
                reg.eval1(x.subject.fn, sit->second);
              } catch (const std::exception&) {
                return;
              }
            }
            add("C-Snd", x.frame, x.src_id);
          } else if constexpr (std::is_same_v<T, RecvStmt>) {
            auto fit = cfg.frames.find(x.frame);
            if (fit == cfg.frames.end()) {
              stuck_reason = "frame has no runtime state";
              return;
            }
            const FrameState& fs = fit->second;
            if (fs.rcv.state == SlotState::Empty) {
              add("C-RcvFail", x.frame, x.src_id);
              return;
            }
            const Value& u = fs.rcv.payload;
            if (x.subject.has_fn && detail::is_datatype_value(u)) {
              if (fs.receiver != x.subject.proc) {
                stuck_reason = "receive subject is not the frame's receiver";
                return;
              }
              auto sit = cfg.memory.find(x.subject.proc);
              if (sit == cfg.memory.end()) {
                stuck_reason = "process has no memory cell";
                return;
              }
              try {
                reg.eval2(x.subject.fn, sit->second, u);
              } catch (const std::exception& ex) {
                stuck_reason = ex.what();
                return;
              }
              add("C-RcvV", x.frame, x.src_id);
            } else if (!x.subject.has_fn && u.kind == ValueKind::Pid) {
              if (fs.receiver != x.subject.proc) {
                stuck_reason = "receive subject is not the frame's receiver";
                return;
              }
              add("C-RcvP", x.frame, x.src_id);
            } else if (!x.subject.has_fn && u.kind == ValueKind::Lbl) {
              if (fs.receiver != x.subject.proc) {
                stuck_reason = "receive subject is not the frame's receiver";
                return;
              }
              add("C-RcvL", x.frame, x.src_id);
            } else {
              stuck_reason = "pending payload does not match the receive form";
            }
          } else if constexpr (std::is_same_v<T, CondStmt>) {
            const Guard& g = x.guard;
            switch (g.kind) {
              case GuardKind::Expr: {
                auto sit = cfg.memory.find(g.proc);
                if (sit == cfg.memory.end()) {
                  stuck_reason = "process has no memory cell";
                  return;
                }
                try {
                  Value v = reg.eval1(g.fn, sit->second);
                  if (v.kind != ValueKind::Bool) {
                    stuck_reason = "guard did not evaluate to a boolean";
                    return;
                  }
                } catch (const std::exception& ex) {
                  stuck_reason = ex.what();
                  return;
                }
                add("C-IfExp", "", x.src_id);
                break;
              }
              case GuardKind::Sent: {
                auto fit = cfg.frames.find(g.frame);
                if (fit == cfg.frames.end() || fit->second.sender != g.proc) {
                  stuck_reason = "sent guard subject is not the frame sender";
                  return;
                }
                add("C-IfSnt", g.frame, x.src_id);
                break;
              }
              case GuardKind::Received: {
                auto fit = cfg.frames.find(g.frame);
                if (fit == cfg.frames.end() || fit->second.receiver != g.proc) {
                  stuck_reason =
                      "received guard subject is not the frame receiver";
                  return;
                }
                add("C-IfRcv", g.frame, x.src_id);
                break;
              }
              case GuardKind::ReceivedLbl: {
                auto fit = cfg.frames.find(g.frame);
                if (fit == cfg.frames.end() || fit->second.receiver != g.proc) {
                  stuck_reason =
                      "received guard subject is not the frame receiver";
                  return;
                }
                add("C-IfLbl", g.frame, x.src_id);
                break;
              }
            }
          } else if constexpr (std::is_same_v<T, CallStmt>) {
            stuck_reason = "unfolding did not expose this call";
          }
        },
        e.item);
    if (!found) {
      std::ostringstream os;
      Chor single;
      single.items.push_back(e.item);
      os << pretty(single);
      std::string stmt = os.str();
      if (!stmt.empty() && stmt.back() == '\n') stmt.pop_back();
      out.stuck.push_back({stmt, stuck_reason.empty()
                                     ? "no reduction rule applies"
                                     : stuck_reason});
    }
  }
  // Stack moves are independent of the program term.
  for (const auto& [k, fs] : cfg.frames) {
    if (fs.snd.state != SlotState::Holding) continue;
    if (!cfg.graph.bidirectional(fs.sender, fs.receiver)) continue;
    if (fs.rcv.state != SlotState::Removed) {
      ReductionMove m;
      m.rule = "C-Comm";
      m.frame = k;
      out.moves.push_back(std::move(m));
    }
    if (cfg.setting == Setting::Unreliable) {
      ReductionMove m;
      m.rule = "C-Loss";
      m.frame = k;
      out.moves.push_back(std::move(m));
    }
  }
  return out;
}

inline MoveSet enabled_moves(const RuntimeConfig& cfg, const ProcedureSet& defs,
                             const guest::FunctionRegistry& reg =
                                 guest::default_registry()) {
  return enabled_moves_exposed(cfg, expose(cfg.term, defs), reg);
}

// ---------------------------------------------------------------------------
// Applying a move

inline RuntimeConfig apply_exposed(const RuntimeConfig& cfg, const Chor& exposed,
                                   const ReductionMove& move,
                                   const guest::FunctionRegistry& reg) {
  RuntimeConfig next = cfg;
  next.term = exposed;

  auto consume = [&](std::function<std::vector<Item>(const Item&)> rep) {
    next.term = detail::rewrite_at(next.term, move.paths, 0, rep);
  };
  auto drop = [&] {
    consume([](const Item&) { return std::vector<Item>{}; });
  };
  auto select_branch = [&](int j) {
    consume([&](const Item& it) {
      const auto& cond = std::get<CondStmt>(it);
      const Chor& br = j == 1 ? *cond.then_branch : *cond.else_branch;
      return br.items;
    });
  };
  auto target_item = [&]() -> const Item& {
    if (move.paths.empty()) throw IllegalMove("move has no target statement");
    return *detail::item_at(exposed, move.paths.front());
  };

  if (move.rule == "C-NP") {
    const auto& x = std::get<NewProc>(target_item());
    Value v = reg.eval1(x.fn, cfg.memory.at(x.parent));
    next.memory[x.child] = v;
    next.graph.add_edge(x.parent, x.child);
    next.graph.add_edge(x.child, x.parent);
    for (const auto& [from, to] : cfg.graph.edges)
      if (from == x.parent) next.graph.add_edge(x.child, to);
    next.meta.proc_types[x.child] = type_of(v);
    drop();
  } else if (move.rule == "C-NF") {
    const auto& x = std::get<NewFrame>(target_item());
    FrameState fs;
    fs.sender = x.sender;
    fs.receiver = x.receiver;
    next.frames[x.frame] = fs;
    next.meta.frames[x.frame] = {x.payload, x.src_id};
    drop();
  } else if (move.rule == "C-Int") {
    const auto& x = std::get<LocalStmt>(target_item());
    next.memory[x.proc] = reg.eval1(x.fn, cfg.memory.at(x.proc));
    drop();
  } else if (move.rule == "C-Snd") {
    const auto& x = std::get<SendStmt>(target_item());
    auto fit = next.frames.find(x.frame);
    if (fit == next.frames.end()) throw IllegalMove("send on unknown frame");
    Value u;
    switch (x.subject.kind) {
      case SubjectKind::Func:
        u = reg.eval1(x.subject.fn, cfg.memory.at(x.subject.proc));
        break;
      case SubjectKind::Pid: u = v_pid(x.subject.name); break;
      case SubjectKind::Lbl: u = v_lbl(x.subject.name); break;
    }
    fit->second.snd = StackSlot::holding(std::move(u));
    drop();
  } else if (move.rule == "C-SndFail" || move.rule == "C-RcvFail") {
    drop();
  } else if (move.rule == "C-Comm") {
    auto fit = next.frames.find(move.frame);
    if (fit == next.frames.end() || fit->second.snd.state != SlotState::Holding)
      throw IllegalMove("transmission without a held payload");
    Value u = fit->second.snd.payload;
    fit->second.snd = StackSlot::removed(u);
    fit->second.rcv = StackSlot::holding(u);
  } else if (move.rule == "C-Loss") {
    auto fit = next.frames.find(move.frame);
    if (fit == next.frames.end() || fit->second.snd.state != SlotState::Holding)
      throw IllegalMove("loss without a held payload");
    fit->second.snd = StackSlot::removed(fit->second.snd.payload);
  } else if (move.rule == "C-RcvV") {
    const auto& x = std::get<RecvStmt>(target_item());
    auto fit = next.frames.find(x.frame);
    Value v = fit->second.rcv.payload;
    Value w = reg.eval2(x.subject.fn, cfg.memory.at(x.subject.proc), v);
    next.memory[x.subject.proc] = w;
    fit->second.rcv = StackSlot::removed(w);
    drop();
  } else if (move.rule == "C-RcvP") {
    const auto& x = std::get<RecvStmt>(target_item());
    auto fit = next.frames.find(x.frame);
    Value r = fit->second.rcv.payload;
    fit->second.rcv = StackSlot::removed(r);
    next.graph.add_edge(x.subject.proc, r.s);
    drop();
  } else if (move.rule == "C-RcvL") {
    const auto& x = std::get<RecvStmt>(target_item());
    auto fit = next.frames.find(x.frame);
    Value l = fit->second.rcv.payload;
    fit->second.rcv = StackSlot::removed(l);
    drop();
  } else if (move.rule == "C-IfExp") {
    const auto& x = std::get<CondStmt>(target_item());
    Value v = reg.eval1(x.guard.fn, cfg.memory.at(x.guard.proc));
    select_branch(v.b ? 1 : 2);
  } else if (move.rule == "C-IfSnt") {
    const auto& x = std::get<CondStmt>(target_item());
    const FrameState& fs = next.frames.at(x.guard.frame);
    select_branch(fs.snd.state != SlotState::Empty ? 1 : 2);
  } else if (move.rule == "C-IfRcv") {
    const auto& x = std::get<CondStmt>(target_item());
    const FrameState& fs = next.frames.at(x.guard.frame);
    select_branch(fs.rcv.state == SlotState::Removed ? 1 : 2);
  } else if (move.rule == "C-IfLbl") {
    const auto& x = std::get<CondStmt>(target_item());
    const FrameState& fs = next.frames.at(x.guard.frame);
    bool match = fs.rcv.state == SlotState::Removed &&
                 fs.rcv.payload.kind == ValueKind::Lbl &&
                 fs.rcv.payload.s == x.guard.label;
    select_branch(match ? 1 : 2);
  } else {
    throw IllegalMove("unknown rule " + move.rule);
  }
  return next;
}

inline RuntimeConfig apply(const RuntimeConfig& cfg, const ReductionMove& move,
                           const ProcedureSet& defs,
                           const guest::FunctionRegistry& reg =
                               guest::default_registry()) {
  return apply_exposed(cfg, expose(cfg.term, defs), move, reg);
}

// ---------------------------------------------------------------------------
// Canonical state keys

namespace detail {

inline std::string item_key(const Item& it) {
  Chor single;
  single.items.push_back(it);
  return pretty(single);
}

}  // namespace detail

// Least linearisation of the spine under the swap relation: repeatedly emit
// the smallest ready item. Conditional branches are normalised recursively.
inline Chor normal_form(const Chor& c) {
  Chor work;
  for (const auto& it : c.items) {
    if (const auto* cond = std::get_if<CondStmt>(&it)) {
      CondStmt n;
      n.guard = cond->guard;
      n.src_id = cond->src_id;
      n.then_branch = std::make_shared<Chor>(normal_form(*cond->then_branch));
      n.else_branch = std::make_shared<Chor>(normal_form(*cond->else_branch));
      work.items.push_back(std::move(n));
    } else {
      work.items.push_back(it);
    }
  }
  Chor out;
  while (!work.items.empty()) {
    std::set<std::string> blocked;
    std::set<std::string> crossed;
    int best = -1;
    std::string best_key;
    for (size_t i = 0; i < work.items.size(); ++i) {
      const Item& it = work.items[i];
      std::set<std::string> pn = process_names(it);
      std::set<std::string> fn = detail::item_free_names(it);
      bool ready = true;
      for (const auto& n : pn)
        if (blocked.count(n)) ready = false;
      for (const auto& n : fn)
        if (crossed.count(n)) ready = false;
      if (ready) {
        std::string key = detail::item_key(it);
        if (best < 0 || key < best_key) {
          best = static_cast<int>(i);
          best_key = key;
        }
      }
      blocked.insert(pn.begin(), pn.end());
      if (auto b = bound_name(it)) crossed.insert(*b);
    }
    out.items.push_back(work.items[best]);
    work.items.erase(work.items.begin() + best);
  }
  return out;
}

inline std::string config_key(const RuntimeConfig& cfg) {
  std::ostringstream os;
  os << pretty(normal_form(cfg.term)) << "|mem:";
  for (const auto& [p, v] : cfg.memory) os << p << "=" << value_to_string(v) << ";";
  os << "|frames:";
  for (const auto& [k, fs] : cfg.frames)
    os << k << "=(" << fs.sender << ":" << fs.snd.str() << "," << fs.receiver
       << ":" << fs.rcv.str() << ");";
  os << "|graph:";
  for (const auto& n : cfg.graph.nodes) os << n << ",";
  os << "/";
  for (const auto& [a, b] : cfg.graph.edges) os << a << ">" << b << ",";
  os << "|" << setting_name(cfg.setting);
  return os.str();
}

inline std::string fnv64_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// Seeded single-trace execution

struct SchedulerParams {
  std::uint64_t seed = 0;
  double loss_prob = 0.0;
  double send_fail_prob = 0.0;
  double recv_fail_prob = 0.0;
};

struct TraceStep {
  std::string rule;
  std::string detail;
  RuntimeConfig after;
};

struct RunResult {
  std::vector<TraceStep> steps;
  RuntimeConfig final_config;
  std::string terminal;  // terminated | blocked | stuck | max-steps
  std::vector<StuckInfo> diagnostics;
};

inline bool term_is_nil(const Chor& c) { return c.items.empty(); }

inline RunResult run(const RuntimeConfig& initial, const ProcedureSet& defs,
                     const SchedulerParams& params, int max_steps,
                     const guest::FunctionRegistry& reg =
                         guest::default_registry()) {
  RunResult res;
  res.final_config = initial;
  std::mt19937_64 rng(params.seed);
  auto bernoulli = [&](double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
  };

  RuntimeConfig cfg = initial;
  for (int step = 0; step < max_steps; ++step) {
    Chor exposed;
    try {
      exposed = expose(cfg.term, defs);
    } catch (const ExposureOverflow& ex) {
      res.terminal = "stuck";
      res.diagnostics.push_back({"<call>", ex.what()});
      break;
    }
    MoveSet ms = enabled_moves_exposed(cfg, exposed, reg);
    // Failure draws: sends may fail; a receive with no pending payload either
    // times out or blocks; transmissions may lose the payload.
    std::vector<ReductionMove> candidates;
    bool blocked_recv = false;
    for (const auto& m : ms.moves) {
      if (m.rule == "C-Snd") continue;  // paired with its C-SndFail below
      if (m.rule == "C-SndFail") {
        const ReductionMove* snd = nullptr;
        for (const auto& other : ms.moves)
          if (other.rule == "C-Snd" && other.src_id == m.src_id &&
              other.paths == m.paths)
            snd = &other;
        if (snd && !bernoulli(params.send_fail_prob))
          candidates.push_back(*snd);
        else
          candidates.push_back(m);
        continue;
      }
      if (m.rule == "C-RcvFail") {
        if (bernoulli(params.recv_fail_prob))
          candidates.push_back(m);
        else
          blocked_recv = true;
        continue;
      }
      if (m.rule == "C-Comm") {
        bool lossy = cfg.setting == Setting::Unreliable;
        bool lose = lossy && bernoulli(params.loss_prob);
        if (lose) {
          for (const auto& other : ms.moves)
            if (other.rule == "C-Loss" && other.frame == m.frame)
              candidates.push_back(other);
        } else {
          candidates.push_back(m);
        }
        continue;
      }
      if (m.rule == "C-Loss") continue;  // handled with its C-Comm
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
      cfg.term = exposed;
      break;
    }
    size_t pick = candidates.size() == 1
                      ? 0
                      : std::uniform_int_distribution<size_t>(
                            0, candidates.size() - 1)(rng);
    const ReductionMove& mv = candidates[pick];
    cfg = apply_exposed(cfg, exposed, mv, reg);
    res.steps.push_back({mv.rule, mv.describe(), cfg});
  }
  if (res.terminal.empty())
    res.terminal = static_cast<int>(res.steps.size()) >= max_steps
                       ? "max-steps"
                       : "terminated";
  res.final_config = cfg;
  return res;
}

// ---------------------------------------------------------------------------
// Budgeted exhaustive exploration

struct ExploreNode {
  RuntimeConfig config;
  std::map<int, int> failures_used;  // statement src id -> failure count
  std::set<std::string> lost_frames;
  std::vector<StuckInfo> stuck;
  bool terminal = false;  // no enabled moves within budget
};

struct ExploreEdge {
  int from = 0;
  int to = 0;
  std::string rule;
};

struct StateGraph {
  std::vector<ExploreNode> nodes;
  std::vector<ExploreEdge> edges;

  // Nodes grouped by configuration only (budget counters dropped).
  std::map<std::string, std::vector<int>> by_config;

  int project_count() const { return static_cast<int>(by_config.size()); }
};

inline StateGraph explore(const RuntimeConfig& initial, const ProcedureSet& defs,
                          int failure_budget, int max_states = 200000,
                          const guest::FunctionRegistry& reg =
                              guest::default_registry()) {
  StateGraph g;
  std::map<std::string, int> index;
  std::deque<int> frontier;

  auto node_key = [&](const ExploreNode& n) {
    std::ostringstream os;
    os << config_key(n.config) << "|budget:";
    for (const auto& [id, c] : n.failures_used) os << id << "=" << c << ",";
    os << "|lost:";
    for (const auto& k : n.lost_frames) os << k << ",";
    return os.str();
  };

  auto intern = [&](ExploreNode n) {
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

  ExploreNode init;
  init.config = initial;
  init.config.term = normal_form(expose(initial.term, defs));
  auto [root, fresh] = intern(std::move(init));
  (void)root;
  if (fresh) frontier.push_back(0);

  while (!frontier.empty()) {
    int cur = frontier.front();
    frontier.pop_front();
    ExploreNode node = g.nodes[cur];  // copy: intern may reallocate
    Chor exposed = expose(node.config.term, defs);
    MoveSet ms = enabled_moves_exposed(node.config, exposed, reg);
    g.nodes[cur].stuck = ms.stuck;
    int applied = 0;
    for (const auto& m : ms.moves) {
      bool is_fail = m.rule == "C-SndFail" || m.rule == "C-RcvFail";
      if (is_fail) {
        int used = 0;
        auto uit = node.failures_used.find(m.src_id);
        if (uit != node.failures_used.end()) used = uit->second;
        if (used >= failure_budget) continue;
      }
      if (m.rule == "C-Loss" && node.lost_frames.count(m.frame)) continue;
      ExploreNode succ;
      succ.config = apply_exposed(node.config, exposed, m, reg);
      succ.config.term = normal_form(succ.config.term);
      succ.failures_used = node.failures_used;
      succ.lost_frames = node.lost_frames;
      if (is_fail) succ.failures_used[m.src_id]++;
      if (m.rule == "C-Loss") succ.lost_frames.insert(m.frame);
      auto [id, is_new] = intern(std::move(succ));
      g.edges.push_back({cur, id, m.rule});
      if (is_new) frontier.push_back(id);
      ++applied;
    }
    g.nodes[cur].terminal = applied == 0;
  }
  return g;
}

}  // namespace rc::chor
