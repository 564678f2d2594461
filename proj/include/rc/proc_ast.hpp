#pragma once

// Abstract syntax for the target process calculus: per-process behaviours,
// parallel networks, in-transit bags, and the reserved runtime store theta.
//
// Source programs use frame names; the runtime replaces them with numeric
// identifiers allocated per peer pair.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "rc/ast.hpp"
#include "rc/types.hpp"

namespace rc::proc {

// A frame reference: a name in source programs, a number at runtime.
struct FrameRef {
  bool numeric = false;
  std::string name;
  int num = 0;

  static FrameRef named(std::string n) {
    FrameRef f;
    f.name = std::move(n);
    return f;
  }
  static FrameRef id(int n) {
    FrameRef f;
    f.numeric = true;
    f.num = n;
    return f;
  }
  bool operator==(const FrameRef& o) const {
    return numeric == o.numeric && name == o.name && num == o.num;
  }
  bool operator!=(const FrameRef& o) const { return !(*this == o); }
  std::string str() const { return numeric ? std::to_string(num) : name; }
};

struct Behaviour;
using BehaviourPtr = std::shared_ptr<Behaviour>;

struct SpawnB {
  std::string child;
  FuncRef fn;
  BehaviourPtr child_body;
  int src_id = -1;
  bool operator==(const SpawnB& o) const;
};

struct NewFrameB {
  std::string peer;
  std::string frame;  // always a name; numbers are allocated when executed
  int src_id = -1;
  bool operator==(const NewFrameB& o) const {
    return peer == o.peer && frame == o.frame;
  }
};

struct LocalB {
  FuncRef fn;
  int src_id = -1;
  bool operator==(const LocalB& o) const { return fn == o.fn; }
};

struct SendB {
  std::string peer;
  FrameRef frame;
  SubjectKind kind = SubjectKind::Func;
  FuncRef fn;        // Func
  std::string name;  // Pid / Lbl
  int src_id = -1;
  bool operator==(const SendB& o) const {
    return peer == o.peer && frame == o.frame && kind == o.kind && fn == o.fn &&
           name == o.name;
  }
};

enum class RecvMode { Value, PidBind, Label };

struct RecvB {
  std::string peer;
  FrameRef frame;
  RecvMode mode = RecvMode::Value;
  FuncRef fn;            // Value
  std::string bind_pid;  // PidBind: bound in the continuation
  int src_id = -1;
  bool operator==(const RecvB& o) const {
    return peer == o.peer && frame == o.frame && mode == o.mode && fn == o.fn &&
           bind_pid == o.bind_pid;
  }
};

struct BranchB {
  std::string peer;
  FrameRef frame;
  std::map<std::string, BehaviourPtr> arms;  // may include "default"
  int src_id = -1;
  bool operator==(const BranchB& o) const;
};

struct CallB {
  std::string callee;
  Bindings args;
  int src_id = -1;
  bool operator==(const CallB& o) const {
    return callee == o.callee && args == o.args;
  }
};

enum class PGuardKind { Expr, Delivered };

struct PGuard {
  PGuardKind kind = PGuardKind::Expr;
  FuncRef fn;      // Expr, evaluated on the process's own cell
  std::string peer;
  FrameRef frame;  // Delivered
  bool operator==(const PGuard& o) const {
    return kind == o.kind && fn == o.fn && peer == o.peer && frame == o.frame;
  }
};

struct CondB {
  PGuard guard;
  BehaviourPtr then_branch;
  BehaviourPtr else_branch;
  int src_id = -1;
  bool operator==(const CondB& o) const;
};

using BItem = std::variant<SpawnB, NewFrameB, LocalB, SendB, RecvB, BranchB,
                           CallB, CondB>;

struct Behaviour {
  std::vector<BItem> items;
  bool operator==(const Behaviour& o) const { return items == o.items; }
  bool empty() const { return items.empty(); }
};

inline bool SpawnB::operator==(const SpawnB& o) const {
  return child == o.child && fn == o.fn && *child_body == *o.child_body;
}
inline bool BranchB::operator==(const BranchB& o) const {
  if (peer != o.peer || frame != o.frame || arms.size() != o.arms.size())
    return false;
  for (const auto& [l, b] : arms) {
    auto it = o.arms.find(l);
    if (it == o.arms.end() || !(*b == *it->second)) return false;
  }
  return true;
}
inline bool CondB::operator==(const CondB& o) const {
  return guard == o.guard && *then_branch == *o.then_branch &&
         *else_branch == *o.else_branch;
}

// --- procedures and networks -------------------------------------------------

struct ProcBehaviourDef {
  std::string name;
  std::vector<Param> params;  // frames, pids, functions, labels
  Behaviour body;
};

using ProcDefSet = std::map<std::string, ProcBehaviourDef>;

// Runtime-reserved store of a process.
struct Theta {
  std::map<std::string, int> fc;                       // peer -> frame counter
  std::map<std::pair<std::string, int>, std::string> lb;  // (peer,id) -> label
  std::map<std::pair<std::string, int>, bool> fs;      // (peer,id) -> flag

  bool knows(const std::string& peer) const { return fc.count(peer) > 0; }
  bool flag(const std::string& peer, int n) const {
    auto it = fs.find({peer, n});
    return it != fs.end() && it->second;
  }
  std::optional<std::string> label(const std::string& peer, int n) const {
    auto it = lb.find({peer, n});
    if (it == lb.end()) return std::nullopt;
    return it->second;
  }
  bool operator==(const Theta& o) const {
    return fc == o.fc && lb == o.lb && fs == o.fs;
  }
};

struct Process {
  std::string name;
  Behaviour behaviour;
  Value cell;
  Theta theta;
};

struct Bag {
  int id = 0;
  std::string from;
  std::string to;
  Value payload;
  bool operator==(const Bag& o) const {
    return id == o.id && from == o.from && to == o.to && payload == o.payload;
  }
};

struct Network {
  std::vector<Process> processes;  // kept sorted by name
  std::vector<Bag> bags;

  Process* find(const std::string& name) {
    for (auto& p : processes)
      if (p.name == name) return &p;
    return nullptr;
  }
  const Process* find(const std::string& name) const {
    for (const auto& p : processes)
      if (p.name == name) return &p;
    return nullptr;
  }
};

struct ProcProgram {
  ProcDefSet defs;
  Network network;
};

// ---------------------------------------------------------------------------
// Name utilities

inline void all_names(const Behaviour& b, std::set<std::string>& out);

inline void all_names(const BItem& it, std::set<std::string>& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SpawnB>) {
          out.insert(x.child);
          if (!x.fn.is_const) out.insert(x.fn.name);
          all_names(*x.child_body, out);
        } else if constexpr (std::is_same_v<T, NewFrameB>) {
          out.insert(x.peer);
          out.insert(x.frame);
        } else if constexpr (std::is_same_v<T, LocalB>) {
          if (!x.fn.is_const) out.insert(x.fn.name);
        } else if constexpr (std::is_same_v<T, SendB>) {
          out.insert(x.peer);
          if (!x.frame.numeric) out.insert(x.frame.name);
          if (x.kind == SubjectKind::Func) {
            if (!x.fn.is_const) out.insert(x.fn.name);
          } else {
            out.insert(x.name);
          }
        } else if constexpr (std::is_same_v<T, RecvB>) {
          out.insert(x.peer);
          if (!x.frame.numeric) out.insert(x.frame.name);
          if (x.mode == RecvMode::Value && !x.fn.is_const) out.insert(x.fn.name);
          if (x.mode == RecvMode::PidBind) out.insert(x.bind_pid);
        } else if constexpr (std::is_same_v<T, BranchB>) {
          out.insert(x.peer);
          if (!x.frame.numeric) out.insert(x.frame.name);
          for (const auto& [l, arm] : x.arms) {
            out.insert(l);
            all_names(*arm, out);
          }
        } else if constexpr (std::is_same_v<T, CallB>) {
          for (const auto& [_, v] : x.args.frames) out.insert(v);
          for (const auto& [_, v] : x.args.procs) out.insert(v);
          for (const auto& [_, v] : x.args.funcs)
            if (!v.is_const) out.insert(v.name);
          for (const auto& [_, v] : x.args.labels) out.insert(v);
        } else {
          static_assert(std::is_same_v<T, CondB>);
          if (x.guard.kind == PGuardKind::Expr) {
            if (!x.guard.fn.is_const) out.insert(x.guard.fn.name);
          } else {
            out.insert(x.guard.peer);
            if (!x.guard.frame.numeric) out.insert(x.guard.frame.name);
          }
          all_names(*x.then_branch, out);
          all_names(*x.else_branch, out);
        }
      },
      it);
}

inline void all_names(const Behaviour& b, std::set<std::string>& out) {
  for (const auto& it : b.items) all_names(it, out);
}

namespace detail {

struct BSubst {
  std::map<std::string, FrameRef> frames;  // name -> name or number
  std::map<std::string, std::string> procs;
  std::map<std::string, FuncRef> funcs;
  std::map<std::string, std::string> labels;

  FrameRef frame(const FrameRef& f) const {
    if (f.numeric) return f;
    auto it = frames.find(f.name);
    return it == frames.end() ? f : it->second;
  }
  std::string proc(const std::string& p) const {
    auto it = procs.find(p);
    return it == procs.end() ? p : it->second;
  }
  FuncRef func(const FuncRef& f) const {
    if (f.is_const) return f;
    auto it = funcs.find(f.name);
    return it == funcs.end() ? f : it->second;
  }
  std::string label(const std::string& l) const {
    auto it = labels.find(l);
    return it == labels.end() ? l : it->second;
  }
};

inline Behaviour subst(const Behaviour& b, BSubst maps, NameSupply& supply);

inline BItem subst_item(const BItem& it, BSubst& maps, NameSupply& supply) {
  return std::visit(
      [&](const auto& x) -> BItem {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SpawnB>) {
          SpawnB s = x;
          s.fn = maps.func(s.fn);
          s.child_body = std::make_shared<Behaviour>(
              subst(*x.child_body, maps, supply));
          return s;
        } else if constexpr (std::is_same_v<T, NewFrameB>) {
          NewFrameB s = x;
          s.peer = maps.proc(s.peer);
          return s;
        } else if constexpr (std::is_same_v<T, LocalB>) {
          LocalB s = x;
          s.fn = maps.func(s.fn);
          return s;
        } else if constexpr (std::is_same_v<T, SendB>) {
          SendB s = x;
          s.peer = maps.proc(s.peer);
          s.frame = maps.frame(s.frame);
          if (s.kind == SubjectKind::Func)
            s.fn = maps.func(s.fn);
          else if (s.kind == SubjectKind::Pid)
            s.name = maps.proc(s.name);
          else
            s.name = maps.label(s.name);
          return s;
        } else if constexpr (std::is_same_v<T, RecvB>) {
          RecvB s = x;
          s.peer = maps.proc(s.peer);
          s.frame = maps.frame(s.frame);
          if (s.mode == RecvMode::Value) s.fn = maps.func(s.fn);
          return s;
        } else if constexpr (std::is_same_v<T, BranchB>) {
          BranchB s;
          s.src_id = x.src_id;
          s.peer = maps.proc(x.peer);
          s.frame = maps.frame(x.frame);
          for (const auto& [l, arm] : x.arms)
            s.arms[maps.label(l)] =
                std::make_shared<Behaviour>(subst(*arm, maps, supply));
          return s;
        } else if constexpr (std::is_same_v<T, CallB>) {
          CallB s = x;
          for (auto& [_, v] : s.args.frames) {
            FrameRef fr = maps.frame(FrameRef::named(v));
            v = fr.str();  // numeric actuals only arise at runtime
          }
          for (auto& [_, v] : s.args.procs) v = maps.proc(v);
          for (auto& [_, v] : s.args.funcs) v = maps.func(v);
          for (auto& [_, v] : s.args.labels) v = maps.label(v);
          return s;
        } else {
          static_assert(std::is_same_v<T, CondB>);
          CondB s;
          s.src_id = x.src_id;
          s.guard = x.guard;
          if (s.guard.kind == PGuardKind::Expr) {
            s.guard.fn = maps.func(s.guard.fn);
          } else {
            s.guard.peer = maps.proc(s.guard.peer);
            s.guard.frame = maps.frame(s.guard.frame);
          }
          s.then_branch =
              std::make_shared<Behaviour>(subst(*x.then_branch, maps, supply));
          s.else_branch =
              std::make_shared<Behaviour>(subst(*x.else_branch, maps, supply));
          return s;
        }
      },
      it);
}

inline Behaviour subst(const Behaviour& b, BSubst maps, NameSupply& supply) {
  Behaviour out;
  for (const auto& it : b.items) {
    if (const auto* sp = std::get_if<SpawnB>(&it)) {
      std::string fresh = supply.fresh(sp->child);
      maps.procs[sp->child] = fresh;
      BItem renamed = subst_item(it, maps, supply);
      std::get<SpawnB>(renamed).child = fresh;
      out.items.push_back(std::move(renamed));
      continue;
    }
    if (const auto* nf = std::get_if<NewFrameB>(&it)) {
      std::string fresh = supply.fresh(nf->frame);
      maps.frames[nf->frame] = FrameRef::named(fresh);
      BItem renamed = subst_item(it, maps, supply);
      std::get<NewFrameB>(renamed).frame = fresh;
      out.items.push_back(std::move(renamed));
      continue;
    }
    if (const auto* rv = std::get_if<RecvB>(&it)) {
      if (rv->mode == RecvMode::PidBind) {
        std::string fresh = supply.fresh(rv->bind_pid);
        maps.procs[rv->bind_pid] = fresh;
        BItem renamed = subst_item(it, maps, supply);
        std::get<RecvB>(renamed).bind_pid = fresh;
        out.items.push_back(std::move(renamed));
        continue;
      }
    }
    out.items.push_back(subst_item(it, maps, supply));
  }
  return out;
}

}  // namespace detail

// Substitute a numeric identifier for a frame name in a behaviour.
inline Behaviour subst_frame_id(const Behaviour& b, const std::string& frame,
                                int id) {
  detail::BSubst maps;
  maps.frames[frame] = FrameRef::id(id);
  std::set<std::string> used;
  all_names(b, used);
  NameSupply supply(used);
  return detail::subst(b, maps, supply);
}

// Substitute a received process name for a bound one.
inline Behaviour subst_pid(const Behaviour& b, const std::string& bound,
                           const std::string& actual) {
  detail::BSubst maps;
  maps.procs[bound] = actual;
  std::set<std::string> used;
  all_names(b, used);
  used.insert(actual);
  NameSupply supply(used);
  return detail::subst(b, maps, supply);
}

// Unfold a call: substitute actuals into the body with fresh bound names.
inline Behaviour substitute_proc(const Behaviour& body,
                                 const std::vector<Param>& params,
                                 const Bindings& args, NameSupply& supply) {
  std::set<std::string> formal;
  for (const auto& p : params) formal.insert(p.name);
  if (formal != args.domain())
    throw DomainMismatch("call argument domain does not match parameters");
  detail::BSubst maps;
  for (const auto& p : params) {
    switch (p.kind) {
      case ParamKind::Frame: {
        const std::string& v = args.frames.at(p.name);
        bool digits = !v.empty();
        for (char c : v)
          if (!isdigit(static_cast<unsigned char>(c))) digits = false;
        maps.frames[p.name] =
            digits ? FrameRef::id(std::stoi(v)) : FrameRef::named(v);
        break;
      }
      case ParamKind::Proc:
        maps.procs[p.name] = args.procs.at(p.name);
        break;
      case ParamKind::Func:
        maps.funcs[p.name] = args.funcs.at(p.name);
        break;
      case ParamKind::Label:
        maps.labels[p.name] = args.labels.at(p.name);
        break;
    }
  }
  return detail::subst(body, maps, supply);
}

}  // namespace rc::proc
