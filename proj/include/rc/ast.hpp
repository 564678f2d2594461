#pragma once

// Abstract syntax for choreography programs.
//
// A choreography is a flat spine of items; declaration items (frame and
// spawn binders) scope over everything after them in the same spine.
// Conditional branches are nested spines.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rc/types.hpp"

namespace rc {

inline const std::string kDefaultLabel = "default";

struct DomainMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A function position: either a registry name or an inline constant.
struct FuncRef {
  bool is_const = false;
  std::string name;
  Value constant;

  static FuncRef named(std::string n) {
    FuncRef f;
    f.name = std::move(n);
    return f;
  }
  static FuncRef lit(Value v) {
    FuncRef f;
    f.is_const = true;
    f.constant = std::move(v);
    return f;
  }
  bool operator==(const FuncRef& o) const {
    return is_const == o.is_const && name == o.name && constant == o.constant;
  }
  bool operator!=(const FuncRef& o) const { return !(*this == o); }
};

// --- send/receive subjects -------------------------------------------------

enum class SubjectKind { Func, Pid, Lbl };

struct SendSubject {
  std::string proc;
  SubjectKind kind = SubjectKind::Func;
  FuncRef fn;        // Func
  std::string name;  // Pid: process name, Lbl: label name
  bool operator==(const SendSubject& o) const {
    return proc == o.proc && kind == o.kind && fn == o.fn && name == o.name;
  }
};

struct RecvSubject {
  std::string proc;
  bool has_fn = false;  // q.f for value receives; bare q for pid/label
  FuncRef fn;
  bool operator==(const RecvSubject& o) const {
    return proc == o.proc && has_fn == o.has_fn && fn == o.fn;
  }
};

// --- guards ------------------------------------------------------------------

enum class GuardKind { Expr, Sent, Received, ReceivedLbl };

struct Guard {
  GuardKind kind = GuardKind::Expr;
  std::string proc;
  FuncRef fn;         // Expr
  std::string frame;  // Sent / Received / ReceivedLbl
  std::string label;  // ReceivedLbl
  bool operator==(const Guard& o) const {
    return kind == o.kind && proc == o.proc && fn == o.fn && frame == o.frame &&
           label == o.label;
  }
};

// --- call bindings -----------------------------------------------------------

struct Bindings {
  std::map<std::string, std::string> frames;
  std::map<std::string, std::string> procs;
  std::map<std::string, FuncRef> funcs;
  std::map<std::string, std::string> labels;

  bool operator==(const Bindings& o) const {
    return frames == o.frames && procs == o.procs && funcs == o.funcs &&
           labels == o.labels;
  }
  std::set<std::string> domain() const {
    std::set<std::string> d;
    for (auto& [k, _] : frames) d.insert(k);
    for (auto& [k, _] : procs) d.insert(k);
    for (auto& [k, _] : funcs) d.insert(k);
    for (auto& [k, _] : labels) d.insert(k);
    return d;
  }
};

// --- items -------------------------------------------------------------------

struct Chor;

struct LocalStmt {
  std::string proc;
  FuncRef fn;
  int src_id = -1;
  bool operator==(const LocalStmt& o) const {
    return proc == o.proc && fn == o.fn;
  }
};

struct SendStmt {
  std::string frame;
  SendSubject subject;
  int src_id = -1;
  bool operator==(const SendStmt& o) const {
    return frame == o.frame && subject == o.subject;
  }
};

struct RecvStmt {
  std::string frame;
  RecvSubject subject;
  int src_id = -1;
  bool operator==(const RecvStmt& o) const {
    return frame == o.frame && subject == o.subject;
  }
};

struct CallStmt {
  std::string callee;
  Bindings args;
  int src_id = -1;
  bool operator==(const CallStmt& o) const {
    return callee == o.callee && args == o.args;
  }
};

struct CondStmt {
  Guard guard;
  std::shared_ptr<Chor> then_branch;
  std::shared_ptr<Chor> else_branch;
  int src_id = -1;
  bool operator==(const CondStmt& o) const;
};

struct NewProc {  // spawn child at parent with f
  std::string parent;
  std::string child;
  FuncRef fn;
  int src_id = -1;
  bool operator==(const NewProc& o) const {
    return parent == o.parent && child == o.child && fn == o.fn;
  }
};

struct NewFrame {
  std::string frame;
  std::string sender;
  std::string receiver;
  TypeExpr payload;
  int src_id = -1;
  bool operator==(const NewFrame& o) const {
    return frame == o.frame && sender == o.sender && receiver == o.receiver &&
           payload == o.payload;
  }
};

using Item =
    std::variant<LocalStmt, SendStmt, RecvStmt, CallStmt, CondStmt, NewProc,
                 NewFrame>;

struct Chor {
  std::vector<Item> items;
  bool operator==(const Chor& o) const { return items == o.items; }
  bool empty() const { return items.empty(); }
};

inline bool CondStmt::operator==(const CondStmt& o) const {
  return guard == o.guard && *then_branch == *o.then_branch &&
         *else_branch == *o.else_branch;
}

inline Item cond_item(Guard g, Chor t, Chor e) {
  CondStmt c;
  c.guard = std::move(g);
  c.then_branch = std::make_shared<Chor>(std::move(t));
  c.else_branch = std::make_shared<Chor>(std::move(e));
  return c;
}

// --- procedure definitions -----------------------------------------------------

enum class ParamKind { Frame, Proc, Func, Label };

struct Param {
  ParamKind kind = ParamKind::Proc;
  std::string name;
  TypeExpr type;           // Frame payload / Proc cell type / Func first arg
  TypeExpr payload;        // Func second arg (binary receive combiners)
  TypeExpr result;         // Func result
  bool binary = false;     // Func arity
  std::string sender;      // Frame
  std::string receiver;    // Frame
  bool operator==(const Param& o) const {
    return kind == o.kind && name == o.name && type == o.type &&
           payload == o.payload && result == o.result && binary == o.binary &&
           sender == o.sender && receiver == o.receiver;
  }
};

struct ProcDef {
  std::string name;
  std::vector<Param> params;
  Chor body;
};

using ProcedureSet = std::map<std::string, ProcDef>;

// --- top-level program ---------------------------------------------------------

struct ProcessDecl {
  std::string name;
  TypeExpr type;
  Value init;
  bool has_init = false;
};

struct ConnectDecl {
  std::string from;
  std::string to;
  bool bidirectional = true;
};

struct Program {
  ProcedureSet defs;
  std::vector<ProcessDecl> processes;
  std::vector<ConnectDecl> connections;
  bool has_connect_decls = false;
  Chor term;
};

// ---------------------------------------------------------------------------
// Name queries

namespace detail {
inline void add_func_names(const FuncRef& f, std::set<std::string>& out) {
  if (!f.is_const) out.insert(f.name);
}
}  // namespace detail

inline void process_names(const Chor& c, std::set<std::string>& out);

inline void process_names(const Item& it, std::set<std::string>& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LocalStmt>) {
          out.insert(x.proc);
        } else if constexpr (std::is_same_v<T, SendStmt>) {
          out.insert(x.subject.proc);
          if (x.subject.kind == SubjectKind::Pid) out.insert(x.subject.name);
        } else if constexpr (std::is_same_v<T, RecvStmt>) {
          out.insert(x.subject.proc);
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          for (const auto& [_, p] : x.args.procs) out.insert(p);
        } else if constexpr (std::is_same_v<T, CondStmt>) {
          out.insert(x.guard.proc);
          process_names(*x.then_branch, out);
          process_names(*x.else_branch, out);
        } else if constexpr (std::is_same_v<T, NewProc>) {
          out.insert(x.parent);
          out.insert(x.child);
        } else if constexpr (std::is_same_v<T, NewFrame>) {
          out.insert(x.sender);
          out.insert(x.receiver);
        }
      },
      it);
}

inline void process_names(const Guard& g, std::set<std::string>& out) {
  out.insert(g.proc);
}

inline void process_names(const Chor& c, std::set<std::string>& out) {
  for (const auto& it : c.items) process_names(it, out);
}

inline std::set<std::string> process_names(const Chor& c) {
  std::set<std::string> out;
  process_names(c, out);
  return out;
}

inline std::set<std::string> process_names(const Item& it) {
  std::set<std::string> out;
  process_names(it, out);
  return out;
}

inline std::set<std::string> process_names(const Guard& g) {
  return {g.proc};
}

// All names occurring in an item, any class (used for capture checks and
// fresh-name generation).
inline void all_names(const Chor& c, std::set<std::string>& out);

inline void all_names(const Item& it, std::set<std::string>& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LocalStmt>) {
          out.insert(x.proc);
          detail::add_func_names(x.fn, out);
        } else if constexpr (std::is_same_v<T, SendStmt>) {
          out.insert(x.frame);
          out.insert(x.subject.proc);
          if (x.subject.kind == SubjectKind::Func)
            detail::add_func_names(x.subject.fn, out);
          else
            out.insert(x.subject.name);
        } else if constexpr (std::is_same_v<T, RecvStmt>) {
          out.insert(x.frame);
          out.insert(x.subject.proc);
          if (x.subject.has_fn) detail::add_func_names(x.subject.fn, out);
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          for (const auto& [_, v] : x.args.frames) out.insert(v);
          for (const auto& [_, v] : x.args.procs) out.insert(v);
          for (const auto& [_, v] : x.args.funcs) detail::add_func_names(v, out);
          for (const auto& [_, v] : x.args.labels) out.insert(v);
        } else if constexpr (std::is_same_v<T, CondStmt>) {
          out.insert(x.guard.proc);
          if (x.guard.kind == GuardKind::Expr)
            detail::add_func_names(x.guard.fn, out);
          else
            out.insert(x.guard.frame);
          if (x.guard.kind == GuardKind::ReceivedLbl) out.insert(x.guard.label);
          all_names(*x.then_branch, out);
          all_names(*x.else_branch, out);
        } else if constexpr (std::is_same_v<T, NewProc>) {
          out.insert(x.parent);
          out.insert(x.child);
          detail::add_func_names(x.fn, out);
        } else if constexpr (std::is_same_v<T, NewFrame>) {
          out.insert(x.frame);
          out.insert(x.sender);
          out.insert(x.receiver);
        }
      },
      it);
}

inline void all_names(const Chor& c, std::set<std::string>& out) {
  for (const auto& it : c.items) all_names(it, out);
}

inline std::set<std::string> all_names(const Chor& c) {
  std::set<std::string> out;
  all_names(c, out);
  return out;
}

inline void all_names(const ProcedureSet& defs, std::set<std::string>& out) {
  for (const auto& [name, def] : defs) {
    out.insert(name);
    for (const auto& p : def.params) {
      out.insert(p.name);
      if (p.kind == ParamKind::Frame) {
        out.insert(p.sender);
        out.insert(p.receiver);
      }
    }
    all_names(def.body, out);
  }
}

// The name bound by a declaration item, if any.
inline std::optional<std::string> bound_name(const Item& it) {
  if (const auto* np = std::get_if<NewProc>(&it)) return np->child;
  if (const auto* nf = std::get_if<NewFrame>(&it)) return nf->frame;
  return std::nullopt;
}

// Frame names referenced by an item, without binding occurrences.
inline void frame_names(const Chor& c, std::set<std::string>& out);

inline void frame_names(const Item& it, std::set<std::string>& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SendStmt>) {
          out.insert(x.frame);
        } else if constexpr (std::is_same_v<T, RecvStmt>) {
          out.insert(x.frame);
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          for (const auto& [_, v] : x.args.frames) out.insert(v);
        } else if constexpr (std::is_same_v<T, CondStmt>) {
          if (x.guard.kind != GuardKind::Expr) out.insert(x.guard.frame);
          frame_names(*x.then_branch, out);
          frame_names(*x.else_branch, out);
        }
      },
      it);
}

inline void frame_names(const Chor& c, std::set<std::string>& out) {
  for (const auto& it : c.items) frame_names(it, out);
}

// Frame names free in the spine (not bound by an enclosing or earlier
// declaration).
inline std::set<std::string> free_frame_names(const Chor& c) {
  std::set<std::string> free;
  std::function<void(const Chor&, std::set<std::string>)> walk =
      [&](const Chor& spine, std::set<std::string> scope) {
        for (const auto& it : spine.items) {
          std::set<std::string> here;
          if (const auto* cs = std::get_if<CondStmt>(&it)) {
            if (cs->guard.kind != GuardKind::Expr) here.insert(cs->guard.frame);
            walk(*cs->then_branch, scope);
            walk(*cs->else_branch, scope);
          } else {
            frame_names(it, here);
          }
          for (const auto& k : here)
            if (!scope.count(k)) free.insert(k);
          if (const auto* nf = std::get_if<NewFrame>(&it)) scope.insert(nf->frame);
        }
      };
  walk(c, {});
  return free;
}

// Process names free in the spine (spawned children are bound).
inline std::set<std::string> free_process_names(const Chor& c) {
  std::set<std::string> bound;
  std::set<std::string> free;
  for (const auto& it : c.items) {
    for (const auto& p : process_names(it))
      if (!bound.count(p)) free.insert(p);
    if (const auto* np = std::get_if<NewProc>(&it)) {
      free.erase(np->child);
      bound.insert(np->child);
    }
  }
  return free;
}

// Label literals occurring anywhere in the spine.
inline void label_names(const Chor& c, std::set<std::string>& out) {
  for (const auto& it : c.items) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, SendStmt>) {
            if (x.subject.kind == SubjectKind::Lbl) out.insert(x.subject.name);
          } else if constexpr (std::is_same_v<T, CallStmt>) {
            for (const auto& [_, v] : x.args.labels) out.insert(v);
          } else if constexpr (std::is_same_v<T, CondStmt>) {
            if (x.guard.kind == GuardKind::ReceivedLbl) out.insert(x.guard.label);
            label_names(*x.then_branch, out);
            label_names(*x.else_branch, out);
          }
        },
        it);
  }
}

// Free names of an item spine: all names minus those bound by earlier binders.
inline std::set<std::string> free_names(const Chor& c) {
  std::set<std::string> bound;
  std::set<std::string> free;
  for (const auto& it : c.items) {
    std::set<std::string> names;
    all_names(it, names);
    if (const auto* cs = std::get_if<CondStmt>(&it)) {
      // Bound names inside branches are not free.
      names.clear();
      names.insert(cs->guard.proc);
      if (cs->guard.kind == GuardKind::Expr)
        detail::add_func_names(cs->guard.fn, names);
      else
        names.insert(cs->guard.frame);
      if (cs->guard.kind == GuardKind::ReceivedLbl) names.insert(cs->guard.label);
      for (const auto& n : free_names(*cs->then_branch)) names.insert(n);
      for (const auto& n : free_names(*cs->else_branch)) names.insert(n);
    }
    if (auto b = bound_name(it)) {
      names.erase(*b);  // the binding occurrence itself is not free
      bound.insert(*b);
    }
    for (const auto& n : names)
      if (!bound.count(n)) free.insert(n);
  }
  return free;
}

// ---------------------------------------------------------------------------
// Substitution

// Generates names of the form base_N, skipping anything already used.
class NameSupply {
 public:
  explicit NameSupply(std::set<std::string> used) : used_(std::move(used)) {}

  std::string fresh(const std::string& base) {
    std::string stem = base;
    auto pos = stem.rfind('_');
    if (pos != std::string::npos && pos + 1 < stem.size()) {
      bool digits = true;
      for (size_t i = pos + 1; i < stem.size(); ++i)
        if (!isdigit(static_cast<unsigned char>(stem[i]))) digits = false;
      if (digits) stem = stem.substr(0, pos);
    }
    for (int n = counters_[stem] + 1;; ++n) {
      std::string cand = stem + "_" + std::to_string(n);
      if (!used_.count(cand)) {
        counters_[stem] = n;
        used_.insert(cand);
        return cand;
      }
    }
  }

  void mark_used(const std::string& n) { used_.insert(n); }

 private:
  std::set<std::string> used_;
  std::map<std::string, int> counters_;
};

namespace detail {

struct SubstMaps {
  std::map<std::string, std::string> frames;
  std::map<std::string, std::string> procs;
  std::map<std::string, FuncRef> funcs;
  std::map<std::string, std::string> labels;

  std::string frame(const std::string& k) const {
    auto it = frames.find(k);
    return it == frames.end() ? k : it->second;
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

inline Chor subst_chor(const Chor& c, SubstMaps maps, NameSupply& supply);

inline Item subst_item(const Item& it, SubstMaps& maps, NameSupply& supply) {
  return std::visit(
      [&](const auto& x) -> Item {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LocalStmt>) {
          LocalStmt s = x;
          s.proc = maps.proc(s.proc);
          s.fn = maps.func(s.fn);
          return s;
        } else if constexpr (std::is_same_v<T, SendStmt>) {
          SendStmt s = x;
          s.frame = maps.frame(s.frame);
          s.subject.proc = maps.proc(s.subject.proc);
          if (s.subject.kind == SubjectKind::Func)
            s.subject.fn = maps.func(s.subject.fn);
          else if (s.subject.kind == SubjectKind::Pid)
            s.subject.name = maps.proc(s.subject.name);
          else
            s.subject.name = maps.label(s.subject.name);
          return s;
        } else if constexpr (std::is_same_v<T, RecvStmt>) {
          RecvStmt s = x;
          s.frame = maps.frame(s.frame);
          s.subject.proc = maps.proc(s.subject.proc);
          if (s.subject.has_fn) s.subject.fn = maps.func(s.subject.fn);
          return s;
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          CallStmt s = x;
          for (auto& [_, v] : s.args.frames) v = maps.frame(v);
          for (auto& [_, v] : s.args.procs) v = maps.proc(v);
          for (auto& [_, v] : s.args.funcs) v = maps.func(v);
          for (auto& [_, v] : s.args.labels) v = maps.label(v);
          return s;
        } else if constexpr (std::is_same_v<T, CondStmt>) {
          CondStmt s;
          s.src_id = x.src_id;
          s.guard = x.guard;
          s.guard.proc = maps.proc(s.guard.proc);
          if (s.guard.kind == GuardKind::Expr)
            s.guard.fn = maps.func(s.guard.fn);
          else
            s.guard.frame = maps.frame(s.guard.frame);
          if (s.guard.kind == GuardKind::ReceivedLbl)
            s.guard.label = maps.label(s.guard.label);
          s.then_branch =
              std::make_shared<Chor>(subst_chor(*x.then_branch, maps, supply));
          s.else_branch =
              std::make_shared<Chor>(subst_chor(*x.else_branch, maps, supply));
          return s;
        } else if constexpr (std::is_same_v<T, NewProc>) {
          NewProc s = x;
          s.parent = maps.proc(s.parent);
          s.fn = maps.func(s.fn);
          return s;
        } else {
          static_assert(std::is_same_v<T, NewFrame>);
          NewFrame s = x;
          s.sender = maps.proc(s.sender);
          s.receiver = maps.proc(s.receiver);
          return s;
        }
      },
      it);
}

inline Chor subst_chor(const Chor& c, SubstMaps maps, NameSupply& supply) {
  Chor out;
  for (const auto& it : c.items) {
    // Binders are freshened before substituting in their scope.
    if (const auto* np = std::get_if<NewProc>(&it)) {
      std::string fresh = supply.fresh(np->child);
      maps.procs[np->child] = fresh;
      Item renamed = subst_item(it, maps, supply);
      std::get<NewProc>(renamed).child = fresh;
      out.items.push_back(std::move(renamed));
      continue;
    }
    if (const auto* nf = std::get_if<NewFrame>(&it)) {
      std::string fresh = supply.fresh(nf->frame);
      maps.frames[nf->frame] = fresh;
      Item renamed = subst_item(it, maps, supply);
      std::get<NewFrame>(renamed).frame = fresh;
      out.items.push_back(std::move(renamed));
      continue;
    }
    out.items.push_back(subst_item(it, maps, supply));
  }
  return out;
}

}  // namespace detail

// Capture-avoiding substitution of actual arguments into a procedure body.
// `params` gives the formal parameter set; the bindings' domain must match
// it exactly.
inline Chor substitute(const Chor& body, const std::vector<Param>& params,
                       const Bindings& args, NameSupply& supply) {
  std::set<std::string> formal;
  for (const auto& p : params) formal.insert(p.name);
  std::set<std::string> actual_domain = args.domain();
  if (formal != actual_domain) {
    std::string msg = "argument domain mismatch: expected {";
    for (const auto& n : formal) msg += n + " ";
    msg += "} got {";
    for (const auto& n : actual_domain) msg += n + " ";
    msg += "}";
    throw DomainMismatch(msg);
  }
  detail::SubstMaps maps;
  for (const auto& p : params) {
    switch (p.kind) {
      case ParamKind::Frame: {
        auto it = args.frames.find(p.name);
        if (it == args.frames.end())
          throw DomainMismatch("parameter " + p.name + " needs a frame binding");
        maps.frames[p.name] = it->second;
        break;
      }
      case ParamKind::Proc: {
        auto it = args.procs.find(p.name);
        if (it == args.procs.end())
          throw DomainMismatch("parameter " + p.name +
                               " needs a process binding");
        maps.procs[p.name] = it->second;
        break;
      }
      case ParamKind::Func: {
        auto it = args.funcs.find(p.name);
        if (it == args.funcs.end())
          throw DomainMismatch("parameter " + p.name +
                               " needs a function binding");
        maps.funcs[p.name] = it->second;
        break;
      }
      case ParamKind::Label: {
        auto it = args.labels.find(p.name);
        if (it == args.labels.end())
          throw DomainMismatch("parameter " + p.name + " needs a label binding");
        maps.labels[p.name] = it->second;
        break;
      }
    }
  }
  return detail::subst_chor(body, maps, supply);
}

}  // namespace rc
