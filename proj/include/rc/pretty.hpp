#pragma once

// Canonical source rendering for both language levels. The printers are the
// inverse of the parsers on well-formed trees and produce deterministic
// output, so they double as canonical term keys.

#include <sstream>
#include <string>

#include "rc/ast.hpp"
#include "rc/proc_ast.hpp"

namespace rc {

inline std::string pretty(const FuncRef& f) {
  if (!f.is_const) return f.name;
  return value_to_string(f.constant);
}

inline std::string pretty(const Guard& g) {
  switch (g.kind) {
    case GuardKind::Expr: return g.proc + "." + pretty(g.fn);
    case GuardKind::Sent: return g.proc + ".sent(" + g.frame + ")";
    case GuardKind::Received: return g.proc + ".received(" + g.frame + ")";
    case GuardKind::ReceivedLbl:
      return g.proc + ".received(" + g.frame + ", " + g.label + ")";
  }
  return "?";
}

inline std::string pretty(const Bindings& args) {
  std::ostringstream os;
  bool first = true;
  auto emit = [&](const std::string& formal, const std::string& actual) {
    if (!first) os << ", ";
    first = false;
    if (formal == actual)
      os << formal;
    else
      os << formal << " := " << actual;
  };
  for (const auto& [k, v] : args.frames) emit(k, v);
  for (const auto& [k, v] : args.procs) emit(k, v);
  for (const auto& [k, v] : args.funcs) emit(k, pretty(v));
  for (const auto& [k, v] : args.labels) emit(k, v);
  return os.str();
}

namespace detail {

inline void pretty_chor(const Chor& c, size_t from, std::ostringstream& os,
                        int indent);

inline void indent_line(std::ostringstream& os, int indent) {
  for (int i = 0; i < indent; ++i) os << "  ";
}

inline void pretty_item(const Chor& c, size_t idx, std::ostringstream& os,
                        int indent) {
  const Item& it = c.items[idx];
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        indent_line(os, indent);
        if constexpr (std::is_same_v<T, LocalStmt>) {
          os << x.proc << "." << pretty(x.fn) << ";\n";
        } else if constexpr (std::is_same_v<T, SendStmt>) {
          os << "send(" << x.frame << ", " << x.subject.proc << ".";
          if (x.subject.kind == SubjectKind::Func)
            os << pretty(x.subject.fn);
          else
            os << x.subject.name;
          os << ");\n";
        } else if constexpr (std::is_same_v<T, RecvStmt>) {
          os << "recv(" << x.frame << ", " << x.subject.proc;
          if (x.subject.has_fn) os << "." << pretty(x.subject.fn);
          os << ");\n";
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          os << x.callee << "(" << pretty(x.args) << ");\n";
        } else if constexpr (std::is_same_v<T, CondStmt>) {
          os << "if " << pretty(x.guard) << " {\n";
          pretty_chor(*x.then_branch, 0, os, indent + 1);
          indent_line(os, indent);
          os << "}";
          if (!x.else_branch->empty()) {
            os << " else {\n";
            pretty_chor(*x.else_branch, 0, os, indent + 1);
            indent_line(os, indent);
            os << "}";
          }
          os << "\n";
        } else if constexpr (std::is_same_v<T, NewProc>) {
          os << "spawn " << x.child << " at " << x.parent << " with "
             << pretty(x.fn) << " in {\n";
          pretty_chor(c, idx + 1, os, indent + 1);
          indent_line(os, indent);
          os << "}\n";
        } else {
          static_assert(std::is_same_v<T, NewFrame>);
          os << "frame " << x.frame << ": " << type_to_string(x.payload)
             << " from " << x.sender << " to " << x.receiver << " in {\n";
          pretty_chor(c, idx + 1, os, indent + 1);
          indent_line(os, indent);
          os << "}\n";
        }
      },
      it);
}

inline void pretty_chor(const Chor& c, size_t from, std::ostringstream& os,
                        int indent) {
  for (size_t i = from; i < c.items.size(); ++i) {
    pretty_item(c, i, os, indent);
    // Binders swallow the rest of the spine into their block.
    if (bound_name(c.items[i])) return;
  }
}

}  // namespace detail

inline std::string pretty(const Chor& c) {
  if (c.items.empty()) return "0\n";
  std::ostringstream os;
  detail::pretty_chor(c, 0, os, 0);
  return os.str();
}

inline std::string pretty(const Param& p) {
  switch (p.kind) {
    case ParamKind::Frame:
      return "frame " + p.name + ": " + type_to_string(p.type) + " from " +
             p.sender + " to " + p.receiver;
    case ParamKind::Proc: return p.name + ": " + type_to_string(p.type);
    case ParamKind::Func:
      if (p.binary)
        return p.name + ": " + type_to_string(p.type) + " * " +
               type_to_string(p.payload) + " -> " + type_to_string(p.result);
      return p.name + ": " + type_to_string(p.type) + " -> " +
             type_to_string(p.result);
    case ParamKind::Label: return "label " + p.name;
  }
  return "?";
}

inline std::string pretty(const ProcDef& d) {
  std::ostringstream os;
  os << "def " << d.name << "(";
  for (size_t i = 0; i < d.params.size(); ++i) {
    if (i) os << ", ";
    os << pretty(d.params[i]);
  }
  os << ") {\n";
  detail::pretty_chor(d.body, 0, os, 1);
  os << "}\n";
  return os.str();
}

inline std::string pretty(const Program& p) {
  std::ostringstream os;
  for (const auto& pd : p.processes) {
    os << "process " << pd.name << ": " << type_to_string(pd.type);
    if (pd.has_init) os << " = " << value_to_string(pd.init);
    os << ";\n";
  }
  for (const auto& cd : p.connections) {
    os << "connect " << cd.from << (cd.bidirectional ? " <-> " : " -> ")
       << cd.to << ";\n";
  }
  for (const auto& [_, d] : p.defs) os << pretty(d) << "\n";
  os << pretty(p.term);
  return os.str();
}

// --- process level -----------------------------------------------------------

namespace proc {

namespace detail {

inline void pretty_b(const Behaviour& b, std::ostringstream& os, int indent);

inline void pretty_bitem(const BItem& it, std::ostringstream& os, int indent) {
  using rc::detail::indent_line;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        indent_line(os, indent);
        if constexpr (std::is_same_v<T, SpawnB>) {
          os << "spawn " << x.child << " with " << pretty(x.fn) << " {\n";
          pretty_b(*x.child_body, os, indent + 1);
          indent_line(os, indent);
          os << "}\n";
        } else if constexpr (std::is_same_v<T, NewFrameB>) {
          os << "new(" << x.peer << ", " << x.frame << ");\n";
        } else if constexpr (std::is_same_v<T, LocalB>) {
          os << "compute(" << pretty(x.fn) << ");\n";
        } else if constexpr (std::is_same_v<T, SendB>) {
          os << "send(" << x.peer << ", " << x.frame.str() << ", ";
          if (x.kind == SubjectKind::Func)
            os << pretty(x.fn);
          else if (x.kind == SubjectKind::Pid)
            os << "pid " << x.name;
          else
            os << "label " << x.name;
          os << ");\n";
        } else if constexpr (std::is_same_v<T, RecvB>) {
          os << "recv(" << x.peer << ", " << x.frame.str();
          if (x.mode == RecvMode::Value)
            os << ", " << pretty(x.fn);
          else if (x.mode == RecvMode::PidBind)
            os << ", pid " << x.bind_pid;
          os << ");\n";
        } else if constexpr (std::is_same_v<T, BranchB>) {
          os << "branch(" << x.peer << ", " << x.frame.str() << ") {\n";
          for (const auto& [l, arm] : x.arms) {
            indent_line(os, indent + 1);
            os << l << ": {\n";
            pretty_b(*arm, os, indent + 2);
            indent_line(os, indent + 1);
            os << "}\n";
          }
          indent_line(os, indent);
          os << "}\n";
        } else if constexpr (std::is_same_v<T, CallB>) {
          os << x.callee << "(" << pretty(x.args) << ");\n";
        } else {
          static_assert(std::is_same_v<T, CondB>);
          os << "if ";
          if (x.guard.kind == PGuardKind::Expr)
            os << pretty(x.guard.fn);
          else
            os << "delivered(" << x.guard.peer << ", " << x.guard.frame.str()
               << ")";
          os << " {\n";
          pretty_b(*x.then_branch, os, indent + 1);
          indent_line(os, indent);
          os << "}";
          if (!x.else_branch->empty()) {
            os << " else {\n";
            pretty_b(*x.else_branch, os, indent + 1);
            indent_line(os, indent);
            os << "}";
          }
          os << "\n";
        }
      },
      it);
}

inline void pretty_b(const Behaviour& b, std::ostringstream& os, int indent) {
  for (const auto& it : b.items) pretty_bitem(it, os, indent);
}

}  // namespace detail

inline std::string pretty(const Behaviour& b) {
  if (b.items.empty()) return "0\n";
  std::ostringstream os;
  detail::pretty_b(b, os, 0);
  return os.str();
}

inline std::string pretty(const ProcBehaviourDef& d) {
  std::ostringstream os;
  os << "def " << d.name << "(";
  for (size_t i = 0; i < d.params.size(); ++i) {
    if (i) os << ", ";
    const Param& p = d.params[i];
    switch (p.kind) {
      case ParamKind::Frame: os << "frame " << p.name; break;
      case ParamKind::Proc: os << "pid " << p.name; break;
      case ParamKind::Func:
        os << p.name << ": " << type_to_string(p.type) << " -> "
           << type_to_string(p.result);
        break;
      case ParamKind::Label: os << "label " << p.name; break;
    }
  }
  os << ") {\n";
  detail::pretty_b(d.body, os, 1);
  os << "}\n";
  return os.str();
}

inline std::string pretty(const Network& n) {
  std::ostringstream os;
  for (const auto& p : n.processes) {
    os << "process " << p.name << " = " << value_to_string(p.cell) << " {\n";
    detail::pretty_b(p.behaviour, os, 1);
    os << "}\n";
  }
  for (const auto& b : n.bags) {
    os << "bag(" << b.id << ", " << b.from << " -> " << b.to << ", "
       << value_to_string(b.payload) << ");\n";
  }
  if (n.processes.empty() && n.bags.empty()) os << "0\n";
  return os.str();
}

inline std::string pretty(const ProcProgram& p) {
  std::ostringstream os;
  for (const auto& [_, d] : p.defs) os << pretty(d) << "\n";
  os << pretty(p.network);
  return os.str();
}

}  // namespace proc
}  // namespace rc
