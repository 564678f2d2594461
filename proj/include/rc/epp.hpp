#pragma once

// Endpoint projection: per-process behaviour extraction, branch merging,
// procedure-set projection, frame mappings, and whole-configuration
// projection onto the process calculus.

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rc/ast.hpp"
#include "rc/chor_runtime.hpp"
#include "rc/pretty.hpp"
#include "rc/proc_ast.hpp"

namespace rc::epp {

struct MergeFailure : std::runtime_error {
  std::string left;
  std::string right;
  MergeFailure(std::string l, std::string r)
      : std::runtime_error("behaviours cannot be merged:\n--- " + l + "\n--- " +
                           r),
        left(std::move(l)),
        right(std::move(r)) {}
};

struct Unprojectable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Frame annotations: payload type and endpoints per frame name in scope.
struct FrameAnn {
  TypeExpr type;
  std::string sender;
  std::string receiver;
};
using FrameAnnotations = std::map<std::string, FrameAnn>;

// Names to sequence numbers; unmapped names stay symbolic.
struct FrameMapping {
  std::map<std::string, int> nums;

  proc::FrameRef ref(const std::string& k) const {
    auto it = nums.find(k);
    if (it == nums.end()) return proc::FrameRef::named(k);
    return proc::FrameRef::id(it->second);
  }
  bool operator==(const FrameMapping& o) const { return nums == o.nums; }
};

// Numeric-suffix-aware name order, so freshened names sort in generation
// order ("k" < "k_2" < "k_10").
inline bool frame_name_less(const std::string& a, const std::string& b) {
  auto split = [](const std::string& s) {
    size_t pos = s.rfind('_');
    if (pos == std::string::npos || pos + 1 >= s.size())
      return std::make_pair(s, -1L);
    for (size_t i = pos + 1; i < s.size(); ++i)
      if (!isdigit(static_cast<unsigned char>(s[i])))
        return std::make_pair(s, -1L);
    return std::make_pair(s.substr(0, pos), std::stol(s.substr(pos + 1)));
  };
  auto [sa, na] = split(a);
  auto [sb, nb] = split(b);
  if (sa != sb) return sa < sb;
  return na < nb;
}

// Per-pair sequential numbering: each frame gets its rank among the frames
// between the same two processes.
inline FrameMapping compatible_mapping(const chor::FrameDict& phi) {
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> pairs;
  for (const auto& [k, fs] : phi) {
    auto key = fs.sender < fs.receiver
                   ? std::make_pair(fs.sender, fs.receiver)
                   : std::make_pair(fs.receiver, fs.sender);
    pairs[key].push_back(k);
  }
  FrameMapping m;
  for (auto& [_, frames] : pairs) {
    std::sort(frames.begin(), frames.end(), frame_name_less);
    for (size_t i = 0; i < frames.size(); ++i)
      m.nums[frames[i]] = static_cast<int>(i) + 1;
  }
  return m;
}

// --- behaviour merging ---------------------------------------------------------

inline proc::Behaviour merge_behaviours(const proc::Behaviour& b1,
                                        const proc::Behaviour& b2);

namespace detail {

inline std::string bdesc(const proc::Behaviour& b) {
  if (b.items.empty()) return "0";
  std::string s = proc::pretty(b);
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

inline std::string idesc(const proc::BItem& it) {
  proc::Behaviour single;
  single.items.push_back(it);
  return bdesc(single);
}

inline proc::BItem merge_items(const proc::BItem& a, const proc::BItem& b) {
  using namespace proc;
  if (a.index() != b.index()) throw MergeFailure(idesc(a), idesc(b));
  if (const auto* ba = std::get_if<BranchB>(&a)) {
    const auto& bb = std::get<BranchB>(b);
    if (ba->peer != bb.peer || !(ba->frame == bb.frame))
      throw MergeFailure(idesc(a), idesc(b));
    BranchB out;
    out.peer = ba->peer;
    out.frame = ba->frame;
    out.src_id = ba->src_id;
    for (const auto& [l, arm] : ba->arms) {
      auto it = bb.arms.find(l);
      if (it == bb.arms.end()) {
        out.arms[l] = arm;
      } else {
        out.arms[l] =
            std::make_shared<Behaviour>(merge_behaviours(*arm, *it->second));
      }
    }
    for (const auto& [l, arm] : bb.arms)
      if (!ba->arms.count(l)) out.arms[l] = arm;
    return out;
  }
  if (const auto* ca = std::get_if<CondB>(&a)) {
    const auto& cb = std::get<CondB>(b);
    if (!(ca->guard == cb.guard)) throw MergeFailure(idesc(a), idesc(b));
    CondB out;
    out.guard = ca->guard;
    out.src_id = ca->src_id;
    out.then_branch = std::make_shared<Behaviour>(
        merge_behaviours(*ca->then_branch, *cb.then_branch));
    out.else_branch = std::make_shared<Behaviour>(
        merge_behaviours(*ca->else_branch, *cb.else_branch));
    return out;
  }
  if (const auto* sa = std::get_if<SpawnB>(&a)) {
    const auto& sb = std::get<SpawnB>(b);
    if (sa->child != sb.child || !(sa->fn == sb.fn))
      throw MergeFailure(idesc(a), idesc(b));
    SpawnB out = *sa;
    out.child_body = std::make_shared<Behaviour>(
        merge_behaviours(*sa->child_body, *sb.child_body));
    return out;
  }
  if (!(a == b)) throw MergeFailure(idesc(a), idesc(b));
  return a;
}

}  // namespace detail

// Homomorphic merge: equal heads merge pointwise; branch terms take the
// union of their labelled alternatives.
inline proc::Behaviour merge_behaviours(const proc::Behaviour& b1,
                                        const proc::Behaviour& b2) {
  if (b1.items.empty() && b2.items.empty()) return {};
  if (b1.items.empty() || b2.items.empty())
    throw MergeFailure(detail::bdesc(b1), detail::bdesc(b2));
  proc::Behaviour out;
  out.items.push_back(detail::merge_items(b1.items[0], b2.items[0]));
  proc::Behaviour r1, r2;
  for (size_t i = 1; i < b1.items.size(); ++i) r1.items.push_back(b1.items[i]);
  for (size_t i = 1; i < b2.items.size(); ++i) r2.items.push_back(b2.items[i]);
  proc::Behaviour rest = merge_behaviours(r1, r2);
  for (auto& it : rest.items) out.items.push_back(std::move(it));
  return out;
}

// --- behaviour projection --------------------------------------------------------

namespace detail {

struct Projector {
  const FrameMapping& m;
  std::string target;
  int fresh_counter = 0;

  proc::Behaviour project(const Chor& c, size_t from, FrameAnnotations ann) {
    proc::Behaviour out;
    for (size_t i = from; i < c.items.size(); ++i) {
      const Item& it = c.items[i];
      if (const auto* np = std::get_if<NewProc>(&it)) {
        if (np->parent == target) {
          proc::SpawnB sp;
          sp.child = np->child;
          sp.fn = np->fn;
          sp.src_id = np->src_id;
          Projector child{m, np->child, 0};
          sp.child_body = std::make_shared<proc::Behaviour>(
              child.project(c, i + 1, ann));
          out.items.push_back(std::move(sp));
        }
        // Everyone else, including the parent, continues with the rest.
        continue;
      }
      if (const auto* nf = std::get_if<NewFrame>(&it)) {
        ann[nf->frame] = FrameAnn{nf->payload, nf->sender, nf->receiver};
        if (target == nf->sender) {
          proc::NewFrameB nb;
          nb.peer = nf->receiver;
          nb.frame = nf->frame;
          nb.src_id = nf->src_id;
          out.items.push_back(std::move(nb));
        } else if (target == nf->receiver) {
          proc::NewFrameB nb;
          nb.peer = nf->sender;
          nb.frame = nf->frame;
          nb.src_id = nf->src_id;
          out.items.push_back(std::move(nb));
        }
        continue;
      }
      if (const auto* ls = std::get_if<LocalStmt>(&it)) {
        if (ls->proc == target) {
          proc::LocalB lb;
          lb.fn = ls->fn;
          lb.src_id = ls->src_id;
          out.items.push_back(std::move(lb));
        }
        continue;
      }
      if (const auto* ss = std::get_if<SendStmt>(&it)) {
        if (ss->subject.proc == target) {
          auto ait = ann.find(ss->frame);
          if (ait == ann.end())
            throw Unprojectable("send on unannotated frame " + ss->frame);
          proc::SendB sb;
          sb.peer = ait->second.receiver;
          sb.frame = m.ref(ss->frame);
          sb.kind = ss->subject.kind;
          sb.fn = ss->subject.fn;
          sb.name = ss->subject.name;
          sb.src_id = ss->src_id;
          out.items.push_back(std::move(sb));
        }
        continue;
      }
      if (const auto* rs = std::get_if<RecvStmt>(&it)) {
        if (rs->subject.proc == target) {
          auto ait = ann.find(rs->frame);
          if (ait == ann.end())
            throw Unprojectable("receive on unannotated frame " + rs->frame);
          proc::RecvB rb;
          rb.peer = ait->second.sender;
          rb.frame = m.ref(rs->frame);
          rb.src_id = rs->src_id;
          if (rs->subject.has_fn) {
            rb.mode = proc::RecvMode::Value;
            rb.fn = rs->subject.fn;
          } else if (ait->second.type.kind == TypeKind::Pid) {
            rb.mode = proc::RecvMode::PidBind;
            rb.bind_pid = "x_" + std::to_string(fresh_counter++);
          } else {
            rb.mode = proc::RecvMode::Label;
          }
          out.items.push_back(std::move(rb));
        }
        continue;
      }
      if (const auto* cs = std::get_if<CallStmt>(&it)) {
        std::string role;
        for (const auto& [formal, actual] : cs->args.procs) {
          if (actual != target) continue;
          if (!role.empty())
            throw Unprojectable("process " + target +
                                " plays several parameters in a call to " +
                                cs->callee);
          role = formal;
        }
        if (!role.empty()) {
          proc::CallB cb;
          cb.callee = cs->callee + "_" + role;
          cb.src_id = cs->src_id;
          for (const auto& [f, a] : cs->args.frames)
            cb.args.frames[f] = m.ref(a).str();
          for (const auto& [f, a] : cs->args.procs)
            if (f != role) cb.args.procs[f] = a;
          for (const auto& [f, a] : cs->args.funcs) cb.args.funcs[f] = a;
          for (const auto& [f, a] : cs->args.labels) cb.args.labels[f] = a;
          out.items.push_back(std::move(cb));
        }
        continue;
      }
      const auto& cond = std::get<CondStmt>(it);
      const Guard& g = cond.guard;
      proc::Behaviour then_b = project(*cond.then_branch, 0, ann);
      proc::Behaviour else_b = project(*cond.else_branch, 0, ann);
      if (g.proc == target) {
        if (g.kind == GuardKind::ReceivedLbl) {
          auto ait = ann.find(g.frame);
          if (ait == ann.end())
            throw Unprojectable("guard on unannotated frame " + g.frame);
          proc::BranchB br;
          br.peer = ait->second.sender;
          br.frame = m.ref(g.frame);
          br.src_id = cond.src_id;
          br.arms[g.label] = std::make_shared<proc::Behaviour>(then_b);
          br.arms[kDefaultLabel] = std::make_shared<proc::Behaviour>(else_b);
          out.items.push_back(std::move(br));
        } else {
          proc::CondB cb;
          cb.src_id = cond.src_id;
          if (g.kind == GuardKind::Expr) {
            cb.guard.kind = proc::PGuardKind::Expr;
            cb.guard.fn = g.fn;
          } else {
            auto ait = ann.find(g.frame);
            if (ait == ann.end())
              throw Unprojectable("guard on unannotated frame " + g.frame);
            cb.guard.kind = proc::PGuardKind::Delivered;
            cb.guard.peer = g.kind == GuardKind::Sent ? ait->second.receiver
                                                      : ait->second.sender;
            cb.guard.frame = m.ref(g.frame);
          }
          cb.then_branch = std::make_shared<proc::Behaviour>(then_b);
          cb.else_branch = std::make_shared<proc::Behaviour>(else_b);
          out.items.push_back(std::move(cb));
        }
      } else {
        proc::Behaviour merged = merge_behaviours(then_b, else_b);
        for (auto& mi : merged.items) out.items.push_back(std::move(mi));
      }
      continue;
    }
    return out;
  }
};

}  // namespace detail

inline proc::Behaviour project_behaviour(const Chor& c,
                                         const FrameAnnotations& ann,
                                         const FrameMapping& m,
                                         const std::string& target) {
  detail::Projector pj{m, target, 0};
  return pj.project(c, 0, ann);
}

// One process-level procedure per process parameter of each definition.
inline proc::ProcDefSet project_procedures(const ProcedureSet& defs) {
  proc::ProcDefSet out;
  FrameMapping id;
  for (const auto& [name, def] : defs) {
    FrameAnnotations ann;
    for (const auto& p : def.params)
      if (p.kind == ParamKind::Frame)
        ann[p.name] = FrameAnn{p.type, p.sender, p.receiver};
    for (const auto& p : def.params) {
      if (p.kind != ParamKind::Proc) continue;
      proc::ProcBehaviourDef pd;
      pd.name = name + "_" + p.name;
      for (const auto& q : def.params) {
        if (q.name == p.name) continue;
        Param kept = q;
        pd.params.push_back(kept);
      }
      pd.body = project_behaviour(def.body, ann, id, p.name);
      out[pd.name] = std::move(pd);
    }
  }
  return out;
}

// --- theta and configuration projection --------------------------------------------

inline proc::Theta project_theta(const chor::FrameDict& phi,
                                 const chor::ConnectionGraph& g,
                                 const FrameMapping& m, const std::string& p) {
  proc::Theta theta;
  for (const auto& [from, to] : g.edges) {
    if (from != p) continue;
    int count = 0;
    for (const auto& [k, fs] : phi) {
      bool between = (fs.sender == p && fs.receiver == to) ||
                     (fs.sender == to && fs.receiver == p);
      if (between) ++count;
    }
    theta.fc[to] = count;
  }
  for (const auto& [k, fs] : phi) {
    auto mit = m.nums.find(k);
    if (mit == m.nums.end()) continue;
    int n = mit->second;
    if (fs.receiver == p && fs.rcv.state == chor::SlotState::Removed &&
        fs.rcv.payload.kind == ValueKind::Lbl)
      theta.lb[{fs.sender, n}] = fs.rcv.payload.s;
    if (fs.sender == p && fs.snd.state != chor::SlotState::Empty)
      theta.fs[{fs.receiver, n}] = true;
    if (fs.receiver == p && fs.rcv.state == chor::SlotState::Removed)
      theta.fs[{fs.sender, n}] = true;
  }
  return theta;
}

// The projection of a runtime configuration: one process per process name in
// the term, plus one in-flight bag per held stack slot.
inline proc::ProcProgram project_configuration(const chor::RuntimeConfig& cfg,
                                               const ProcedureSet& defs,
                                               const FrameMapping& m) {
  proc::ProcProgram out;
  out.defs = project_procedures(defs);

  FrameAnnotations ann;
  for (const auto& [k, info] : cfg.meta.frames) {
    auto fit = cfg.frames.find(k);
    if (fit == cfg.frames.end()) continue;
    ann[k] = FrameAnn{info.type, fit->second.sender, fit->second.receiver};
  }

  for (const auto& r : process_names(cfg.term)) {
    proc::Process pr;
    pr.name = r;
    pr.behaviour = project_behaviour(cfg.term, ann, m, r);
    auto mit = cfg.memory.find(r);
    pr.cell = mit == cfg.memory.end() ? v_unit() : mit->second;
    pr.theta = project_theta(cfg.frames, cfg.graph, m, r);
    out.network.processes.push_back(std::move(pr));
  }
  std::sort(out.network.processes.begin(), out.network.processes.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });

  for (const auto& [k, fs] : cfg.frames) {
    auto mit = m.nums.find(k);
    if (mit == m.nums.end()) continue;
    if (fs.snd.state == chor::SlotState::Holding) {
      proc::Bag bag;
      bag.id = mit->second;
      bag.from = fs.sender;
      bag.to = fs.receiver;
      bag.payload = fs.snd.payload;
      out.network.bags.push_back(std::move(bag));
    }
    if (fs.rcv.state == chor::SlotState::Holding) {
      proc::Bag bag;
      bag.id = mit->second;
      bag.from = fs.sender;
      bag.to = fs.receiver;
      bag.payload = fs.rcv.payload;
      out.network.bags.push_back(std::move(bag));
    }
  }
  std::sort(out.network.bags.begin(), out.network.bags.end(),
            [](const proc::Bag& a, const proc::Bag& b) {
              auto ka = std::tie(a.from, a.to, a.id);
              auto kb = std::tie(b.from, b.to, b.id);
              if (ka != kb) return ka < kb;
              return value_to_string(a.payload) < value_to_string(b.payload);
            });
  return out;
}

}  // namespace rc::epp
