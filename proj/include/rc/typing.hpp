#pragma once

// The network type system: abstract frame dictionaries over slot sets,
// typing environments, forward checking of choreographies as network
// transformers, minimal-type inference, and runtime-configuration checking.
//
// Checking runs the rules forward over the term, statement by statement,
// trying alternative ready statements when the textual order is untypable
// (scheduling alternatives are typed, not just the written order).

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rc/ast.hpp"
#include "rc/chor_runtime.hpp"
#include "rc/guest.hpp"
#include "rc/pretty.hpp"

namespace rc::typing {

struct PayloadDisagreement : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- abstract slots ------------------------------------------------------------

enum class SlotKind { Bot, Dot, Pid, Lbl };

struct AbstractSlot {
  SlotKind kind = SlotKind::Bot;
  std::string name;  // Pid / Lbl

  static AbstractSlot bot() { return {}; }
  static AbstractSlot dot() { return {SlotKind::Dot, ""}; }
  static AbstractSlot pid(std::string p) { return {SlotKind::Pid, std::move(p)}; }
  static AbstractSlot lbl(std::string l) { return {SlotKind::Lbl, std::move(l)}; }

  bool operator==(const AbstractSlot& o) const {
    return kind == o.kind && name == o.name;
  }
  bool operator<(const AbstractSlot& o) const {
    if (kind != o.kind) return kind < o.kind;
    return name < o.name;
  }
  std::string str() const {
    switch (kind) {
      case SlotKind::Bot: return "_";
      case SlotKind::Dot: return "*";
      case SlotKind::Pid: return "pid " + name;
      case SlotKind::Lbl: return "lbl " + name;
    }
    return "?";
  }
};

using SlotSet = std::set<AbstractSlot>;

inline std::string slot_set_str(const SlotSet& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& a : s) {
    if (!first) out += ",";
    first = false;
    out += a.str();
  }
  return out + "}";
}

struct AbstractFrame {
  SlotSet snd{AbstractSlot::bot()};
  SlotSet rcv{AbstractSlot::bot()};
  bool operator==(const AbstractFrame& o) const {
    return snd == o.snd && rcv == o.rcv;
  }
  std::string str() const {
    return "<" + slot_set_str(snd) + "," + slot_set_str(rcv) + ">";
  }
};

using AbstractFrameDict = std::map<std::string, AbstractFrame>;

struct NetworkType {
  AbstractFrameDict frames;
  chor::ConnectionGraph graph;
  bool operator==(const NetworkType& o) const {
    return frames == o.frames && graph == o.graph;
  }
};

// --- slot abstraction -----------------------------------------------------------

inline AbstractSlot payload_abstraction(const Value& v) {
  if (v.kind == ValueKind::Pid) return AbstractSlot::pid(v.s);
  if (v.kind == ValueKind::Lbl) return AbstractSlot::lbl(v.s);
  return AbstractSlot::dot();
}

// Sender view: a payload is visible whether or not transmission removed it.
inline AbstractSlot alpha_s(const chor::StackSlot& s) {
  if (s.state == chor::SlotState::Empty) return AbstractSlot::bot();
  return payload_abstraction(s.payload);
}

// Receiver view: only a delivered (removed) payload is visible.
inline AbstractSlot alpha_r(const chor::StackSlot& s) {
  if (s.state != chor::SlotState::Removed) return AbstractSlot::bot();
  return payload_abstraction(s.payload);
}

// --- merging --------------------------------------------------------------------

// Pointwise union; the merged set may name at most one payload.
inline SlotSet merge_slots(const SlotSet& a, const SlotSet& b) {
  SlotSet out = a;
  out.insert(b.begin(), b.end());
  int payloads = 0;
  for (const auto& s : out)
    if (s.kind != SlotKind::Bot) ++payloads;
  if (payloads > 1)
    throw PayloadDisagreement("merged slot set " + slot_set_str(out) +
                              " names more than one payload");
  return out;
}

inline AbstractFrameDict merge_frames(const AbstractFrameDict& a,
                                      const AbstractFrameDict& b) {
  if (a.size() != b.size())
    throw PayloadDisagreement("merged frame dictionaries differ in domain");
  AbstractFrameDict out;
  for (const auto& [k, fa] : a) {
    auto it = b.find(k);
    if (it == b.end())
      throw PayloadDisagreement("merged frame dictionaries differ in domain");
    out[k] = AbstractFrame{merge_slots(fa.snd, it->second.snd),
                           merge_slots(fa.rcv, it->second.rcv)};
  }
  return out;
}

// --- environments ---------------------------------------------------------------

struct FrameDecl {
  TypeExpr type;
  std::string sender;
  std::string receiver;
};

struct TypingEnv {
  std::map<std::string, TypeExpr> procs;
  std::map<std::string, FrameDecl> frames;
  std::set<std::string> labels;

  std::string key() const {
    std::ostringstream os;
    for (const auto& [p, t] : procs) os << p << ":" << type_to_string(t) << ";";
    os << "/";
    for (const auto& [k, d] : frames)
      os << k << ":" << type_to_string(d.type) << ":" << d.sender << ">"
         << d.receiver << ";";
    os << "/";
    for (const auto& l : labels) os << l << ",";
    return os.str();
  }
};

// Does an abstract payload agree with a frame's declared payload type?
inline bool slot_fits_type(const AbstractSlot& s, const TypeExpr& t) {
  switch (s.kind) {
    case SlotKind::Bot: return true;
    case SlotKind::Dot: return t.kind != TypeKind::Pid && t.kind != TypeKind::Lbl;
    case SlotKind::Pid: return t.kind == TypeKind::Pid;
    case SlotKind::Lbl: return t.kind == TypeKind::Lbl;
  }
  return false;
}

// Well-formedness of a network type under an environment; returns the list
// of violations (empty = well-formed).
inline std::vector<std::string> wellformed_violations(const TypingEnv& env,
                                                      const NetworkType& n) {
  std::vector<std::string> out;
  for (const auto& [k, d] : env.frames) {
    if (!n.graph.bidirectional(d.sender, d.receiver))
      out.push_back("frame " + k + ": endpoints not mutually connected");
    auto it = n.frames.find(k);
    if (it == n.frames.end()) {
      out.push_back("frame " + k + ": missing from the frame dictionary");
      continue;
    }
    for (const auto& side : {it->second.snd, it->second.rcv})
      for (const auto& s : side)
        if (!slot_fits_type(s, d.type))
          out.push_back("frame " + k + ": slot " + s.str() +
                        " does not fit payload type " + type_to_string(d.type));
  }
  for (const auto& [p, _] : env.procs)
    if (!n.graph.nodes.count(p))
      out.push_back("process " + p + ": not a node of the connection graph");
  for (const auto& [k, f] : n.frames) {
    if (!env.frames.count(k)) {
      out.push_back("frame " + k + ": not declared in the environment");
      continue;
    }
    for (const auto& side : {f.snd, f.rcv})
      for (const auto& s : side)
        if (s.kind == SlotKind::Pid && !n.graph.nodes.count(s.name))
          out.push_back("frame " + k + ": payload process " + s.name +
                        " not in the graph");
  }
  for (const auto& node : n.graph.nodes)
    if (!env.procs.count(node))
      out.push_back("node " + node + ": not declared in the environment");
  return out;
}

// Gamma |- phi, G : <F, G'>  for concrete runtime state.
inline bool check_network(const TypingEnv& env, const chor::FrameDict& phi,
                          const chor::ConnectionGraph& g,
                          const NetworkType& nominal,
                          std::vector<std::string>* diagnostics = nullptr) {
  auto report = [&](const std::string& msg) {
    if (diagnostics) diagnostics->push_back(msg);
  };
  bool ok = true;
  for (const auto& [k, d] : env.frames) {
    auto nit = nominal.frames.find(k);
    if (nit == nominal.frames.end()) continue;
    auto pit = phi.find(k);
    if (pit == phi.end()) {
      report("frame " + k + ": no runtime state");
      ok = false;
      continue;
    }
    const chor::FrameState& fs = pit->second;
    if (fs.sender != d.sender || fs.receiver != d.receiver) {
      report("frame " + k + ": endpoint mismatch");
      ok = false;
    }
    if (!nit->second.snd.count(alpha_s(fs.snd))) {
      report("frame " + k + ": sender slot " + alpha_s(fs.snd).str() +
             " not in " + slot_set_str(nit->second.snd));
      ok = false;
    }
    if (!nit->second.rcv.count(alpha_r(fs.rcv))) {
      report("frame " + k + ": receiver slot " + alpha_r(fs.rcv).str() +
             " not in " + slot_set_str(nit->second.rcv));
      ok = false;
    }
    for (const chor::StackSlot* slot : {&fs.snd, &fs.rcv}) {
      if (slot->state == chor::SlotState::Empty) continue;
      if (slot->payload.kind == ValueKind::Pid ||
          slot->payload.kind == ValueKind::Lbl)
        continue;
      if (!inhabits(slot->payload, d.type)) {
        report("frame " + k + ": payload " + value_to_string(slot->payload) +
               " does not inhabit " + type_to_string(d.type));
        ok = false;
      }
    }
  }
  if (!g.subgraph_of(nominal.graph)) {
    report("runtime connections exceed the nominal graph");
    ok = false;
  }
  return ok;
}

// --- checking -------------------------------------------------------------------

struct Rejection {
  std::string statement;
  std::string rule;
  std::string reason;
};

struct TypeFail {
  Rejection rejection;
};

struct Judgement {
  NetworkType pre;
  NetworkType post;
};

struct CheckResult {
  bool ok = false;
  Judgement judgement;
  Rejection rejection;
  // Slot sets of every bound frame at the end of its scope, keyed by the
  // declaring statement's source id; joined over call instances.
  std::map<int, AbstractFrame> frame_exit;
  std::map<int, std::string> frame_exit_names;
  int derivation_size = 0;
  std::vector<std::string> derivation;
};

inline std::string state_key(const NetworkType& n) {
  std::ostringstream os;
  for (const auto& [k, f] : n.frames) os << k << f.str() << ";";
  os << "/";
  for (const auto& [a, b] : n.graph.edges) os << a << ">" << b << ",";
  os << "/";
  for (const auto& a : n.graph.nodes) os << a << ",";
  return os.str();
}

class Checker {
 public:
  Checker(const Program& prog, chor::Setting setting,
          const guest::FunctionRegistry& reg = guest::default_registry())
      : prog_(prog), setting_(setting), reg_(reg) {}

  CheckResult check() {
    CheckResult res;
    TypingEnv env = base_env();
    NetworkType n0 = initial_network(env);
    try {
      auto post = type_items(prog_.term.items, env, n0);
      check_uncalled_procedures();
      res.ok = true;
      res.judgement.pre = n0;
      res.judgement.post = post ? *post : n0;
    } catch (const TypeFail& f) {
      res.ok = false;
      res.rejection = f.rejection;
    }
    res.frame_exit = frame_exit_;
    res.frame_exit_names = frame_exit_names_;
    res.derivation = derivation_;
    res.derivation_size = static_cast<int>(derivation_.size());
    return res;
  }

  // Types a runtime configuration against its recorded declarations. The
  // abstract pre-state starts from the exact slot abstractions and is
  // widened on demand when a guard split or receive needs a larger set.
  bool check_runtime(const chor::RuntimeConfig& cfg, std::string* why = nullptr) {
    TypingEnv env = runtime_env(cfg);
    // Memory typing.
    for (const auto& [p, t] : env.procs) {
      auto mit = cfg.memory.find(p);
      if (mit == cfg.memory.end() || !inhabits(mit->second, t)) {
        if (why) *why = "memory cell of " + p + " does not inhabit its type";
        return false;
      }
    }
    std::vector<std::string> candidates_reasons;
    for (const NetworkType& n1 : runtime_pre_candidates(cfg, env)) {
      std::vector<std::string> diags;
      if (!check_network(env, cfg.frames, cfg.graph, n1, &diags)) continue;
      derivation_.clear();
      memo_.clear();
      try {
        type_items(cfg.term.items, env, n1);
        return true;
      } catch (const TypeFail& f) {
        candidates_reasons.push_back(f.rejection.reason);
      }
    }
    if (why)
      *why = candidates_reasons.empty()
                 ? "no pre-state candidate matches the runtime state"
                 : candidates_reasons.front();
    return false;
  }

  // Types a bare term from a given environment and pre-state. Throws
  // TypeFail on rejection; a nullopt result means no typing path returns.
  std::optional<NetworkType> type_term(const Chor& term, TypingEnv env,
                                       NetworkType n) {
    return type_items(term.items, env, n);
  }

  TypingEnv base_env() {
    TypingEnv env;
    for (const auto& [p, t] : chor::infer_process_types(prog_, reg_))
      env.procs[p] = t;
    label_names(prog_.term, env.labels);
    for (const auto& [_, d] : prog_.defs) {
      label_names(d.body, env.labels);
      for (const auto& p : d.params)
        if (p.kind == ParamKind::Label) env.labels.insert(p.name);
    }
    return env;
  }

  NetworkType initial_network(const TypingEnv& env) {
    NetworkType n;
    chor::RuntimeConfig cfg = chor::initial_config(prog_, setting_, reg_);
    n.graph = cfg.graph;
    for (const auto& [p, _] : env.procs) n.graph.add_node(p);
    return n;
  }

 private:
  const Program& prog_;
  chor::Setting setting_;
  const guest::FunctionRegistry& reg_;

  std::map<int, AbstractFrame> frame_exit_;
  std::map<int, std::string> frame_exit_names_;
  std::vector<std::string> derivation_;

  // Procedure typing instances: name + formal pre -> formal post.
  std::map<std::string, std::optional<NetworkType>> proc_memo_;
  std::set<std::string> proc_in_progress_;

  // Judgement memo for scheduling alternatives.
  struct MemoEntry {
    bool ok;
    std::optional<NetworkType> post;
    Rejection rejection;
  };
  std::map<std::string, MemoEntry> memo_;

  [[noreturn]] void fail(const Item& it, const std::string& rule,
                         const std::string& reason) {
    Chor single;
    single.items.push_back(it);
    std::string stmt = pretty(single);
    if (!stmt.empty() && stmt.back() == '\n') stmt.pop_back();
    throw TypeFail{Rejection{stmt, rule, reason}};
  }

  void note(const std::string& rule, const std::string& what) {
    derivation_.push_back(rule + " " + what);
  }

  static std::string items_key(const std::vector<Item>& items) {
    Chor c;
    c.items = items;
    return pretty(chor::normal_form(c));
  }

  // The nine slot shapes a declared payload type can contribute.
  AbstractSlot declared_payload_slot(const TypeExpr& t, const SendSubject& s) {
    if (t.kind == TypeKind::Pid) return AbstractSlot::pid(s.name);
    if (t.kind == TypeKind::Lbl) return AbstractSlot::lbl(s.name);
    return AbstractSlot::dot();
  }

  // Connection query with lazy telling: a certainly-delivered process
  // payload lets the receiver assume the new connection.
  bool edge_with_tell(TypingEnv& env, NetworkType& n, const std::string& from,
                      const std::string& to) {
    if (n.graph.has_edge(from, to)) return true;
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& [k, d] : env.frames) {
        if (d.type.kind != TypeKind::Pid) continue;
        auto fit = n.frames.find(k);
        if (fit == n.frames.end()) continue;
        const SlotSet& rcv = fit->second.rcv;
        if (rcv.size() != 1 || rcv.begin()->kind != SlotKind::Pid) continue;
        const std::string& r = rcv.begin()->name;
        if (!n.graph.has_edge(d.receiver, r)) {
          n.graph.add_edge(d.receiver, r);
          note("T-Tell", d.receiver + " -> " + r + " via " + k);
          changed = true;
        }
      }
    }
    return n.graph.has_edge(from, to);
  }

  std::optional<NetworkType> type_items(const std::vector<Item>& items,
                                        TypingEnv env, NetworkType n) {
    if (items.empty()) return n;
    std::string key = items_key(items) + "#" + state_key(n) + "#" + env.key() +
                      "#" + chor::setting_name(setting_);
    auto mit = memo_.find(key);
    if (mit != memo_.end()) {
      if (mit->second.ok) return mit->second.post;
      throw TypeFail{mit->second.rejection};
    }

    std::vector<int> candidates;
    {
      Chor c;
      c.items = items;
      for (const auto& e : chor::ready_statements(c))
        for (const auto& p : e.paths)
          if (p.size() == 1 && p[0].branch == 0) candidates.push_back(p[0].index);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());

    std::optional<Rejection> first_error;
    for (size_t ci = 0; ci < candidates.size(); ++ci) {
      int idx = candidates[ci];
      try {
        std::optional<NetworkType> out =
            type_one(items, idx, env, n);
        memo_[key] = MemoEntry{true, out, {}};
        return out;
      } catch (const TypeFail& f) {
        if (!first_error) first_error = f.rejection;
        if (ci == 0 && candidates.size() > 1)
          note("T-Swap", "trying a scheduling alternative");
      }
    }
    if (!first_error)
      first_error = Rejection{"", "", "no ready statement"};
    memo_[key] = MemoEntry{false, std::nullopt, *first_error};
    throw TypeFail{*first_error};
  }

  // Types the item at `idx` first, then the rest.
  std::optional<NetworkType> type_one(const std::vector<Item>& items, int idx,
                                      TypingEnv env, NetworkType n) {
    const Item& it = items[idx];
    std::vector<Item> rest;
    for (size_t i = 0; i < items.size(); ++i)
      if (static_cast<int>(i) != idx) rest.push_back(items[i]);

    if (const auto* nf = std::get_if<NewFrame>(&it)) {
      if (!env.procs.count(nf->sender) || !env.procs.count(nf->receiver))
        fail(it, "T-NF", "frame endpoints are not declared processes");
      if (!edge_with_tell(env, n, nf->sender, nf->receiver) ||
          !edge_with_tell(env, n, nf->receiver, nf->sender))
        fail(it, "T-NF", "unconnected endpoints " + nf->sender + " and " +
                             nf->receiver);
      note("T-NF", nf->frame);
      env.frames[nf->frame] = FrameDecl{nf->payload, nf->sender, nf->receiver};
      n.frames[nf->frame] = AbstractFrame{};
      auto post = type_items(rest, env, n);
      if (!post) return std::nullopt;
      AbstractFrame exit = post->frames.at(nf->frame);
      record_exit(nf->src_id, nf->frame, exit);
      post->frames.erase(nf->frame);
      return post;
    }
    if (const auto* np = std::get_if<NewProc>(&it)) {
      auto pit = env.procs.find(np->parent);
      if (pit == env.procs.end())
        fail(it, "T-NP", "parent process is not declared");
      guest::Signature sig;
      try {
        sig = reg_.signature_of(np->fn, pit->second);
      } catch (const std::exception& ex) {
        fail(it, "T-NP", ex.what());
      }
      if (sig.binary || !(sig.arg == pit->second))
        fail(it, "T-NP", "initialiser does not accept the parent cell type");
      note("T-NP", np->child);
      env.procs[np->child] = sig.result;
      n.graph.add_edge(np->parent, np->child);
      n.graph.add_edge(np->child, np->parent);
      for (const auto& [from, to] : n.graph.edges)
        if (from == np->parent && to != np->child)
          n.graph.add_edge(np->child, to);
      auto post = type_items(rest, env, n);
      if (!post) return std::nullopt;
      post->graph.nodes.erase(np->child);
      std::set<std::pair<std::string, std::string>> kept;
      for (const auto& e : post->graph.edges)
        if (e.first != np->child && e.second != np->child) kept.insert(e);
      post->graph.edges = std::move(kept);
      return post;
    }
    if (const auto* ls = std::get_if<LocalStmt>(&it)) {
      auto pit = env.procs.find(ls->proc);
      if (pit == env.procs.end()) fail(it, "T-Int", "process is not declared");
      guest::Signature sig;
      try {
        sig = reg_.signature_of(ls->fn, pit->second);
      } catch (const std::exception& ex) {
        fail(it, "T-Int", ex.what());
      }
      if (sig.binary || !(sig.arg == pit->second) ||
          !subtype(sig.result, pit->second))
        fail(it, "T-Int", "function does not preserve the cell type");
      note("T-Int", ls->proc);
      return type_items(rest, env, n);
    }
    if (const auto* ss = std::get_if<SendStmt>(&it)) {
      transfer_send(*ss, it, env, n);
      return type_items(rest, env, n);
    }
    if (const auto* rs = std::get_if<RecvStmt>(&it)) {
      transfer_recv(*rs, it, env, n);
      return type_items(rest, env, n);
    }
    if (const auto* cs = std::get_if<CallStmt>(&it)) {
      auto after = transfer_call(*cs, it, env, n);
      if (!after) return std::nullopt;  // the call never returns
      return type_items(rest, env, *after);
    }
    const auto& cond = std::get<CondStmt>(it);
    auto [n1, n2] = split_on_guard(cond, it, env, n);
    std::optional<NetworkType> post1, post2;
    {
      std::vector<Item> body = cond.then_branch->items;
      post1 = type_items(body, env, n1);
    }
    {
      std::vector<Item> body = cond.else_branch->items;
      post2 = type_items(body, env, n2);
    }
    std::optional<NetworkType> merged;
    if (post1 && post2) {
      NetworkType m;
      try {
        m.frames = merge_frames(post1->frames, post2->frames);
      } catch (const PayloadDisagreement& ex) {
        fail(it, guard_rule(cond.guard), ex.what());
      }
      m.graph.nodes = post1->graph.nodes;
      for (const auto& e : post1->graph.edges)
        if (post2->graph.edges.count(e)) m.graph.edges.insert(e);
      merged = m;
    } else if (post1) {
      merged = post1;
    } else if (post2) {
      merged = post2;
    }
    note(guard_rule(cond.guard), pretty(cond.guard));
    if (!merged) return std::nullopt;
    return type_items(rest, env, *merged);
  }

  static std::string guard_rule(const Guard& g) {
    switch (g.kind) {
      case GuardKind::Expr: return "T-IfExp";
      case GuardKind::Sent: return "T-IfSnd";
      case GuardKind::Received: return "T-IfRcv";
      case GuardKind::ReceivedLbl: return "T-IfLbl";
    }
    return "T-If";
  }

  std::pair<NetworkType, NetworkType> split_on_guard(const CondStmt& cond,
                                                     const Item& it,
                                                     TypingEnv& env,
                                                     NetworkType n) {
    const Guard& g = cond.guard;
    if (g.kind == GuardKind::Expr) {
      auto pit = env.procs.find(g.proc);
      if (pit == env.procs.end())
        fail(it, "T-IfExp", "guard process is not declared");
      guest::Signature sig;
      try {
        sig = reg_.signature_of(g.fn, pit->second);
      } catch (const std::exception& ex) {
        fail(it, "T-IfExp", ex.what());
      }
      if (sig.binary || !(sig.arg == pit->second) ||
          sig.result.kind != TypeKind::Bool)
        fail(it, "T-IfExp", "guard is not a boolean predicate on the cell");
      return {n, n};
    }
    auto dit = env.frames.find(g.frame);
    if (dit == env.frames.end())
      fail(it, guard_rule(g), "guard frame is not declared");
    auto fit = n.frames.find(g.frame);
    if (fit == n.frames.end())
      fail(it, guard_rule(g), "guard frame has no abstract state");
    if (g.kind == GuardKind::Sent) {
      if (dit->second.sender != g.proc)
        fail(it, "T-IfSnd", "guard subject is not the frame sender");
      const SlotSet& u = fit->second.snd;
      if (u.size() != 2 || !u.count(AbstractSlot::bot()))
        fail(it, "T-IfSnd",
             "sent guard needs an undetermined sender slot, found " +
                 slot_set_str(u) + " (dead branch)");
      AbstractSlot payload;
      for (const auto& s : u)
        if (s.kind != SlotKind::Bot) payload = s;
      NetworkType n1 = n, n2 = n;
      n1.frames[g.frame].snd = {payload};
      n2.frames[g.frame].snd = {AbstractSlot::bot()};
      return {n1, n2};
    }
    // Received guards split the receiver slot.
    if (dit->second.receiver != g.proc)
      fail(it, guard_rule(g), "guard subject is not the frame receiver");
    const SlotSet& u = fit->second.rcv;
    if (u.size() != 2 || !u.count(AbstractSlot::bot()))
      fail(it, guard_rule(g),
           "received guard needs an undetermined receiver slot, found " +
               slot_set_str(u) + " (dead branch)");
    AbstractSlot payload;
    for (const auto& s : u)
      if (s.kind != SlotKind::Bot) payload = s;
    if (g.kind == GuardKind::ReceivedLbl) {
      if (dit->second.type.kind != TypeKind::Lbl)
        fail(it, "T-IfLbl", "label guard on a non-label frame");
      if (!(payload == AbstractSlot::lbl(g.label)))
        fail(it, "T-IfLbl", "guard label " + g.label +
                                " cannot be the delivered payload " +
                                payload.str());
    }
    NetworkType n1 = n, n2 = n;
    n1.frames[g.frame].rcv = {payload};
    n2.frames[g.frame].rcv = {AbstractSlot::bot()};
    return {n1, n2};
  }

  void transfer_send(const SendStmt& ss, const Item& it, TypingEnv& env,
                     NetworkType& n) {
    std::string rule = setting_ == chor::Setting::Reliable ? "R-Snd" : "U-Snd";
    rule += ss.subject.kind == SubjectKind::Func
                ? "V"
                : (ss.subject.kind == SubjectKind::Pid ? "P" : "L");
    auto dit = env.frames.find(ss.frame);
    if (dit == env.frames.end()) fail(it, rule, "frame is not declared");
    const FrameDecl& d = dit->second;
    if (d.sender != ss.subject.proc)
      fail(it, rule, "send subject is not the frame sender");
    auto fit = n.frames.find(ss.frame);
    if (fit == n.frames.end()) fail(it, rule, "frame has no abstract state");

    AbstractSlot payload;
    switch (ss.subject.kind) {
      case SubjectKind::Func: {
        if (d.type.kind == TypeKind::Pid || d.type.kind == TypeKind::Lbl)
          fail(it, rule, "value send on a name-typed frame");
        auto pit = env.procs.find(ss.subject.proc);
        if (pit == env.procs.end()) fail(it, rule, "sender is not declared");
        guest::Signature sig;
        try {
          sig = reg_.signature_of(ss.subject.fn, pit->second);
        } catch (const std::exception& ex) {
          fail(it, rule, ex.what());
        }
        if (sig.binary || !(sig.arg == pit->second) ||
            !subtype(sig.result, d.type))
          fail(it, rule, "payload function has type " +
                             type_to_string(sig.arg) + " -> " +
                             type_to_string(sig.result) +
                             ", frame expects payloads of type " +
                             type_to_string(d.type));
        payload = AbstractSlot::dot();
        break;
      }
      case SubjectKind::Pid: {
        if (d.type.kind != TypeKind::Pid)
          fail(it, rule, "process send on a non-PID frame");
        if (!env.procs.count(ss.subject.name))
          fail(it, rule, "sent process is not declared");
        if (!edge_with_tell(env, n, ss.subject.proc, ss.subject.name))
          fail(it, rule, "sender does not know the sent process");
        payload = AbstractSlot::pid(ss.subject.name);
        break;
      }
      case SubjectKind::Lbl: {
        if (d.type.kind != TypeKind::Lbl)
          fail(it, rule, "label send on a non-LBL frame");
        payload = AbstractSlot::lbl(ss.subject.name);
        env.labels.insert(ss.subject.name);
        break;
      }
    }
    SlotSet& u = fit->second.snd;
    if (setting_ == chor::Setting::Reliable) {
      if (!(u == SlotSet{AbstractSlot::bot()}))
        fail(it, rule,
             "resend of a frame whose payload may already be accepted "
             "(sender slot " + slot_set_str(u) + ")");
    } else {
      for (const auto& s : u)
        if (s.kind != SlotKind::Bot && !(s == payload))
          fail(it, rule, "sender slot " + slot_set_str(u) +
                             " already names a different payload");
    }
    u.insert(payload);
    note(rule, ss.frame);
  }

  void transfer_recv(const RecvStmt& rs, const Item& it, TypingEnv& env,
                     NetworkType& n) {
    auto dit = env.frames.find(rs.frame);
    if (dit == env.frames.end()) fail(it, "T-Rcv", "frame is not declared");
    const FrameDecl& d = dit->second;
    std::string rule = rs.subject.has_fn
                           ? "T-RcvV"
                           : (d.type.kind == TypeKind::Pid ? "T-RcvP"
                                                           : "T-RcvL");
    if (d.receiver != rs.subject.proc)
      fail(it, rule, "receive subject is not the frame receiver");
    auto fit = n.frames.find(rs.frame);
    if (fit == n.frames.end()) fail(it, rule, "frame has no abstract state");

    const SlotSet& u = fit->second.snd;
    AbstractSlot expected;
    if (rs.subject.has_fn) {
      if (d.type.kind == TypeKind::Pid || d.type.kind == TypeKind::Lbl)
        fail(it, rule, "value receive on a name-typed frame");
      auto pit = env.procs.find(rs.subject.proc);
      if (pit == env.procs.end()) fail(it, rule, "receiver is not declared");
      guest::Signature sig;
      try {
        sig = reg_.signature_of(rs.subject.fn, pit->second);
      } catch (const std::exception& ex) {
        fail(it, rule, ex.what());
      }
      if (!sig.binary || !(sig.arg == pit->second) ||
          !(sig.payload == d.type) || !subtype(sig.result, pit->second))
        fail(it, rule, "receive function must combine the cell with a " +
                           type_to_string(d.type) + " payload");
      expected = AbstractSlot::dot();
    } else if (d.type.kind == TypeKind::Pid) {
      bool found = false;
      for (const auto& s : u)
        if (s.kind == SlotKind::Pid) {
          expected = s;
          found = true;
        }
      if (!found)
        fail(it, rule, "no process payload can reach this receive "
                       "(sender slot " + slot_set_str(u) + ")");
    } else if (d.type.kind == TypeKind::Lbl) {
      bool found = false;
      for (const auto& s : u)
        if (s.kind == SlotKind::Lbl) {
          expected = s;
          found = true;
        }
      if (!found)
        fail(it, rule, "no label payload can reach this receive "
                       "(sender slot " + slot_set_str(u) + ")");
    } else {
      fail(it, rule, "bare receive on a value-typed frame");
    }
    if (!u.count(expected))
      fail(it, rule, "receives cannot be matched to sends (sender slot " +
                         slot_set_str(u) + ")");
    for (const auto& s : u)
      if (s.kind != SlotKind::Bot && !(s == expected))
        fail(it, rule, "sender slot names a different payload");
    if (!(fit->second.rcv == SlotSet{AbstractSlot::bot()}))
      fail(it, rule,
           "consecutive receives: an earlier receive may already have "
           "delivered this frame (receiver slot " +
               slot_set_str(fit->second.rcv) + ")");
    fit->second.rcv = {AbstractSlot::bot(), expected};
    note(rule, rs.frame);
  }

  std::optional<NetworkType> transfer_call(const CallStmt& cs, const Item& it,
                                           TypingEnv& env, NetworkType& n) {
    auto dit = prog_.defs.find(cs.callee);
    if (dit == prog_.defs.end())
      fail(it, "T-Call", "call to unknown procedure");
    const ProcDef& def = dit->second;
    std::set<std::string> formal;
    for (const auto& p : def.params) formal.insert(p.name);
    if (formal != cs.args.domain())
      fail(it, "T-Call", "call-arity/type mismatch: bindings do not cover "
                         "the parameters exactly");

    // Actual-to-formal renaming for processes (including interface-only
    // frame endpoints) and frames.
    std::map<std::string, std::string> proc_a2f;  // actual -> formal
    std::map<std::string, std::string> proc_f2a;
    std::map<std::string, std::string> frame_f2a;
    auto bind_proc = [&](const std::string& f, const std::string& a) {
      auto [pit, inserted] = proc_f2a.emplace(f, a);
      if (!inserted && pit->second != a)
        fail(it, "T-Call", "parameter " + f + " bound inconsistently");
      auto [ait, ins2] = proc_a2f.emplace(a, f);
      if (!ins2 && ait->second != f)
        fail(it, "T-Call", "process " + a + " bound to multiple parameters");
    };
    for (const auto& p : def.params) {
      if (p.kind == ParamKind::Proc) {
        const std::string& a = cs.args.procs.at(p.name);
        auto eit = env.procs.find(a);
        if (eit == env.procs.end())
          fail(it, "T-Call", "actual process " + a + " is not declared");
        if (!(eit->second == p.type))
          fail(it, "T-Call", "actual process " + a + " has cell type " +
                                 type_to_string(eit->second) +
                                 ", parameter expects " +
                                 type_to_string(p.type));
        bind_proc(p.name, a);
      }
    }
    for (const auto& p : def.params) {
      if (p.kind != ParamKind::Frame) continue;
      const std::string& a = cs.args.frames.at(p.name);
      auto eit = env.frames.find(a);
      if (eit == env.frames.end())
        fail(it, "T-Call", "actual frame " + a + " is not declared");
      if (!(eit->second.type == p.type))
        fail(it, "T-Call", "actual frame " + a + " carries " +
                               type_to_string(eit->second.type) +
                               ", parameter expects " + type_to_string(p.type));
      if (!frame_f2a.emplace(p.name, a).second)
        fail(it, "T-Call", "frame parameter bound twice");
      for (const auto& [f2, a2] : frame_f2a)
        if (f2 != p.name && a2 == a)
          fail(it, "T-Call", "frame " + a + " bound to multiple parameters");
      bind_proc(p.sender, eit->second.sender);
      bind_proc(p.receiver, eit->second.receiver);
    }
    for (const auto& p : def.params) {
      if (p.kind == ParamKind::Func) {
        const FuncRef& a = cs.args.funcs.at(p.name);
        guest::Signature sig;
        try {
          sig = reg_.signature_of(a, p.type);
        } catch (const std::exception& ex) {
          fail(it, "T-Call", ex.what());
        }
        bool ok = sig.binary == p.binary && sig.arg == p.type &&
                  subtype(sig.result, p.result);
        if (p.binary) ok = ok && sig.payload == p.payload;
        if (!ok)
          fail(it, "T-Call", "function argument " + pretty(a) +
                                 " does not match the declared signature of " +
                                 p.name);
      } else if (p.kind == ParamKind::Label) {
        env.labels.insert(cs.args.labels.at(p.name));
      }
    }

    // Build the formal pre-state.
    TypingEnv fenv;
    fenv.labels = env.labels;
    for (const auto& p : def.params)
      if (p.kind == ParamKind::Label)
        fenv.labels.insert(cs.args.labels.at(p.name));
    for (const auto& [f, a] : proc_f2a) {
      auto eit = env.procs.find(a);
      if (eit == env.procs.end())
        fail(it, "T-Call", "frame endpoint " + a + " is not declared");
      fenv.procs[f] = eit->second;
    }
    for (const auto& p : def.params)
      if (p.kind == ParamKind::Frame)
        fenv.frames[p.name] = FrameDecl{p.type, p.sender, p.receiver};

    NetworkType fpre;
    for (const auto& [f, _] : fenv.procs) fpre.graph.add_node(f);
    for (const auto& [fa, aa] : proc_f2a)
      for (const auto& [fb, ab] : proc_f2a)
        if (n.graph.has_edge(aa, ab)) fpre.graph.add_edge(fa, fb);
    auto rename_slot = [&](const AbstractSlot& s) {
      if (s.kind != SlotKind::Pid) return s;
      auto a2f = proc_a2f.find(s.name);
      if (a2f == proc_a2f.end())
        fail(it, "T-Call",
             "frame payload process " + s.name + " is not passed to the call");
      return AbstractSlot::pid(a2f->second);
    };
    for (const auto& [f, a] : frame_f2a) {
      auto sit = n.frames.find(a);
      if (sit == n.frames.end())
        fail(it, "T-Call", "actual frame " + a + " has no abstract state");
      AbstractFrame af;
      af.snd.clear();
      af.rcv.clear();
      for (const auto& s : sit->second.snd) af.snd.insert(rename_slot(s));
      for (const auto& s : sit->second.rcv) af.rcv.insert(rename_slot(s));
      fpre.frames[f] = af;
    }
    // Substituted function and label arguments become part of the instance.
    std::ostringstream inst;
    inst << cs.callee;
    for (const auto& p : def.params) {
      if (p.kind == ParamKind::Func)
        inst << "&" << p.name << "=" << pretty(cs.args.funcs.at(p.name));
      if (p.kind == ParamKind::Label)
        inst << "&" << p.name << "=" << cs.args.labels.at(p.name);
    }
    auto fpost =
        infer_procedure(def, inst.str(), fenv, fpre, cs.args);
    note("T-Call", cs.callee);
    if (!fpost) return std::nullopt;

    // Map the formal post back to the caller's names.
    auto unrename_slot = [&](const AbstractSlot& s) {
      if (s.kind != SlotKind::Pid) return s;
      auto f2a = proc_f2a.find(s.name);
      return f2a == proc_f2a.end() ? s : AbstractSlot::pid(f2a->second);
    };
    NetworkType out = n;
    for (const auto& [f, a] : frame_f2a) {
      const AbstractFrame& af = fpost->frames.at(f);
      AbstractFrame back;
      back.snd.clear();
      back.rcv.clear();
      for (const auto& s : af.snd) back.snd.insert(unrename_slot(s));
      for (const auto& s : af.rcv) back.rcv.insert(unrename_slot(s));
      out.frames[a] = back;
    }
    for (const auto& [fa, fb] : fpost->graph.edges) {
      auto ia = proc_f2a.find(fa);
      auto ib = proc_f2a.find(fb);
      if (ia != proc_f2a.end() && ib != proc_f2a.end())
        out.graph.add_edge(ia->second, ib->second);
    }
    n = out;
    return n;
  }

  std::optional<NetworkType> infer_procedure(const ProcDef& def,
                                             const std::string& instance,
                                             const TypingEnv& fenv,
                                             const NetworkType& fpre,
                                             const Bindings& args) {
    std::string key = instance + "|" + state_key(fpre) + "|" + fenv.key();
    auto fit = proc_memo_.find(key);
    if (fit != proc_memo_.end() && !proc_in_progress_.count(key))
      return fit->second;
    if (proc_in_progress_.count(key)) {
      auto ait = proc_memo_.find(key);
      return ait == proc_memo_.end() ? std::nullopt : ait->second;
    }
    proc_in_progress_.insert(key);
    proc_memo_[key] = std::nullopt;  // assume divergence until proven

    // Substitute function/label actuals into the body; frame and process
    // parameters keep their formal names (the pre-state is formal).
    Bindings formal_args;
    for (const auto& p : def.params) {
      switch (p.kind) {
        case ParamKind::Frame: formal_args.frames[p.name] = p.name; break;
        case ParamKind::Proc: formal_args.procs[p.name] = p.name; break;
        case ParamKind::Func:
          formal_args.funcs[p.name] = args.funcs.at(p.name);
          break;
        case ParamKind::Label:
          formal_args.labels[p.name] = args.labels.at(p.name);
          break;
      }
    }
    std::set<std::string> used = all_names(def.body);
    all_names(prog_.defs, used);
    NameSupply supply(used);
    Chor body = substitute(def.body, def.params, formal_args, supply);

    std::optional<NetworkType> assumption = std::nullopt;
    for (int round = 0; round < 32; ++round) {
      std::optional<NetworkType> post;
      try {
        post = type_items(body.items, fenv, fpre);
      } catch (const TypeFail&) {
        proc_in_progress_.erase(key);
        proc_memo_.erase(key);
        throw;
      }
      bool stable = (post.has_value() == assumption.has_value()) &&
                    (!post || *post == *assumption);
      if (stable) break;
      assumption = post;
      proc_memo_[key] = assumption;
      memo_.clear();  // the assumption changed; judgements may differ
    }
    proc_in_progress_.erase(key);
    proc_memo_[key] = assumption;
    return assumption;
  }

  void record_exit(int src_id, const std::string& name,
                   const AbstractFrame& exit) {
    auto it = frame_exit_.find(src_id);
    if (it == frame_exit_.end()) {
      frame_exit_[src_id] = exit;
    } else {
      it->second.snd = merge_slots(it->second.snd, exit.snd);
      it->second.rcv = merge_slots(it->second.rcv, exit.rcv);
    }
    frame_exit_names_[src_id] = name;
  }

  void check_uncalled_procedures() {
    std::set<std::string> called;
    std::function<void(const Chor&)> scan = [&](const Chor& c) {
      for (const auto& it : c.items) {
        if (const auto* cs = std::get_if<CallStmt>(&it)) called.insert(cs->callee);
        if (const auto* cd = std::get_if<CondStmt>(&it)) {
          scan(*cd->then_branch);
          scan(*cd->else_branch);
        }
      }
    };
    scan(prog_.term);
    for (const auto& [_, d] : prog_.defs) scan(d.body);
    for (const auto& [name, def] : prog_.defs) {
      if (called.count(name)) continue;
      // Check at the canonical fresh instance.
      TypingEnv fenv;
      fenv.labels = base_env().labels;
      NetworkType fpre;
      Bindings args;
      for (const auto& p : def.params) {
        switch (p.kind) {
          case ParamKind::Proc:
            fenv.procs[p.name] = p.type;
            args.procs[p.name] = p.name;
            break;
          case ParamKind::Frame:
            fenv.frames[p.name] = FrameDecl{p.type, p.sender, p.receiver};
            fpre.frames[p.name] = AbstractFrame{};
            args.frames[p.name] = p.name;
            break;
          case ParamKind::Func: {
            args.funcs[p.name] = FuncRef::named(p.name);
            break;
          }
          case ParamKind::Label:
            fenv.labels.insert(p.name);
            args.labels[p.name] = p.name;
            break;
        }
      }
      for (const auto& p : def.params) {
        if (p.kind != ParamKind::Frame) continue;
        fenv.procs.emplace(p.sender, t_unit());
        fenv.procs.emplace(p.receiver, t_unit());
      }
      for (const auto& [f, _] : fenv.procs) fpre.graph.add_node(f);
      for (const auto& [a, _] : fenv.procs)
        for (const auto& [b, _2] : fenv.procs)
          if (a != b) fpre.graph.add_edge(a, b);
      // Function parameters have no concrete registry entry here, so only
      // procedures with all-concrete signatures are checked standalone.
      bool checkable = true;
      for (const auto& p : def.params)
        if (p.kind == ParamKind::Func) checkable = false;
      if (!checkable) continue;
      infer_procedure(def, name + "#standalone", fenv, fpre, args);
    }
  }

  // Candidate abstract pre-states for a runtime configuration, widened on
  // demand: exact slot abstractions first, then variants with the
  // undetermined marker or the statically possible payload added.
  std::vector<NetworkType> runtime_pre_candidates(const chor::RuntimeConfig& cfg,
                                                  const TypingEnv& env) {
    NetworkType exact;
    exact.graph = cfg.graph;
    for (const auto& [k, fs] : cfg.frames) {
      AbstractFrame af;
      af.snd = {alpha_s(fs.snd)};
      af.rcv = {alpha_r(fs.rcv)};
      exact.frames[k] = af;
    }
    std::vector<NetworkType> out;
    // Widen each frame side independently by adding Bot; cap the product.
    std::vector<std::string> names;
    for (const auto& [k, _] : exact.frames) names.push_back(k);
    size_t combos = 1;
    for (size_t i = 0; i < names.size() && combos <= 256; ++i) combos *= 4;
    combos = std::min<size_t>(combos, 256);
    for (size_t mask = 0; mask < combos; ++mask) {
      NetworkType cand = exact;
      size_t m = mask;
      for (const auto& k : names) {
        int widen = static_cast<int>(m % 4);
        m /= 4;
        if (widen & 1) cand.frames[k].snd.insert(AbstractSlot::bot());
        if (widen & 2) cand.frames[k].rcv.insert(AbstractSlot::bot());
      }
      out.push_back(std::move(cand));
    }
    return out;
  }

  TypingEnv runtime_env(const chor::RuntimeConfig& cfg) {
    TypingEnv env;
    for (const auto& [p, t] : cfg.meta.proc_types) env.procs[p] = t;
    for (const auto& [k, info] : cfg.meta.frames) {
      auto fit = cfg.frames.find(k);
      if (fit == cfg.frames.end()) continue;
      env.frames[k] = FrameDecl{info.type, fit->second.sender,
                                fit->second.receiver};
    }
    env.labels = base_env().labels;
    label_names(cfg.term, env.labels);
    return env;
  }
};

// --- public entry points ----------------------------------------------------------

inline CheckResult check(const Program& prog, chor::Setting setting,
                         const guest::FunctionRegistry& reg =
                             guest::default_registry()) {
  Checker checker(prog, setting, reg);
  return checker.check();
}

inline bool check_runtime(const chor::RuntimeConfig& cfg, const Program& prog,
                          chor::Setting setting, std::string* why = nullptr,
                          const guest::FunctionRegistry& reg =
                              guest::default_registry()) {
  Checker checker(prog, setting, reg);
  return checker.check_runtime(cfg, why);
}

// Judgements for the term under every viable pre-state of its outermost
// frames: leading frame declarations are stripped, their frames enumerated
// over the slot shapes the declared payload admits, and the subsumption-
// minimal judgements reported.
struct MinimalJudgement {
  AbstractFrameDict pre;
  AbstractFrameDict post;
};

inline bool subsumes(const MinimalJudgement& a, const MinimalJudgement& b) {
  // b weakens a if every slot set of a is contained in b's.
  auto leq = [](const AbstractFrameDict& x, const AbstractFrameDict& y) {
    for (const auto& [k, f] : x) {
      auto it = y.find(k);
      if (it == y.end()) return false;
      if (!std::includes(it->second.snd.begin(), it->second.snd.end(),
                         f.snd.begin(), f.snd.end()))
        return false;
      if (!std::includes(it->second.rcv.begin(), it->second.rcv.end(),
                         f.rcv.begin(), f.rcv.end()))
        return false;
    }
    return true;
  };
  return leq(a.pre, b.pre) && leq(a.post, b.post);
}

struct NotWellTyped : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Slot-set candidates a frame side can take, given the declared payload and
// the payload names the program can put there.
inline std::vector<SlotSet> slot_set_universe(
    const TypeExpr& payload, const std::set<std::string>& pids,
    const std::set<std::string>& labels) {
  std::vector<AbstractSlot> pays;
  if (payload.kind == TypeKind::Pid) {
    for (const auto& p : pids) pays.push_back(AbstractSlot::pid(p));
  } else if (payload.kind == TypeKind::Lbl) {
    for (const auto& l : labels) pays.push_back(AbstractSlot::lbl(l));
  } else {
    pays.push_back(AbstractSlot::dot());
  }
  std::vector<SlotSet> out;
  out.push_back({AbstractSlot::bot()});
  for (const auto& p : pays) {
    out.push_back({p});
    out.push_back({AbstractSlot::bot(), p});
  }
  return out;
}

inline std::vector<MinimalJudgement> infer_minimal_types(
    const Program& prog, chor::Setting setting,
    const guest::FunctionRegistry& reg = guest::default_registry()) {
  if (!check(prog, setting, reg).ok)
    throw NotWellTyped("program is not well-typed");

  // Strip leading frame binders so their frames are free in the judged term.
  Program stripped = prog;
  std::vector<NewFrame> heads;
  while (!stripped.term.items.empty()) {
    const auto* nf = std::get_if<NewFrame>(&stripped.term.items.front());
    if (!nf) break;
    heads.push_back(*nf);
    stripped.term.items.erase(stripped.term.items.begin());
  }

  std::set<std::string> pids = process_names(prog.term);
  std::set<std::string> labels;
  label_names(prog.term, labels);
  for (const auto& [_, d] : prog.defs) label_names(d.body, labels);

  std::vector<MinimalJudgement> found;
  std::function<void(size_t, AbstractFrameDict)> enumerate =
      [&](size_t i, AbstractFrameDict pre) {
        if (i == heads.size()) {
          Checker checker(stripped, setting, reg);
          TypingEnv env = checker.base_env();
          NetworkType n0 = checker.initial_network(env);
          for (const auto& nf : heads) {
            env.frames[nf.frame] =
                FrameDecl{nf.payload, nf.sender, nf.receiver};
            n0.frames[nf.frame] = pre.at(nf.frame);
          }
          try {
            auto post = checker.type_term(stripped.term, env, n0);
            if (post) {
              MinimalJudgement j;
              j.pre = pre;
              for (const auto& nf : heads)
                j.post[nf.frame] = post->frames.at(nf.frame);
              found.push_back(std::move(j));
            }
          } catch (const TypeFail&) {
          }
          return;
        }
        for (const SlotSet& snd :
             slot_set_universe(heads[i].payload, pids, labels))
          for (const SlotSet& rcv :
               slot_set_universe(heads[i].payload, pids, labels)) {
            AbstractFrameDict next = pre;
            next[heads[i].frame] = AbstractFrame{snd, rcv};
            enumerate(i + 1, std::move(next));
          }
      };
  enumerate(0, {});

  // Keep the subsumption-minimal judgements.
  std::vector<MinimalJudgement> minimal;
  for (size_t i = 0; i < found.size(); ++i) {
    bool dominated = false;
    for (size_t j = 0; j < found.size() && !dominated; ++j) {
      if (i == j) continue;
      if (subsumes(found[j], found[i]) && !subsumes(found[i], found[j]))
        dominated = true;
      if (subsumes(found[j], found[i]) && subsumes(found[i], found[j]) && j < i)
        dominated = true;  // duplicate: keep the first
    }
    if (!dominated) minimal.push_back(found[i]);
  }
  return minimal;
}

}  // namespace rc::typing
