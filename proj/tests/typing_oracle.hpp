#pragma once

// Test-only oracle for minimal typing: enumerate every derivable judgement
// of a straight-line send/receive body over a single value frame by blind
// application of the rule schemas, in every statement order the swap laws
// admit. Independent of the checker's directed search.

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

#include "rc/typing.hpp"

namespace rc::testing {

using typing::AbstractSlot;
using typing::SlotSet;

struct OracleState {
  SlotSet snd;
  SlotSet rcv;
  bool operator==(const OracleState& o) const {
    return snd == o.snd && rcv == o.rcv;
  }
  bool operator<(const OracleState& o) const {
    if (!(snd == o.snd)) return snd < o.snd;
    return rcv < o.rcv;
  }
};

enum class OracleStmt { Send, Recv };

inline std::optional<OracleState> oracle_step(const OracleState& s,
                                              OracleStmt stmt, bool reliable) {
  SlotSet bot{AbstractSlot::bot()};
  if (stmt == OracleStmt::Send) {
    if (reliable) {
      if (!(s.snd == bot) || !(s.rcv == bot)) return std::nullopt;
    } else {
      for (const auto& a : s.snd)
        if (a.kind != typing::SlotKind::Bot && !(a == AbstractSlot::dot()))
          return std::nullopt;
    }
    OracleState out = s;
    out.snd.insert(AbstractSlot::dot());
    return out;
  }
  // Receive: the sender must possibly have produced the payload and the
  // receiver must not have consumed anything yet.
  if (!s.snd.count(AbstractSlot::dot())) return std::nullopt;
  for (const auto& a : s.snd)
    if (a.kind != typing::SlotKind::Bot && !(a == AbstractSlot::dot()))
      return std::nullopt;
  if (!(s.rcv == bot)) return std::nullopt;
  OracleState out = s;
  out.rcv = {AbstractSlot::bot(), AbstractSlot::dot()};
  return out;
}

// All (pre -> post) judgements derivable for the statement list, over every
// permutation (the statements are assumed pairwise independent).
inline std::set<std::pair<OracleState, OracleState>> oracle_judgements(
    std::vector<OracleStmt> stmts, bool reliable) {
  std::vector<SlotSet> sides = {{AbstractSlot::bot()},
                                {AbstractSlot::dot()},
                                {AbstractSlot::bot(), AbstractSlot::dot()}};
  std::set<std::pair<OracleState, OracleState>> out;
  std::sort(stmts.begin(), stmts.end());
  do {
    for (const auto& snd : sides) {
      for (const auto& rcv : sides) {
        OracleState pre{snd, rcv};
        std::optional<OracleState> cur = pre;
        for (OracleStmt st : stmts) {
          cur = oracle_step(*cur, st, reliable);
          if (!cur) break;
        }
        if (cur) out.insert({pre, *cur});
      }
    }
  } while (std::next_permutation(stmts.begin(), stmts.end()));
  return out;
}

// Subsumption-minimal subset, mirroring the weakening order.
inline std::set<std::pair<OracleState, OracleState>> oracle_minimal(
    const std::set<std::pair<OracleState, OracleState>>& all) {
  auto leq = [](const OracleState& a, const OracleState& b) {
    return std::includes(b.snd.begin(), b.snd.end(), a.snd.begin(),
                         a.snd.end()) &&
           std::includes(b.rcv.begin(), b.rcv.end(), a.rcv.begin(),
                         a.rcv.end());
  };
  std::set<std::pair<OracleState, OracleState>> out;
  for (const auto& j : all) {
    bool dominated = false;
    for (const auto& o : all) {
      if (o == j) continue;
      if (leq(o.first, j.first) && leq(o.second, j.second)) dominated = true;
    }
    if (!dominated) out.insert(j);
  }
  return out;
}

}  // namespace rc::testing
