#pragma once

// Test-only oracle for the ready set: enumerate the closure of the
// rescheduling laws on a finite term and collect every item that can reach
// the front. Independent of the interpreter's direct computation.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "rc/ast.hpp"
#include "rc/pretty.hpp"

namespace rc::testing {

inline std::string chor_key(const Chor& c) { return pretty(c); }

inline bool disjoint(const std::set<std::string>& a,
                     const std::set<std::string>& b) {
  for (const auto& x : a)
    if (b.count(x)) return false;
  return true;
}

// Single-step rewrites of the rescheduling laws, applied at any depth.
inline std::vector<Chor> swap_steps(const Chor& c) {
  std::vector<Chor> out;
  // Adjacent swaps on this spine.
  for (size_t i = 0; i + 1 < c.items.size(); ++i) {
    const Item& a = c.items[i];
    const Item& b = c.items[i + 1];
    if (!disjoint(process_names(a), process_names(b))) continue;
    if (auto bn = bound_name(a)) {
      Chor single;
      single.items.push_back(b);
      if (free_names(single).count(*bn)) continue;
    }
    if (auto bn = bound_name(b)) {
      Chor single;
      single.items.push_back(a);
      if (free_names(single).count(*bn)) continue;
    }
    Chor next = c;
    std::swap(next.items[i], next.items[i + 1]);
    out.push_back(std::move(next));
  }
  for (size_t i = 0; i < c.items.size(); ++i) {
    const auto* cond = std::get_if<CondStmt>(&c.items[i]);
    if (!cond) {
      continue;
    }
    const Chor& t = *cond->then_branch;
    const Chor& e = *cond->else_branch;
    // Pull a shared head statement out of both branches.
    if (!t.items.empty() && !e.items.empty() && t.items[0] == e.items[0] &&
        !std::holds_alternative<CondStmt>(t.items[0]) &&
        disjoint(process_names(t.items[0]), process_names(cond->guard))) {
      Chor next = c;
      CondStmt inner;
      inner.guard = cond->guard;
      Chor t2 = t;
      t2.items.erase(t2.items.begin());
      Chor e2 = e;
      e2.items.erase(e2.items.begin());
      inner.then_branch = std::make_shared<Chor>(std::move(t2));
      inner.else_branch = std::make_shared<Chor>(std::move(e2));
      next.items[i] = inner;
      next.items.insert(next.items.begin() + i, t.items[0]);
      out.push_back(std::move(next));
    }
    // Push a statement just before the conditional into both branches.
    if (i > 0 && !std::holds_alternative<CondStmt>(c.items[i - 1]) &&
        !bound_name(c.items[i - 1]) &&
        disjoint(process_names(c.items[i - 1]), process_names(cond->guard))) {
      Chor next;
      for (size_t j = 0; j + 1 < i; ++j) next.items.push_back(c.items[j]);
      CondStmt inner;
      inner.guard = cond->guard;
      Chor t2;
      t2.items.push_back(c.items[i - 1]);
      for (const auto& it : t.items) t2.items.push_back(it);
      Chor e2;
      e2.items.push_back(c.items[i - 1]);
      for (const auto& it : e.items) e2.items.push_back(it);
      inner.then_branch = std::make_shared<Chor>(std::move(t2));
      inner.else_branch = std::make_shared<Chor>(std::move(e2));
      next.items.push_back(inner);
      for (size_t j = i + 1; j < c.items.size(); ++j)
        next.items.push_back(c.items[j]);
      out.push_back(std::move(next));
    }
    // Swap two directly nested conditionals with disjoint guards.
    if (t.items.size() == 1 && e.items.size() == 1) {
      const auto* it1 = std::get_if<CondStmt>(&t.items[0]);
      const auto* it2 = std::get_if<CondStmt>(&e.items[0]);
      if (it1 && it2 && it1->guard == it2->guard &&
          disjoint(process_names(cond->guard), process_names(it1->guard))) {
        CondStmt flipped;
        flipped.guard = it1->guard;
        auto mk = [&](const Chor& a, const Chor& b) {
          CondStmt outer;
          outer.guard = cond->guard;
          outer.then_branch = std::make_shared<Chor>(a);
          outer.else_branch = std::make_shared<Chor>(b);
          Chor w;
          w.items.push_back(outer);
          return w;
        };
        flipped.then_branch = std::make_shared<Chor>(
            mk(*it1->then_branch, *it2->then_branch));
        flipped.else_branch = std::make_shared<Chor>(
            mk(*it1->else_branch, *it2->else_branch));
        Chor next = c;
        next.items[i] = flipped;
        out.push_back(std::move(next));
      }
    }
    // Rewrites inside the branches.
    for (const Chor& tb : swap_steps(t)) {
      Chor next = c;
      CondStmt inner = *cond;
      inner.then_branch = std::make_shared<Chor>(tb);
      next.items[i] = inner;
      out.push_back(std::move(next));
    }
    for (const Chor& eb : swap_steps(e)) {
      Chor next = c;
      CondStmt inner = *cond;
      inner.else_branch = std::make_shared<Chor>(eb);
      next.items[i] = inner;
      out.push_back(std::move(next));
    }
  }
  return out;
}

// Keys of all items that can be brought to the front by the closure.
inline std::set<std::string> reachable_front_items(const Chor& start,
                                                   int cap = 20000) {
  std::set<std::string> seen;
  std::vector<Chor> frontier = {start};
  std::set<std::string> fronts;
  seen.insert(chor_key(start));
  while (!frontier.empty() && static_cast<int>(seen.size()) < cap) {
    Chor cur = frontier.back();
    frontier.pop_back();
    if (!cur.items.empty()) {
      // Conditionals are keyed by their guard: rearrangement changes how the
      // branches nest but not which guard is evaluable.
      if (const auto* cond = std::get_if<CondStmt>(&cur.items[0])) {
        fronts.insert("if " + pretty(cond->guard));
      } else {
        Chor single;
        single.items.push_back(cur.items[0]);
        fronts.insert(pretty(single));
      }
    }
    for (Chor& next : swap_steps(cur)) {
      std::string key = chor_key(next);
      if (seen.insert(key).second) frontier.push_back(std::move(next));
    }
  }
  return fronts;
}

}  // namespace rc::testing
