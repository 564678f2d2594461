#pragma once

// The guest language: a closed registry of total, deterministic functions
// over process memory cells. Programs refer to entries by name; inline
// literals act as constant functions.

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "rc/ast.hpp"
#include "rc/types.hpp"

namespace rc::guest {

struct UnknownFunction : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TypeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Signature {
  bool binary = false;
  TypeExpr arg;      // unary: cell; binary: cell
  TypeExpr payload;  // binary only: second argument
  TypeExpr result;
};

struct Entry {
  Signature sig;
  std::function<Value(const Value&)> eval1;
  std::function<Value(const Value&, const Value&)> eval2;
};

class FunctionRegistry {
 public:
  void add_unary(const std::string& name, TypeExpr arg, TypeExpr result,
                 std::function<Value(const Value&)> fn) {
    Entry e;
    e.sig = Signature{false, std::move(arg), t_unit(), std::move(result)};
    e.eval1 = std::move(fn);
    entries_[name] = std::move(e);
  }

  void add_binary(const std::string& name, TypeExpr cell, TypeExpr payload,
                  TypeExpr result,
                  std::function<Value(const Value&, const Value&)> fn) {
    Entry e;
    e.sig = Signature{true, std::move(cell), std::move(payload),
                      std::move(result)};
    e.eval2 = std::move(fn);
    entries_[name] = std::move(e);
  }

  bool has(const std::string& name) const { return entries_.count(name) > 0; }

  const Entry& lookup(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw UnknownFunction("unknown function: " + name);
    return it->second;
  }

  // Signature of a function reference against a given cell type. Constant
  // references act as unary constants on any cell type.
  Signature signature_of(const FuncRef& f,
                         std::optional<TypeExpr> cell = std::nullopt) const {
    if (f.is_const) {
      Signature s;
      s.binary = false;
      s.arg = cell.value_or(t_val());
      s.result = type_of(f.constant);
      return s;
    }
    return lookup(f.name).sig;
  }

  Value eval1(const FuncRef& f, const Value& arg) const {
    if (f.is_const) return f.constant;
    const Entry& e = lookup(f.name);
    if (e.sig.binary)
      throw TypeMismatch("function " + f.name + " expects two arguments");
    if (!inhabits(arg, e.sig.arg))
      throw TypeMismatch("argument " + value_to_string(arg) +
                         " does not inhabit " + type_to_string(e.sig.arg) +
                         " for " + f.name);
    return e.eval1(arg);
  }

  Value eval2(const FuncRef& f, const Value& cell, const Value& payload) const {
    if (f.is_const) return f.constant;
    const Entry& e = lookup(f.name);
    if (!e.sig.binary)
      throw TypeMismatch("function " + f.name + " expects one argument");
    if (!inhabits(cell, e.sig.arg))
      throw TypeMismatch("cell " + value_to_string(cell) +
                         " does not inhabit " + type_to_string(e.sig.arg) +
                         " for " + f.name);
    if (!inhabits(payload, e.sig.payload))
      throw TypeMismatch("payload " + value_to_string(payload) +
                         " does not inhabit " + type_to_string(e.sig.payload) +
                         " for " + f.name);
    return e.eval2(cell, payload);
  }

  // True iff the registry entry matches the declared signature, allowing the
  // registered result to be a subtype of the declared one.
  bool check_signature(const FuncRef& f, const Signature& declared) const {
    Signature actual = signature_of(f, declared.arg);
    if (f.is_const) {
      return !declared.binary && subtype(actual.result, declared.result);
    }
    if (actual.binary != declared.binary) return false;
    if (!(actual.arg == declared.arg)) return false;
    if (actual.binary && !(actual.payload == declared.payload)) return false;
    return subtype(actual.result, declared.result);
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  std::map<std::string, Entry> entries_;
};

// Record shapes used by the builtin library.
inline TypeExpr t_counter_cell() {
  return t_record({{"n", t_int()}, {"v", t_int()}});
}
inline TypeExpr t_acc_cell() { return t_record({{"acc", t_str()}}); }

// The builtin registry. Names are monomorphic; the same operation on a
// different type gets its own name.
inline const FunctionRegistry& default_registry() {
  static const FunctionRegistry reg = [] {
    FunctionRegistry r;
    const TypeExpr cnt = t_counter_cell();
    const TypeExpr acc = t_acc_cell();

    r.add_unary("id", t_int(), t_int(), [](const Value& v) { return v; });
    r.add_unary("id_str", t_str(), t_str(), [](const Value& v) { return v; });
    r.add_unary("id_unit", t_unit(), t_unit(), [](const Value& v) { return v; });
    r.add_unary("id_maybe", t_maybe(t_str()), t_maybe(t_str()),
                [](const Value& v) { return v; });
    r.add_unary("inc", t_int(), t_int(),
                [](const Value& v) { return v_int(v.i + 1); });
    r.add_unary("dec", t_int(), t_int(),
                [](const Value& v) { return v_int(v.i - 1); });
    r.add_unary("is_pos", t_int(), t_bool(),
                [](const Value& v) { return v_bool(v.i > 0); });
    r.add_unary("is_even", t_int(), t_bool(),
                [](const Value& v) { return v_bool(v.i % 2 == 0); });
    r.add_unary("always", t_int(), t_bool(),
                [](const Value&) { return v_bool(true); });
    r.add_unary("to_unit", t_int(), t_unit(),
                [](const Value&) { return v_unit(); });
    r.add_unary("some", t_str(), t_maybe(t_str()),
                [](const Value& v) { return v_some(v.s); });

    // Counter cell {n, v}: retry budgets and payloads.
    r.add_unary("dec_n", cnt, cnt, [](const Value& v) {
      return record_with(v, "n", v_int(record_field(v, "n")->i - 1));
    });
    r.add_unary("n_pos", cnt, t_bool(), [](const Value& v) {
      return v_bool(record_field(v, "n")->i > 0);
    });
    r.add_unary("get_v", cnt, t_int(),
                [](const Value& v) { return *record_field(v, "v"); });
    r.add_unary("cnt_to_unit", cnt, t_unit(),
                [](const Value&) { return v_unit(); });

    // Binary receive combiners: first argument is the cell, second the payload.
    r.add_binary("keep", t_int(), t_int(), t_int(),
                 [](const Value&, const Value& p) { return p; });
    r.add_binary("add", t_int(), t_int(), t_int(),
                 [](const Value& c, const Value& p) { return v_int(c.i + p.i); });
    r.add_binary("snd_arg", t_unit(), t_int(), t_int(),
                 [](const Value&, const Value& p) { return p; });
    r.add_binary("noop", cnt, t_unit(), cnt,
                 [](const Value& c, const Value&) { return c; });
    r.add_binary("noop_int", t_int(), t_unit(), t_int(),
                 [](const Value& c, const Value&) { return c; });
    r.add_binary("concat_resp", acc, t_str(), acc, [](const Value& c,
                                                      const Value& p) {
      return record_with(c, "acc", v_str(record_field(c, "acc")->s + p.s));
    });

    // Request/response plumbing over Str and Maybe(Str) cells.
    r.add_unary("mk_query", t_int(), t_maybe(t_str()),
                [](const Value& v) { return v_some("q" + std::to_string(v.i)); });
    r.add_unary("to_query", t_maybe(t_str()), t_str(), [](const Value& v) {
      return v_str(v.kind == ValueKind::Some ? v.s : "");
    });
    r.add_unary("mk_resp", t_str(), t_maybe(t_str()),
                [](const Value& v) { return v_some("re:" + v.s); });
    r.add_unary("nonempty", t_str(), t_bool(),
                [](const Value& v) { return v_bool(!v.s.empty()); });
    r.add_binary("save_str", t_str(), t_str(), t_str(),
                 [](const Value&, const Value& p) { return p; });
    r.add_binary("save_maybe", t_maybe(t_str()), t_maybe(t_str()),
                 t_maybe(t_str()),
                 [](const Value&, const Value& p) { return p; });
    r.add_binary("take_resp", t_str(), t_maybe(t_str()), t_str(),
                 [](const Value& c, const Value& p) {
                   return v_str(c.s + (p.kind == ValueKind::Some ? p.s : "-"));
                 });
    return r;
  }();
  return reg;
}

// Random inhabitant of a type, for registry fuzzing.
inline Value random_inhabitant(const TypeExpr& t, std::mt19937_64& rng) {
  auto small = [&](int lo, int hi) {
    return static_cast<std::int64_t>(lo + rng() % (hi - lo + 1));
  };
  switch (t.kind) {
    case TypeKind::Nat: return v_int(small(0, 100));
    case TypeKind::Int: return v_int(small(-100, 100));
    case TypeKind::Bool: return v_bool(rng() % 2 == 0);
    case TypeKind::Str: {
      std::string s;
      for (int i = small(0, 6); i > 0; --i)
        s += static_cast<char>('a' + rng() % 26);
      return v_str(s);
    }
    case TypeKind::Unit: return v_unit();
    case TypeKind::Maybe:
      return rng() % 2 == 0
                 ? v_none()
                 : v_some(random_inhabitant(t_str(), rng).s);
    case TypeKind::Record: {
      std::vector<std::pair<std::string, Value>> fs;
      for (const auto& [n, ft] : t.fields)
        fs.emplace_back(n, random_inhabitant(ft, rng));
      return v_record(std::move(fs));
    }
    case TypeKind::Val: return v_int(small(-100, 100));
    case TypeKind::Pid: return v_pid("p" + std::to_string(small(0, 5)));
    case TypeKind::Lbl: return v_lbl("l" + std::to_string(small(0, 5)));
    case TypeKind::Union: {
      auto it = t.members.begin();
      std::advance(it, rng() % t.members.size());
      return random_inhabitant(TypeExpr{*it, {}, {}, {}}, rng);
    }
  }
  return v_unit();
}

}  // namespace rc::guest
