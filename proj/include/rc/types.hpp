#pragma once

// Payload type lattice and runtime values for the guest language.
//
// Datatypes (Nat, Int, Bool, Str, Unit, Maybe, records) live below VAL.
// PID and LBL are runtime-only payload classes, never below VAL; unions
// are flat sets over the three atoms {VAL, PID, LBL}.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rc {

enum class TypeKind {
  Nat,
  Int,
  Bool,
  Str,
  Unit,
  Maybe,
  Record,
  Val,
  Pid,
  Lbl,
  Union,
};

struct TypeExpr {
  TypeKind kind = TypeKind::Unit;
  std::vector<TypeExpr> elem;                            // Maybe payload (size 1)
  std::vector<std::pair<std::string, TypeExpr>> fields;  // Record, sorted by name
  std::set<TypeKind> members;                            // Union atoms (Val/Pid/Lbl)

  bool operator==(const TypeExpr& o) const {
    return kind == o.kind && elem == o.elem && fields == o.fields &&
           members == o.members;
  }
  bool operator!=(const TypeExpr& o) const { return !(*this == o); }
};

inline TypeExpr t_nat() { return TypeExpr{TypeKind::Nat, {}, {}, {}}; }
inline TypeExpr t_int() { return TypeExpr{TypeKind::Int, {}, {}, {}}; }
inline TypeExpr t_bool() { return TypeExpr{TypeKind::Bool, {}, {}, {}}; }
inline TypeExpr t_str() { return TypeExpr{TypeKind::Str, {}, {}, {}}; }
inline TypeExpr t_unit() { return TypeExpr{TypeKind::Unit, {}, {}, {}}; }
inline TypeExpr t_val() { return TypeExpr{TypeKind::Val, {}, {}, {}}; }
inline TypeExpr t_pid() { return TypeExpr{TypeKind::Pid, {}, {}, {}}; }
inline TypeExpr t_lbl() { return TypeExpr{TypeKind::Lbl, {}, {}, {}}; }

inline TypeExpr t_maybe(TypeExpr inner) {
  TypeExpr t;
  t.kind = TypeKind::Maybe;
  t.elem.push_back(std::move(inner));
  return t;
}

inline TypeExpr t_record(std::vector<std::pair<std::string, TypeExpr>> fs) {
  TypeExpr t;
  t.kind = TypeKind::Record;
  std::sort(fs.begin(), fs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  t.fields = std::move(fs);
  return t;
}

// Unions collapse to their atom when they would have a single member.
inline TypeExpr t_union(std::set<TypeKind> atoms) {
  for (TypeKind k : atoms) {
    if (k != TypeKind::Val && k != TypeKind::Pid && k != TypeKind::Lbl)
      throw std::invalid_argument("union members must be VAL, PID or LBL");
  }
  if (atoms.size() == 1) return TypeExpr{*atoms.begin(), {}, {}, {}};
  TypeExpr t;
  t.kind = TypeKind::Union;
  t.members = std::move(atoms);
  return t;
}

inline bool is_datatype(const TypeExpr& t) {
  switch (t.kind) {
    case TypeKind::Nat:
    case TypeKind::Int:
    case TypeKind::Bool:
    case TypeKind::Str:
    case TypeKind::Unit:
    case TypeKind::Maybe:
    case TypeKind::Record:
      return true;
    default:
      return false;
  }
}

// t1 <= t2 in the smallest partial order with datatypes below VAL and
// union atoms below their union.
inline bool subtype(const TypeExpr& t1, const TypeExpr& t2) {
  if (t1 == t2) return true;
  if (t2.kind == TypeKind::Val) return is_datatype(t1);
  if (t2.kind == TypeKind::Union) {
    for (TypeKind m : t2.members) {
      if (subtype(t1, TypeExpr{m, {}, {}, {}})) return true;
    }
    return false;
  }
  return false;
}

inline std::string type_to_string(const TypeExpr& t) {
  switch (t.kind) {
    case TypeKind::Nat: return "Nat";
    case TypeKind::Int: return "Int";
    case TypeKind::Bool: return "Bool";
    case TypeKind::Str: return "Str";
    case TypeKind::Unit: return "Unit";
    case TypeKind::Val: return "VAL";
    case TypeKind::Pid: return "PID";
    case TypeKind::Lbl: return "LBL";
    case TypeKind::Maybe: return "Maybe(" + type_to_string(t.elem.at(0)) + ")";
    case TypeKind::Record: {
      std::string s = "{";
      bool first = true;
      for (const auto& [n, ft] : t.fields) {
        if (!first) s += ", ";
        first = false;
        s += n + ": " + type_to_string(ft);
      }
      return s + "}";
    }
    case TypeKind::Union: {
      std::string s;
      bool first = true;
      for (TypeKind m : t.members) {
        if (!first) s += " | ";
        first = false;
        s += type_to_string(TypeExpr{m, {}, {}, {}});
      }
      return s;
    }
  }
  return "?";
}

inline bool operator<(const TypeExpr& a, const TypeExpr& b) {
  return type_to_string(a) < type_to_string(b);
}

// ---------------------------------------------------------------------------
// Values

enum class ValueKind { Unit, Bool, Int, Str, None, Some, Record, Pid, Lbl };

struct Value {
  ValueKind kind = ValueKind::Unit;
  bool b = false;
  std::int64_t i = 0;
  std::string s;  // Str payload, Some payload, Pid name, Lbl name
  std::vector<std::pair<std::string, Value>> fields;  // sorted by name

  bool operator==(const Value& o) const {
    return kind == o.kind && b == o.b && i == o.i && s == o.s &&
           fields == o.fields;
  }
  bool operator!=(const Value& o) const { return !(*this == o); }
};

inline Value v_unit() { return Value{}; }
inline Value v_bool(bool b) {
  Value v;
  v.kind = ValueKind::Bool;
  v.b = b;
  return v;
}
inline Value v_int(std::int64_t i) {
  Value v;
  v.kind = ValueKind::Int;
  v.i = i;
  return v;
}
inline Value v_str(std::string s) {
  Value v;
  v.kind = ValueKind::Str;
  v.s = std::move(s);
  return v;
}
inline Value v_none() {
  Value v;
  v.kind = ValueKind::None;
  return v;
}
inline Value v_some(std::string s) {
  Value v;
  v.kind = ValueKind::Some;
  v.s = std::move(s);
  return v;
}
inline Value v_record(std::vector<std::pair<std::string, Value>> fs) {
  Value v;
  v.kind = ValueKind::Record;
  std::sort(fs.begin(), fs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  v.fields = std::move(fs);
  return v;
}
inline Value v_pid(std::string p) {
  Value v;
  v.kind = ValueKind::Pid;
  v.s = std::move(p);
  return v;
}
inline Value v_lbl(std::string l) {
  Value v;
  v.kind = ValueKind::Lbl;
  v.s = std::move(l);
  return v;
}

inline const Value* record_field(const Value& v, const std::string& name) {
  for (const auto& [n, fv] : v.fields)
    if (n == name) return &fv;
  return nullptr;
}

inline Value record_with(Value v, const std::string& name, Value fv) {
  for (auto& [n, old] : v.fields) {
    if (n == name) {
      old = std::move(fv);
      return v;
    }
  }
  v.fields.emplace_back(name, std::move(fv));
  std::sort(v.fields.begin(), v.fields.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return v;
}

// The canonical type a value inhabits.
inline TypeExpr type_of(const Value& v) {
  switch (v.kind) {
    case ValueKind::Unit: return t_unit();
    case ValueKind::Bool: return t_bool();
    case ValueKind::Int: return t_int();
    case ValueKind::Str: return t_str();
    case ValueKind::None:
    case ValueKind::Some: return t_maybe(t_str());
    case ValueKind::Pid: return t_pid();
    case ValueKind::Lbl: return t_lbl();
    case ValueKind::Record: {
      std::vector<std::pair<std::string, TypeExpr>> fs;
      for (const auto& [n, fv] : v.fields) fs.emplace_back(n, type_of(fv));
      return t_record(std::move(fs));
    }
  }
  return t_unit();
}

// Membership test "v inhabits T". Nat refines Int to non-negative values.
inline bool inhabits(const Value& v, const TypeExpr& t) {
  if (t.kind == TypeKind::Nat) return v.kind == ValueKind::Int && v.i >= 0;
  if (t.kind == TypeKind::Val) return is_datatype(type_of(v));
  if (t.kind == TypeKind::Union) {
    for (TypeKind m : t.members)
      if (inhabits(v, TypeExpr{m, {}, {}, {}})) return true;
    return false;
  }
  if (t.kind == TypeKind::Record) {
    if (v.kind != ValueKind::Record) return false;
    if (v.fields.size() != t.fields.size()) return false;
    for (size_t i = 0; i < t.fields.size(); ++i) {
      if (v.fields[i].first != t.fields[i].first) return false;
      if (!inhabits(v.fields[i].second, t.fields[i].second)) return false;
    }
    return true;
  }
  return type_of(v) == t;
}

inline std::string value_to_string(const Value& v) {
  switch (v.kind) {
    case ValueKind::Unit: return "unit";
    case ValueKind::Bool: return v.b ? "true" : "false";
    case ValueKind::Int: return std::to_string(v.i);
    case ValueKind::Str: return "\"" + v.s + "\"";
    case ValueKind::None: return "none";
    case ValueKind::Some: return "some(\"" + v.s + "\")";
    case ValueKind::Pid: return "pid " + v.s;
    case ValueKind::Lbl: return "label " + v.s;
    case ValueKind::Record: {
      std::string s = "{";
      bool first = true;
      for (const auto& [n, fv] : v.fields) {
        if (!first) s += ", ";
        first = false;
        s += n + ": " + value_to_string(fv);
      }
      return s + "}";
    }
  }
  return "?";
}

inline bool operator<(const Value& a, const Value& b) {
  return value_to_string(a) < value_to_string(b);
}

// A canonical inhabitant used when a process declares no initial value.
inline Value default_inhabitant(const TypeExpr& t) {
  switch (t.kind) {
    case TypeKind::Nat:
    case TypeKind::Int: return v_int(0);
    case TypeKind::Bool: return v_bool(false);
    case TypeKind::Str: return v_str("");
    case TypeKind::Unit: return v_unit();
    case TypeKind::Maybe: return v_none();
    case TypeKind::Record: {
      std::vector<std::pair<std::string, Value>> fs;
      for (const auto& [n, ft] : t.fields) fs.emplace_back(n, default_inhabitant(ft));
      return v_record(std::move(fs));
    }
    default: return v_unit();
  }
}

}  // namespace rc
