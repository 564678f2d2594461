#pragma once

// Concrete syntax for choreography (.rc) and process network (.rp) sources.
//
// Send/receive subjects are classified by the payload type of the frame in
// scope, so frame declarations (or frame parameters) must precede use.

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rc/ast.hpp"
#include "rc/proc_ast.hpp"

namespace rc {

struct SyntaxError : std::runtime_error {
  int line;
  int col;
  SyntaxError(const std::string& msg, int line, int col)
      : std::runtime_error("syntax error at " + std::to_string(line) + ":" +
                           std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
};

struct UnboundName : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ReservedLabel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RuntimeOnlyTerm : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

enum class Tok { Ident, Int, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t value = 0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { tokenize(); }
  const std::vector<Token>& tokens() const { return toks_; }

 private:
  void tokenize() {
    size_t i = 0;
    int line = 1, col = 1;
    auto advance = [&](size_t n) {
      for (size_t j = 0; j < n; ++j) {
        if (src_[i + j] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
      i += n;
    };
    while (i < src_.size()) {
      char c = src_[i];
      if (c == '/' && i + 1 < src_.size() && src_[i + 1] == '/') {
        size_t j = i;
        while (j < src_.size() && src_[j] != '\n') ++j;
        advance(j - i);
        continue;
      }
      if (isspace(static_cast<unsigned char>(c))) {
        advance(1);
        continue;
      }
      Token t;
      t.line = line;
      t.col = col;
      if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t j = i;
        while (j < src_.size() &&
               (isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
          ++j;
        t.kind = Tok::Ident;
        t.text = src_.substr(i, j - i);
        advance(j - i);
      } else if (isdigit(static_cast<unsigned char>(c)) ||
                 (c == '-' && i + 1 < src_.size() &&
                  isdigit(static_cast<unsigned char>(src_[i + 1])))) {
        size_t j = i + 1;
        while (j < src_.size() && isdigit(static_cast<unsigned char>(src_[j])))
          ++j;
        t.kind = Tok::Int;
        t.text = src_.substr(i, j - i);
        t.value = std::stoll(t.text);
        advance(j - i);
      } else if (c == '"') {
        size_t j = i + 1;
        std::string s;
        while (j < src_.size() && src_[j] != '"') {
          s += src_[j];
          ++j;
        }
        if (j >= src_.size()) throw SyntaxError("unterminated string", line, col);
        t.kind = Tok::String;
        t.text = s;
        advance(j + 1 - i);
      } else {
        t.kind = Tok::Punct;
        auto two = src_.substr(i, 2);
        auto three = src_.substr(i, 3);
        if (three == "<->") {
          t.text = three;
          advance(3);
        } else if (two == ":=" || two == "->") {
          t.text = two;
          advance(2);
        } else {
          t.text = std::string(1, c);
          advance(1);
        }
      }
      toks_.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::End;
    end.line = line;
    end.col = col;
    toks_.push_back(end);
  }

  std::string src_;
  std::vector<Token> toks_;
};

class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> toks) : toks_(std::move(toks)) {}

  const Token& peek(size_t ahead = 0) const {
    size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  Token next() {
    Token t = peek();
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == Tok::End; }
  size_t mark() const { return pos_; }
  void rewind(size_t m) { pos_ = m; }

  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    throw SyntaxError(msg + " (got '" + (t.kind == Tok::End ? "<eof>" : t.text) +
                          "')",
                      t.line, t.col);
  }

  bool is_punct(const std::string& p, size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Punct && t.text == p;
  }
  bool is_ident(const std::string& w, size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Ident && t.text == w;
  }
  void expect_punct(const std::string& p) {
    if (!is_punct(p)) fail("expected '" + p + "'");
    next();
  }
  std::string expect_ident(const std::string& what) {
    if (peek().kind != Tok::Ident) fail("expected " + what);
    return next().text;
  }
  bool accept_punct(const std::string& p) {
    if (!is_punct(p)) return false;
    next();
    return true;
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
};

inline const std::set<std::string> kKeywords = {
    "def",   "frame", "from",  "to",     "in",      "spawn",   "at",
    "with",  "if",    "else",  "send",   "recv",    "sent",    "received",
    "process", "connect", "new", "branch", "compute", "delivered", "bag",
    "pid",   "label", "true",  "false",  "unit",    "none",    "some"};

// --- shared sub-parsers ------------------------------------------------------

inline TypeExpr parse_type(TokenStream& ts);

inline TypeExpr parse_type_atom(TokenStream& ts) {
  if (ts.is_punct("{")) {
    ts.next();
    std::vector<std::pair<std::string, TypeExpr>> fields;
    while (!ts.is_punct("}")) {
      std::string name = ts.expect_ident("field name");
      ts.expect_punct(":");
      fields.emplace_back(name, parse_type(ts));
      if (!ts.accept_punct(",")) break;
    }
    ts.expect_punct("}");
    return t_record(std::move(fields));
  }
  std::string name = ts.expect_ident("type name");
  if (name == "Nat") return t_nat();
  if (name == "Int") return t_int();
  if (name == "Bool") return t_bool();
  if (name == "Str") return t_str();
  if (name == "Unit") return t_unit();
  if (name == "VAL") return t_val();
  if (name == "PID") return t_pid();
  if (name == "LBL") return t_lbl();
  if (name == "Maybe") {
    ts.expect_punct("(");
    TypeExpr inner = parse_type(ts);
    ts.expect_punct(")");
    return t_maybe(std::move(inner));
  }
  ts.fail("unknown type '" + name + "'");
}

inline TypeExpr parse_type(TokenStream& ts) {
  TypeExpr first = parse_type_atom(ts);
  if (!ts.is_punct("|")) return first;
  std::set<TypeKind> atoms;
  auto add = [&](const TypeExpr& t) {
    if (t.kind != TypeKind::Val && t.kind != TypeKind::Pid &&
        t.kind != TypeKind::Lbl)
      ts.fail("union members must be VAL, PID or LBL");
    atoms.insert(t.kind);
  };
  add(first);
  while (ts.accept_punct("|")) add(parse_type_atom(ts));
  return t_union(std::move(atoms));
}

inline Value parse_value(TokenStream& ts) {
  const Token& t = ts.peek();
  if (t.kind == Tok::Int) {
    ts.next();
    return v_int(t.value);
  }
  if (t.kind == Tok::String) {
    ts.next();
    return v_str(t.text);
  }
  if (t.kind == Tok::Ident) {
    if (t.text == "true") {
      ts.next();
      return v_bool(true);
    }
    if (t.text == "false") {
      ts.next();
      return v_bool(false);
    }
    if (t.text == "unit") {
      ts.next();
      return v_unit();
    }
    if (t.text == "none") {
      ts.next();
      return v_none();
    }
    if (t.text == "some") {
      ts.next();
      ts.expect_punct("(");
      if (ts.peek().kind != Tok::String) ts.fail("expected string literal");
      std::string s = ts.next().text;
      ts.expect_punct(")");
      return v_some(s);
    }
  }
  if (ts.is_punct("{")) {
    ts.next();
    std::vector<std::pair<std::string, Value>> fields;
    while (!ts.is_punct("}")) {
      std::string name = ts.expect_ident("field name");
      ts.expect_punct(":");
      fields.emplace_back(name, parse_value(ts));
      if (!ts.accept_punct(",")) break;
    }
    ts.expect_punct("}");
    return v_record(std::move(fields));
  }
  ts.fail("expected value literal");
}

inline bool at_value_literal(const TokenStream& ts) {
  const Token& t = ts.peek();
  if (t.kind == Tok::Int || t.kind == Tok::String) return true;
  if (t.kind == Tok::Punct && t.text == "{") return true;
  if (t.kind == Tok::Ident)
    return t.text == "true" || t.text == "false" || t.text == "unit" ||
           t.text == "none" || t.text == "some";
  return false;
}

// Function position: a registry name or an inline constant.
inline FuncRef parse_funcref(TokenStream& ts) {
  if (at_value_literal(ts)) return FuncRef::lit(parse_value(ts));
  std::string name = ts.expect_ident("function name");
  return FuncRef::named(name);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Choreography parser

class ChorParser {
 public:
  explicit ChorParser(const std::string& src)
      : ts_(detail::Lexer(src).tokens()) {}

  Program parse() {
    collect_headers();
    Program prog;
    while (!ts_.at_end()) {
      if (ts_.is_ident("process") && looks_like_process_decl()) {
        prog.processes.push_back(parse_process_decl());
      } else if (ts_.is_ident("connect")) {
        prog.connections.push_back(parse_connect_decl());
        prog.has_connect_decls = true;
      } else if (ts_.is_ident("def")) {
        ProcDef d = parse_def();
        prog.defs[d.name] = std::move(d);
      } else {
        break;
      }
    }
    prog.term = parse_block_items(/*stop_at_rbrace=*/false);
    if (!ts_.at_end()) ts_.fail("unexpected trailing input");
    return prog;
  }

  int next_src_id = 0;

 private:
  detail::TokenStream ts_;
  // Procedure headers for call-argument classification.
  std::map<std::string, std::vector<Param>> headers_;
  // Frames in scope with their payload type.
  std::vector<std::pair<std::string, TypeExpr>> frame_scope_;

  const TypeExpr* frame_type(const std::string& k) const {
    for (auto it = frame_scope_.rbegin(); it != frame_scope_.rend(); ++it)
      if (it->first == k) return &it->second;
    return nullptr;
  }

  bool looks_like_process_decl() const {
    // `process p: T ...;` vs a possible future statement use of the word.
    return ts_.peek(1).kind == detail::Tok::Ident && ts_.is_punct(":", 2);
  }

  ProcessDecl parse_process_decl() {
    ts_.next();  // process
    ProcessDecl d;
    d.name = ts_.expect_ident("process name");
    ts_.expect_punct(":");
    d.type = detail::parse_type(ts_);
    if (ts_.accept_punct("=")) {
      d.init = detail::parse_value(ts_);
      d.has_init = true;
    }
    ts_.expect_punct(";");
    return d;
  }

  ConnectDecl parse_connect_decl() {
    ts_.next();  // connect
    ConnectDecl d;
    d.from = ts_.expect_ident("process name");
    if (ts_.accept_punct("<->")) {
      d.bidirectional = true;
    } else if (ts_.accept_punct("->")) {
      d.bidirectional = false;
    } else {
      ts_.fail("expected '->' or '<->'");
    }
    d.to = ts_.expect_ident("process name");
    ts_.expect_punct(";");
    return d;
  }

  // First pass: record every `def NAME(params)` header so calls can be
  // classified regardless of definition order.
  void collect_headers() {
    size_t m = ts_.mark();
    int depth = 0;
    while (!ts_.at_end()) {
      if (ts_.is_punct("{")) {
        ++depth;
        ts_.next();
        continue;
      }
      if (ts_.is_punct("}")) {
        --depth;
        ts_.next();
        continue;
      }
      if (depth == 0 && ts_.is_ident("def")) {
        ts_.next();
        std::string name = ts_.expect_ident("procedure name");
        ts_.expect_punct("(");
        std::vector<Param> params;
        if (!ts_.is_punct(")")) {
          do {
            params.push_back(parse_param());
          } while (ts_.accept_punct(","));
        }
        ts_.expect_punct(")");
        headers_[name] = std::move(params);
        continue;
      }
      ts_.next();
    }
    ts_.rewind(m);
  }

  Param parse_param() {
    Param p;
    if (ts_.is_ident("frame")) {
      ts_.next();
      p.kind = ParamKind::Frame;
      p.name = ts_.expect_ident("frame name");
      ts_.expect_punct(":");
      p.type = detail::parse_type(ts_);
      if (!ts_.is_ident("from")) ts_.fail("expected 'from'");
      ts_.next();
      p.sender = ts_.expect_ident("process name");
      if (!ts_.is_ident("to")) ts_.fail("expected 'to'");
      ts_.next();
      p.receiver = ts_.expect_ident("process name");
      return p;
    }
    if (ts_.is_ident("label")) {
      ts_.next();
      p.kind = ParamKind::Label;
      p.name = ts_.expect_ident("label name");
      if (p.name == kDefaultLabel)
        throw ReservedLabel("label 'default' is reserved");
      return p;
    }
    p.name = ts_.expect_ident("parameter name");
    ts_.expect_punct(":");
    TypeExpr t = detail::parse_type(ts_);
    if (ts_.accept_punct("*")) {
      p.kind = ParamKind::Func;
      p.binary = true;
      p.type = std::move(t);
      p.payload = detail::parse_type(ts_);
      ts_.expect_punct("->");
      p.result = detail::parse_type(ts_);
    } else if (ts_.accept_punct("->")) {
      p.kind = ParamKind::Func;
      p.type = std::move(t);
      p.result = detail::parse_type(ts_);
    } else {
      p.kind = ParamKind::Proc;
      p.type = std::move(t);
    }
    return p;
  }

  ProcDef parse_def() {
    ts_.next();  // def
    ProcDef d;
    d.name = ts_.expect_ident("procedure name");
    ts_.expect_punct("(");
    if (!ts_.is_punct(")")) {
      do {
        d.params.push_back(parse_param());
      } while (ts_.accept_punct(","));
    }
    ts_.expect_punct(")");
    ts_.expect_punct("{");
    size_t scope_base = frame_scope_.size();
    for (const auto& p : d.params)
      if (p.kind == ParamKind::Frame) frame_scope_.emplace_back(p.name, p.type);
    d.body = parse_block_items(/*stop_at_rbrace=*/true);
    frame_scope_.resize(scope_base);
    ts_.expect_punct("}");
    // Free frames and processes of the body must be parameters. A frame
    // parameter's endpoint names are interface-only: the body cannot use
    // them unless they are process parameters themselves.
    std::set<std::string> formal;
    for (const auto& p : d.params) formal.insert(p.name);
    for (const auto& k : free_frame_names(d.body))
      if (!formal.count(k))
        throw UnboundName("frame " + k + " is free in the body of " + d.name);
    for (const auto& p : free_process_names(d.body))
      if (!formal.count(p))
        throw UnboundName("process " + p + " is free in the body of " + d.name);
    return d;
  }

  // Parses statements until the closing brace (or end of input at top level).
  Chor parse_block_items(bool stop_at_rbrace) {
    Chor c;
    size_t scope_base = frame_scope_.size();
    while (true) {
      if (stop_at_rbrace && ts_.is_punct("}")) break;
      if (!stop_at_rbrace && ts_.at_end()) break;
      if (ts_.peek().kind == detail::Tok::Int && ts_.peek().value == 0) {
        ts_.next();  // explicit no-op
        ts_.accept_punct(";");
        continue;
      }
      parse_item_into(c, stop_at_rbrace);
    }
    frame_scope_.resize(scope_base);
    return c;
  }

  void parse_item_into(Chor& c, bool stop_at_rbrace) {
    if (ts_.is_ident("frame")) {
      ts_.next();
      NewFrame nf;
      nf.src_id = next_src_id++;
      nf.frame = ts_.expect_ident("frame name");
      ts_.expect_punct(":");
      nf.payload = detail::parse_type(ts_);
      if (!ts_.is_ident("from")) ts_.fail("expected 'from'");
      ts_.next();
      nf.sender = ts_.expect_ident("process name");
      if (!ts_.is_ident("to")) ts_.fail("expected 'to'");
      ts_.next();
      nf.receiver = ts_.expect_ident("process name");
      frame_scope_.emplace_back(nf.frame, nf.payload);
      if (ts_.is_ident("in")) {
        ts_.next();
        ts_.expect_punct("{");
        c.items.push_back(std::move(nf));
        Chor rest = parse_block_items(true);
        ts_.expect_punct("}");
        for (auto& it : rest.items) c.items.push_back(std::move(it));
        require_block_end(stop_at_rbrace);
      } else {
        ts_.expect_punct(";");
        c.items.push_back(std::move(nf));
        Chor rest = parse_block_items(stop_at_rbrace);
        for (auto& it : rest.items) c.items.push_back(std::move(it));
      }
      return;
    }
    if (ts_.is_ident("spawn")) {
      ts_.next();
      NewProc np;
      np.src_id = next_src_id++;
      np.child = ts_.expect_ident("process name");
      if (!ts_.is_ident("at")) ts_.fail("expected 'at'");
      ts_.next();
      np.parent = ts_.expect_ident("process name");
      if (!ts_.is_ident("with")) ts_.fail("expected 'with'");
      ts_.next();
      np.fn = detail::parse_funcref(ts_);
      if (ts_.is_ident("in")) {
        ts_.next();
        ts_.expect_punct("{");
        c.items.push_back(std::move(np));
        Chor rest = parse_block_items(true);
        ts_.expect_punct("}");
        for (auto& it : rest.items) c.items.push_back(std::move(it));
        require_block_end(stop_at_rbrace);
      } else {
        ts_.expect_punct(";");
        c.items.push_back(std::move(np));
        Chor rest = parse_block_items(stop_at_rbrace);
        for (auto& it : rest.items) c.items.push_back(std::move(it));
      }
      return;
    }
    if (ts_.is_ident("if")) {
      c.items.push_back(parse_cond());
      ts_.accept_punct(";");
      return;
    }
    if (ts_.is_ident("send")) {
      ts_.next();
      ts_.expect_punct("(");
      SendStmt s;
      s.src_id = next_src_id++;
      s.frame = ts_.expect_ident("frame name");
      const TypeExpr* ft = frame_type(s.frame);
      if (!ft) throw UnboundName("frame " + s.frame + " is not in scope");
      ts_.expect_punct(",");
      s.subject.proc = ts_.expect_ident("process name");
      ts_.expect_punct(".");
      if (ft->kind == TypeKind::Pid) {
        s.subject.kind = SubjectKind::Pid;
        s.subject.name = ts_.expect_ident("process name");
      } else if (ft->kind == TypeKind::Lbl) {
        s.subject.kind = SubjectKind::Lbl;
        s.subject.name = ts_.expect_ident("label name");
        if (s.subject.name == kDefaultLabel)
          throw ReservedLabel("label 'default' cannot be sent");
      } else {
        s.subject.kind = SubjectKind::Func;
        s.subject.fn = detail::parse_funcref(ts_);
      }
      ts_.expect_punct(")");
      ts_.expect_punct(";");
      c.items.push_back(std::move(s));
      return;
    }
    if (ts_.is_ident("recv")) {
      ts_.next();
      ts_.expect_punct("(");
      RecvStmt r;
      r.src_id = next_src_id++;
      r.frame = ts_.expect_ident("frame name");
      const TypeExpr* ft = frame_type(r.frame);
      if (!ft) throw UnboundName("frame " + r.frame + " is not in scope");
      ts_.expect_punct(",");
      r.subject.proc = ts_.expect_ident("process name");
      if (ts_.accept_punct(".")) {
        r.subject.has_fn = true;
        r.subject.fn = detail::parse_funcref(ts_);
      }
      ts_.expect_punct(")");
      ts_.expect_punct(";");
      c.items.push_back(std::move(r));
      return;
    }
    // Either a call X(args) or a local statement p.f.
    if (ts_.peek().kind == detail::Tok::Ident) {
      std::string name = ts_.peek().text;
      if (ts_.is_punct("(", 1)) {
        c.items.push_back(parse_call());
        return;
      }
      if (ts_.is_punct(".", 1)) {
        ts_.next();
        ts_.next();
        LocalStmt l;
        l.src_id = next_src_id++;
        l.proc = name;
        l.fn = detail::parse_funcref(ts_);
        ts_.expect_punct(";");
        c.items.push_back(std::move(l));
        return;
      }
    }
    ts_.fail("expected a statement");
  }

  // A declaration block `... in { C }` must end its enclosing block.
  void require_block_end(bool stop_at_rbrace) {
    if (stop_at_rbrace && !ts_.is_punct("}"))
      ts_.fail("nothing may follow a declaration block");
    if (!stop_at_rbrace && !ts_.at_end())
      ts_.fail("nothing may follow a declaration block");
  }

  Item parse_call() {
    CallStmt call;
    call.src_id = next_src_id++;
    call.callee = ts_.expect_ident("procedure name");
    auto hit = headers_.find(call.callee);
    if (hit == headers_.end())
      throw UnboundName("call to unknown procedure " + call.callee);
    const std::vector<Param>& params = hit->second;
    auto param_of = [&](const std::string& n) -> const Param* {
      for (const auto& p : params)
        if (p.name == n) return &p;
      return nullptr;
    };
    ts_.expect_punct("(");
    if (!ts_.is_punct(")")) {
      do {
        std::string formal = ts_.expect_ident("parameter name");
        const Param* p = param_of(formal);
        if (!p)
          throw UnboundName("procedure " + call.callee + " has no parameter " +
                            formal);
        bool shorthand = !ts_.is_punct(":=");
        if (!shorthand) ts_.next();
        switch (p->kind) {
          case ParamKind::Frame:
            call.args.frames[formal] =
                shorthand ? formal : ts_.expect_ident("frame name");
            break;
          case ParamKind::Proc:
            call.args.procs[formal] =
                shorthand ? formal : ts_.expect_ident("process name");
            break;
          case ParamKind::Func:
            call.args.funcs[formal] = shorthand ? FuncRef::named(formal)
                                                : detail::parse_funcref(ts_);
            break;
          case ParamKind::Label: {
            std::string l = shorthand ? formal : ts_.expect_ident("label name");
            if (l == kDefaultLabel)
              throw ReservedLabel("label 'default' cannot be passed");
            call.args.labels[formal] = l;
            break;
          }
        }
      } while (ts_.accept_punct(","));
    }
    ts_.expect_punct(")");
    ts_.expect_punct(";");
    return call;
  }

  Item parse_cond() {
    ts_.next();  // if
    int src = next_src_id++;
    bool negated = ts_.accept_punct("!");
    Guard g;
    g.proc = ts_.expect_ident("process name");
    ts_.expect_punct(".");
    if (ts_.is_ident("sent")) {
      ts_.next();
      g.kind = GuardKind::Sent;
      ts_.expect_punct("(");
      g.frame = ts_.expect_ident("frame name");
      if (!frame_type(g.frame))
        throw UnboundName("frame " + g.frame + " is not in scope");
      ts_.expect_punct(")");
    } else if (ts_.is_ident("received")) {
      ts_.next();
      g.kind = GuardKind::Received;
      ts_.expect_punct("(");
      g.frame = ts_.expect_ident("frame name");
      if (!frame_type(g.frame))
        throw UnboundName("frame " + g.frame + " is not in scope");
      if (ts_.accept_punct(",")) {
        g.kind = GuardKind::ReceivedLbl;
        g.label = ts_.expect_ident("label name");
        if (g.label == kDefaultLabel)
          throw ReservedLabel("label 'default' cannot be matched");
      }
      ts_.expect_punct(")");
    } else {
      g.kind = GuardKind::Expr;
      g.fn = detail::parse_funcref(ts_);
      if (negated) ts_.fail("'!' applies only to sent/received guards");
    }
    ts_.expect_punct("{");
    Chor then_branch = parse_block_items(true);
    ts_.expect_punct("}");
    Chor else_branch;
    if (ts_.is_ident("else")) {
      ts_.next();
      ts_.expect_punct("{");
      else_branch = parse_block_items(true);
      ts_.expect_punct("}");
    }
    if (negated) std::swap(then_branch, else_branch);
    Item it = cond_item(std::move(g), std::move(then_branch),
                        std::move(else_branch));
    std::get<CondStmt>(it).src_id = src;
    return it;
  }
};

inline Program parse_choreography(const std::string& src) {
  return ChorParser(src).parse();
}

// ---------------------------------------------------------------------------
// Process network parser

class ProcParser {
 public:
  explicit ProcParser(const std::string& src)
      : ts_(detail::Lexer(src).tokens()) {}

  int next_src_id = 0;

  proc::ProcProgram parse() {
    collect_headers();
    proc::ProcProgram prog;
    while (!ts_.at_end()) {
      if (ts_.is_ident("def")) {
        proc::ProcBehaviourDef d = parse_def();
        prog.defs[d.name] = std::move(d);
      } else if (ts_.is_ident("process")) {
        prog.network.processes.push_back(parse_process());
      } else if (ts_.is_ident("bag")) {
        throw RuntimeOnlyTerm("bags are runtime terms and cannot be parsed");
      } else if (ts_.peek().kind == detail::Tok::Int && ts_.peek().value == 0) {
        ts_.next();
        ts_.accept_punct(";");
      } else {
        ts_.fail("expected 'def', 'process' or end of input");
      }
    }
    std::sort(prog.network.processes.begin(), prog.network.processes.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
    // Every named process starts knowing every other one.
    for (auto& p : prog.network.processes)
      for (const auto& q : prog.network.processes)
        if (p.name != q.name) p.theta.fc[q.name] = 0;
    return prog;
  }

 private:
  detail::TokenStream ts_;
  std::map<std::string, std::vector<Param>> headers_;

  void collect_headers() {
    size_t m = ts_.mark();
    int depth = 0;
    while (!ts_.at_end()) {
      if (ts_.is_punct("{")) {
        ++depth;
        ts_.next();
        continue;
      }
      if (ts_.is_punct("}")) {
        --depth;
        ts_.next();
        continue;
      }
      if (depth == 0 && ts_.is_ident("def")) {
        ts_.next();
        std::string name = ts_.expect_ident("procedure name");
        ts_.expect_punct("(");
        std::vector<Param> params;
        if (!ts_.is_punct(")")) {
          do {
            params.push_back(parse_param());
          } while (ts_.accept_punct(","));
        }
        ts_.expect_punct(")");
        headers_[name] = std::move(params);
        continue;
      }
      ts_.next();
    }
    ts_.rewind(m);
  }

  Param parse_param() {
    Param p;
    if (ts_.is_ident("frame")) {
      ts_.next();
      p.kind = ParamKind::Frame;
      p.name = ts_.expect_ident("frame name");
      return p;
    }
    if (ts_.is_ident("pid")) {
      ts_.next();
      p.kind = ParamKind::Proc;
      p.name = ts_.expect_ident("process name");
      return p;
    }
    if (ts_.is_ident("label")) {
      ts_.next();
      p.kind = ParamKind::Label;
      p.name = ts_.expect_ident("label name");
      return p;
    }
    p.kind = ParamKind::Func;
    p.name = ts_.expect_ident("parameter name");
    ts_.expect_punct(":");
    p.type = detail::parse_type(ts_);
    ts_.expect_punct("->");
    p.result = detail::parse_type(ts_);
    return p;
  }

  proc::ProcBehaviourDef parse_def() {
    ts_.next();  // def
    proc::ProcBehaviourDef d;
    d.name = ts_.expect_ident("procedure name");
    ts_.expect_punct("(");
    if (!ts_.is_punct(")")) {
      do {
        d.params.push_back(parse_param());
      } while (ts_.accept_punct(","));
    }
    ts_.expect_punct(")");
    ts_.expect_punct("{");
    d.body = parse_behaviour();
    ts_.expect_punct("}");
    return d;
  }

  proc::Process parse_process() {
    ts_.next();  // process
    proc::Process p;
    p.name = ts_.expect_ident("process name");
    ts_.expect_punct("=");
    p.cell = detail::parse_value(ts_);
    ts_.expect_punct("{");
    p.behaviour = parse_behaviour();
    ts_.expect_punct("}");
    return p;
  }

  std::string parse_frame_name() {
    if (ts_.peek().kind == detail::Tok::Int)
      throw RuntimeOnlyTerm("numeric frame identifiers are runtime terms");
    return ts_.expect_ident("frame name");
  }

  proc::Behaviour parse_behaviour() {
    proc::Behaviour b;
    while (!ts_.is_punct("}") && !ts_.at_end()) {
      if (ts_.peek().kind == detail::Tok::Int && ts_.peek().value == 0) {
        ts_.next();
        ts_.accept_punct(";");
        continue;
      }
      b.items.push_back(parse_bitem());
    }
    return b;
  }

  proc::BItem parse_bitem() {
    using proc::BranchB;
    using proc::Behaviour;
    using proc::CallB;
    using proc::CondB;
    using proc::FrameRef;
    using proc::LocalB;
    using proc::NewFrameB;
    using proc::PGuardKind;
    using proc::RecvB;
    using proc::RecvMode;
    using proc::SendB;
    using proc::SpawnB;
    if (ts_.is_ident("bag"))
      throw RuntimeOnlyTerm("bags are runtime terms and cannot be parsed");
    if (ts_.is_ident("new")) {
      ts_.next();
      ts_.expect_punct("(");
      NewFrameB s;
      s.src_id = next_src_id++;
      s.peer = ts_.expect_ident("process name");
      ts_.expect_punct(",");
      s.frame = parse_frame_name();
      ts_.expect_punct(")");
      ts_.expect_punct(";");
      return s;
    }
    if (ts_.is_ident("compute")) {
      ts_.next();
      ts_.expect_punct("(");
      LocalB s;
      s.src_id = next_src_id++;
      s.fn = detail::parse_funcref(ts_);
      ts_.expect_punct(")");
      ts_.expect_punct(";");
      return s;
    }
    if (ts_.is_ident("send")) {
      ts_.next();
      ts_.expect_punct("(");
      SendB s;
      s.src_id = next_src_id++;
      s.peer = ts_.expect_ident("process name");
      ts_.expect_punct(",");
      s.frame = FrameRef::named(parse_frame_name());
      ts_.expect_punct(",");
      if (ts_.is_ident("pid")) {
        ts_.next();
        s.kind = SubjectKind::Pid;
        s.name = ts_.expect_ident("process name");
      } else if (ts_.is_ident("label")) {
        ts_.next();
        s.kind = SubjectKind::Lbl;
        s.name = ts_.expect_ident("label name");
        if (s.name == kDefaultLabel)
          throw ReservedLabel("label 'default' cannot be sent");
      } else {
        s.kind = SubjectKind::Func;
        s.fn = detail::parse_funcref(ts_);
      }
      ts_.expect_punct(")");
      ts_.expect_punct(";");
      return s;
    }
    if (ts_.is_ident("recv")) {
      ts_.next();
      ts_.expect_punct("(");
      RecvB s;
      s.src_id = next_src_id++;
      s.peer = ts_.expect_ident("process name");
      ts_.expect_punct(",");
      s.frame = FrameRef::named(parse_frame_name());
      if (ts_.accept_punct(",")) {
        if (ts_.is_ident("pid")) {
          ts_.next();
          s.mode = RecvMode::PidBind;
          s.bind_pid = ts_.expect_ident("process name");
        } else {
          s.mode = RecvMode::Value;
          s.fn = detail::parse_funcref(ts_);
        }
      } else {
        s.mode = RecvMode::Label;
      }
      ts_.expect_punct(")");
      ts_.expect_punct(";");
      return s;
    }
    if (ts_.is_ident("branch")) {
      ts_.next();
      ts_.expect_punct("(");
      BranchB s;
      s.src_id = next_src_id++;
      s.peer = ts_.expect_ident("process name");
      ts_.expect_punct(",");
      s.frame = FrameRef::named(parse_frame_name());
      ts_.expect_punct(")");
      ts_.expect_punct("{");
      while (!ts_.is_punct("}")) {
        std::string label = ts_.expect_ident("label");
        ts_.expect_punct(":");
        ts_.expect_punct("{");
        auto arm = std::make_shared<Behaviour>(parse_behaviour());
        ts_.expect_punct("}");
        s.arms[label] = std::move(arm);
      }
      ts_.expect_punct("}");
      return s;
    }
    if (ts_.is_ident("if")) {
      ts_.next();
      CondB s;
      s.src_id = next_src_id++;
      if (ts_.is_ident("delivered")) {
        ts_.next();
        ts_.expect_punct("(");
        s.guard.kind = PGuardKind::Delivered;
        s.guard.peer = ts_.expect_ident("process name");
        ts_.expect_punct(",");
        s.guard.frame = FrameRef::named(parse_frame_name());
        ts_.expect_punct(")");
      } else {
        s.guard.kind = PGuardKind::Expr;
        s.guard.fn = detail::parse_funcref(ts_);
      }
      ts_.expect_punct("{");
      s.then_branch = std::make_shared<Behaviour>(parse_behaviour());
      ts_.expect_punct("}");
      s.else_branch = std::make_shared<Behaviour>();
      if (ts_.is_ident("else")) {
        ts_.next();
        ts_.expect_punct("{");
        *s.else_branch = parse_behaviour();
        ts_.expect_punct("}");
      }
      ts_.accept_punct(";");
      return s;
    }
    if (ts_.is_ident("spawn")) {
      ts_.next();
      SpawnB s;
      s.src_id = next_src_id++;
      s.child = ts_.expect_ident("process name");
      if (!ts_.is_ident("with")) ts_.fail("expected 'with'");
      ts_.next();
      s.fn = detail::parse_funcref(ts_);
      ts_.expect_punct("{");
      s.child_body = std::make_shared<Behaviour>(parse_behaviour());
      ts_.expect_punct("}");
      ts_.accept_punct(";");
      return s;
    }
    // A call.
    if (ts_.peek().kind == detail::Tok::Ident && ts_.is_punct("(", 1)) {
      CallB call;
      call.src_id = next_src_id++;
      call.callee = ts_.expect_ident("procedure name");
      auto hit = headers_.find(call.callee);
      if (hit == headers_.end())
        throw UnboundName("call to unknown procedure " + call.callee);
      const auto& params = hit->second;
      auto param_of = [&](const std::string& n) -> const Param* {
        for (const auto& p : params)
          if (p.name == n) return &p;
        return nullptr;
      };
      ts_.expect_punct("(");
      if (!ts_.is_punct(")")) {
        do {
          std::string formal = ts_.expect_ident("parameter name");
          const Param* p = param_of(formal);
          if (!p)
            throw UnboundName("procedure " + call.callee +
                              " has no parameter " + formal);
          bool shorthand = !ts_.is_punct(":=");
          if (!shorthand) ts_.next();
          switch (p->kind) {
            case ParamKind::Frame:
              call.args.frames[formal] =
                  shorthand ? formal : parse_frame_name();
              break;
            case ParamKind::Proc:
              call.args.procs[formal] =
                  shorthand ? formal : ts_.expect_ident("process name");
              break;
            case ParamKind::Func:
              call.args.funcs[formal] = shorthand
                                            ? FuncRef::named(formal)
                                            : detail::parse_funcref(ts_);
              break;
            case ParamKind::Label:
              call.args.labels[formal] =
                  shorthand ? formal : ts_.expect_ident("label name");
              break;
          }
        } while (ts_.accept_punct(","));
      }
      ts_.expect_punct(")");
      ts_.expect_punct(";");
      return call;
    }
    ts_.fail("expected a behaviour statement");
  }
};

inline proc::ProcProgram parse_process_network(const std::string& src) {
  return ProcParser(src).parse();
}

}  // namespace rc
