#ifndef BR_PARSE_HPP
#define BR_PARSE_HPP

#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "br/subst.hpp"
#include "br/syntax.hpp"

namespace br {

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " at " + std::to_string(line_) + ":" + std::to_string(col_)),
        line(line_),
        col(col_) {}
};

namespace detail {

enum class Tok {
  Ident, IntLit, TyVar,       // f2, 17, 'a
  Lambda, Dot, LParen, RParen, LBracket, RBracket, LBrace, RBrace,
  Equals, Comma, Arrow, Star, Leq, Assign, Colon,
  KwRec, KwLet, KwIn, KwIf, KwThen, KwElse, KwForall,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  int line, col;
};

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, tok_.line, tok_.col); }

 private:
  void skip_space() {
    for (;;) {
      while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) bump();
      // `--` line comments
      if (pos_ + 1 < src_.size() && src_[pos_] == '-' && src_[pos_ + 1] == '-') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
        continue;
      }
      break;
    }
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void advance() {
    skip_space();
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_ = {Tok::End, "", line_, col_};
      return;
    }
    char c = src_[pos_];
    auto two = [&](char a, char b) {
      return c == a && pos_ + 1 < src_.size() && src_[pos_ + 1] == b;
    };
    if (two('-', '>')) { set(Tok::Arrow, "->"); return; }
    if (two('<', '=')) { set(Tok::Leq, "<="); return; }
    if (two(':', '=')) { set(Tok::Assign, ":="); return; }
    switch (c) {
      case '\\': set(Tok::Lambda, "\\"); return;
      case '.': set(Tok::Dot, "."); return;
      case '(': set(Tok::LParen, "("); return;
      case ')': set(Tok::RParen, ")"); return;
      case '[': set(Tok::LBracket, "["); return;
      case ']': set(Tok::RBracket, "]"); return;
      case '{': set(Tok::LBrace, "{"); return;
      case '}': set(Tok::RBrace, "}"); return;
      case '=': set(Tok::Equals, "="); return;
      case ',': set(Tok::Comma, ","); return;
      case '*': set(Tok::Star, "*"); return;
      case ':': set(Tok::Colon, ":"); return;
      case '\'': {
        bump();
        std::string name;
        while (pos_ < src_.size() && ident_char(src_[pos_])) {
          name += src_[pos_];
          bump();
        }
        if (name.empty()) throw ParseError("expected type variable name after '", tok_.line, tok_.col);
        tok_ = {Tok::TyVar, std::move(name), tok_.line, tok_.col};
        return;
      }
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string num;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        num += src_[pos_];
        bump();
      }
      tok_ = {Tok::IntLit, std::move(num), tok_.line, tok_.col};
      return;
    }
    if (ident_start(c)) {
      std::string id;
      // '-' joined to an alphanumeric continues the identifier (rule names
      // like arrow-i); '->' never matches since '>' is not alphanumeric.
      while (pos_ < src_.size() &&
             (ident_char(src_[pos_]) ||
              (src_[pos_] == '-' && pos_ + 1 < src_.size() &&
               std::isalnum(static_cast<unsigned char>(src_[pos_ + 1]))))) {
        id += src_[pos_];
        bump();
      }
      Tok k = Tok::Ident;
      if (id == "rec") k = Tok::KwRec;
      else if (id == "let") k = Tok::KwLet;
      else if (id == "in") k = Tok::KwIn;
      else if (id == "if") k = Tok::KwIf;
      else if (id == "then") k = Tok::KwThen;
      else if (id == "else") k = Tok::KwElse;
      else if (id == "forall") k = Tok::KwForall;
      tok_ = {k, std::move(id), tok_.line, tok_.col};
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
  }

  void set(Tok k, const char* text) {
    size_t n = std::string_view(text).size();
    for (size_t i = 0; i < n; ++i) bump();
    tok_ = {k, text, tok_.line, tok_.col};
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

// -- Types -------------------------------------------------------------------

class TypeParser {
 public:
  TypeParser(Lexer& lx) : lx_(lx) {}

  Type type() {
    Type lhs = prod_type();
    if (lx_.peek().kind == Tok::Arrow) {
      lx_.take();
      return Type::arrow(lhs, type());
    }
    return lhs;
  }

  TypeScheme scheme() {
    if (lx_.peek().kind != Tok::KwForall) return TypeScheme(type());
    lx_.take();
    std::vector<std::string> qs;
    while (lx_.peek().kind == Tok::TyVar) qs.push_back(lx_.take().text);
    if (qs.empty()) lx_.fail("expected quantified type variables after 'forall'");
    expect(Tok::Dot, "'.'");
    return TypeScheme(std::move(qs), type());
  }

 private:
  Type prod_type() {
    Type lhs = postfix_type();
    if (lx_.peek().kind == Tok::Star) {
      lx_.take();
      return Type::prod(lhs, prod_type());
    }
    return lhs;
  }

  Type postfix_type() {
    Type t = atom_type();
    while (lx_.peek().kind == Tok::Ident && lx_.peek().text == "list") {
      lx_.take();
      t = Type::list(t);
    }
    return t;
  }

  Type atom_type() {
    Token t = lx_.peek();
    switch (t.kind) {
      case Tok::TyVar: lx_.take(); return Type::var(t.text);
      case Tok::Ident:
        if (t.text == "bool") { lx_.take(); return Type::boolean(); }
        if (t.text == "int") { lx_.take(); return Type::integer(); }
        lx_.fail("unknown type name '" + t.text + "'");
      case Tok::LParen: {
        lx_.take();
        Type inner = type();
        expect(Tok::RParen, "')'");
        return inner;
      }
      default: lx_.fail("expected a type");
    }
  }

  void expect(Tok k, const char* what) {
    if (lx_.peek().kind != k) lx_.fail(std::string("expected ") + what);
    lx_.take();
  }

  Lexer& lx_;
};

// -- Terms -------------------------------------------------------------------

class ExprParser {
 public:
  ExprParser(Lexer& lx, const ConstTable& table) : lx_(lx), table_(table) {}

  Expr term() {
    Token t = lx_.peek();
    switch (t.kind) {
      case Tok::Lambda: {
        lx_.take();
        std::string binder = ident("binder");
        expect(Tok::Dot, "'.'");
        push(binder);
        Expr body = term();
        pop(binder);
        return Expr::lam(binder, body, loc(t));
      }
      case Tok::KwLet: {
        lx_.take();
        std::string binder = ident("binder");
        expect(Tok::Equals, "'='");
        Expr bound = term();
        expect(Tok::KwIn, "'in'");
        push(binder);
        Expr body = term();
        pop(binder);
        return Expr::let(binder, bound, body, loc(t));
      }
      case Tok::KwIf: {
        // if e1 then e2 else e3 = ifc e1 e2 e3
        lx_.take();
        Expr c = term();
        expect(Tok::KwThen, "'then'");
        Expr yes = term();
        expect(Tok::KwElse, "'else'");
        Expr no = term();
        SourceLoc l = loc(t);
        return Expr::app(Expr::app(Expr::app(Expr::constant("ifc", l), c, l), yes, l), no, l);
      }
      default: return application();
    }
  }

 private:
  Expr application() {
    Expr e = atom();
    while (starts_atom(lx_.peek().kind)) {
      Token t = lx_.peek();
      Expr arg = atom();
      e = Expr::app(e, arg, loc(t));
    }
    return e;
  }

  static bool starts_atom(Tok k) {
    return k == Tok::Ident || k == Tok::IntLit || k == Tok::LParen || k == Tok::LBracket ||
           k == Tok::KwRec;
  }

  Expr atom() {
    Token t = lx_.peek();
    switch (t.kind) {
      case Tok::IntLit: lx_.take(); return Expr::constant(t.text, loc(t));
      case Tok::KwRec: {
        // rec{x = e} is brace-delimited, so it can head an application.
        lx_.take();
        expect(Tok::LBrace, "'{'");
        std::string binder = ident("binder");
        expect(Tok::Equals, "'='");
        push(binder);
        Expr body = term();
        pop(binder);
        expect(Tok::RBrace, "'}'");
        return Expr::rec(binder, body, loc(t));
      }
      case Tok::Ident: {
        lx_.take();
        if (!bound(t.text) && table_.known(t.text)) return Expr::constant(t.text, loc(t));
        return Expr::var(t.text, loc(t));
      }
      case Tok::LParen: {
        lx_.take();
        Expr inner = term();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::LBracket: return list_sugar(t);
      default: lx_.fail("expected a term");
    }
  }

  // [] = nil; [e1 . e2] = cons e1 e2; [e1, ..., en] = cons e1 (... (cons en nil)).
  Expr list_sugar(const Token& open) {
    lx_.take();
    SourceLoc l = loc(open);
    if (lx_.peek().kind == Tok::RBracket) {
      lx_.take();
      return Expr::constant("nil", l);
    }
    Expr first = term();
    if (lx_.peek().kind == Tok::Dot) {
      lx_.take();
      Expr rest = term();
      expect(Tok::RBracket, "']'");
      return cons(first, rest, l);
    }
    std::vector<Expr> items{first};
    while (lx_.peek().kind == Tok::Comma) {
      lx_.take();
      items.push_back(term());
    }
    expect(Tok::RBracket, "']'");
    Expr out = Expr::constant("nil", l);
    for (auto it = items.rbegin(); it != items.rend(); ++it) out = cons(*it, out, l);
    return out;
  }

  Expr cons(Expr head, Expr tail, SourceLoc l) {
    return Expr::app(Expr::app(Expr::constant("cons", l), std::move(head), l), std::move(tail), l);
  }

  std::string ident(const char* what) {
    if (lx_.peek().kind != Tok::Ident) lx_.fail(std::string("expected ") + what + " name");
    return lx_.take().text;
  }
  void expect(Tok k, const char* what) {
    if (lx_.peek().kind != k) lx_.fail(std::string("expected ") + what);
    lx_.take();
  }
  static SourceLoc loc(const Token& t) { return {t.line, t.col}; }

  void push(const std::string& x) { scope_.push_back(x); }
  void pop(const std::string& x) {
    (void)x;
    scope_.pop_back();
  }
  bool bound(const std::string& x) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (*it == x) return true;
    return false;
  }

  Lexer& lx_;
  const ConstTable& table_;
  std::vector<std::string> scope_;
};

inline void expect_end(Lexer& lx) {
  if (lx.peek().kind != Tok::End) lx.fail("trailing input");
}

}  // namespace detail

inline Expr parse_expr(std::string_view text, const ConstTable& table = ConstTable::builtins()) {
  detail::Lexer lx(text);
  detail::ExprParser p(lx, table);
  Expr e = p.term();
  detail::expect_end(lx);
  return e;
}

inline Type parse_type(std::string_view text) {
  detail::Lexer lx(text);
  detail::TypeParser p(lx);
  Type t = p.type();
  detail::expect_end(lx);
  return t;
}

inline TypeScheme parse_scheme(std::string_view text) {
  detail::Lexer lx(text);
  detail::TypeParser p(lx);
  TypeScheme s = p.scheme();
  detail::expect_end(lx);
  return s;
}

// Substitution blocks: { 'a := int, 'b := 'c list } (empty: {} or { }).
inline Subst parse_subst(std::string_view text) {
  detail::Lexer lx(text);
  if (lx.peek().kind != detail::Tok::LBrace) lx.fail("expected '{'");
  lx.take();
  Subst s;
  if (lx.peek().kind != detail::Tok::RBrace) {
    for (;;) {
      if (lx.peek().kind != detail::Tok::TyVar) lx.fail("expected type variable");
      std::string v = lx.take().text;
      if (lx.peek().kind != detail::Tok::Assign) lx.fail("expected ':='");
      lx.take();
      detail::TypeParser tp(lx);
      s.bind(v, tp.type());
      if (lx.peek().kind != detail::Tok::Comma) break;
      lx.take();
    }
  }
  if (lx.peek().kind != detail::Tok::RBrace) lx.fail("expected '}'");
  lx.take();
  detail::expect_end(lx);
  return s;
}

// Prelude files: one `name : type` per line; `--` comments. Built-ins are
// never overridable.
inline ConstTable parse_prelude(std::string_view text,
                                ConstTable base = ConstTable::builtins()) {
  detail::Lexer lx(text);
  while (lx.peek().kind != detail::Tok::End) {
    if (lx.peek().kind != detail::Tok::Ident) lx.fail("expected constant name");
    detail::Token name = lx.take();
    if (lx.peek().kind != detail::Tok::Colon) lx.fail("expected ':'");
    lx.take();
    detail::TypeParser tp(lx);
    Type ty = tp.type();
    if (!base.add(name.text, ty))
      throw ParseError("cannot override built-in constant '" + name.text + "'", name.line,
                       name.col);
  }
  return base;
}

}  // namespace br

#endif  // BR_PARSE_HPP
