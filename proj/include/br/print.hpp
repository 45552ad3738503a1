#ifndef BR_PRINT_HPP
#define BR_PRINT_HPP

#include <string>

#include "br/syntax.hpp"

namespace br {

// Type syntax: -> right-associative; postfix `list` binds tighter than `*`,
// which binds tighter than `->`; `*` right-associative.

namespace detail {

enum TypePrec { kArrowPrec = 0, kProdPrec = 1, kPostPrec = 2 };

inline void print_type_into(const Type& t, int prec, std::string& out) {
  switch (t.kind()) {
    case Type::Kind::Var:
      out += '\'';
      out += t.name();
      return;
    case Type::Kind::Bool: out += "bool"; return;
    case Type::Kind::Int: out += "int"; return;
    case Type::Kind::Arrow: {
      bool paren = prec > kArrowPrec;
      if (paren) out += '(';
      print_type_into(t.left(), kProdPrec, out);
      out += " -> ";
      print_type_into(t.right(), kArrowPrec, out);
      if (paren) out += ')';
      return;
    }
    case Type::Kind::Prod: {
      bool paren = prec > kProdPrec;
      if (paren) out += '(';
      print_type_into(t.left(), kPostPrec, out);
      out += " * ";
      print_type_into(t.right(), kProdPrec, out);
      if (paren) out += ')';
      return;
    }
    case Type::Kind::List: {
      print_type_into(t.left(), kPostPrec + 1, out);
      out += " list";
      return;
    }
  }
}

}  // namespace detail

inline std::string print_type(const Type& t) {
  std::string out;
  detail::print_type_into(t, 0, out);
  return out;
}

inline std::string print_type(const TypeScheme& s) {
  if (s.is_mono()) return print_type(s.body);
  std::string out = "forall";
  for (const auto& q : s.quantified) {
    out += " '";
    out += q;
  }
  out += ". ";
  out += print_type(s.body);
  return out;
}

inline std::string print_env(const TypeEnv& env) {
  std::string out;
  bool first = true;
  for (const auto& [x, s] : env.bindings()) {
    if (!first) out += ", ";
    first = false;
    out += x;
    out += " : ";
    out += print_type(s);
  }
  return out;
}

// Term syntax: application left-associative by juxtaposition; lambda and let
// bodies extend as far right as possible. Sugar is not reintroduced.

namespace detail {

enum ExprPrec { kTermPrec = 0, kAppPrec = 1, kAtomPrec = 2 };

inline void print_expr_into(const Expr& e, int prec, std::string& out) {
  switch (e.kind()) {
    case Expr::Kind::Var:
    case Expr::Kind::Const: out += e.name(); return;
    case Expr::Kind::Lam: {
      bool paren = prec > kTermPrec;
      if (paren) out += '(';
      out += '\\';
      out += e.name();
      out += ". ";
      print_expr_into(e.body(), kTermPrec, out);
      if (paren) out += ')';
      return;
    }
    case Expr::Kind::App: {
      bool paren = prec > kAppPrec;
      if (paren) out += '(';
      print_expr_into(e.fn(), kAppPrec, out);
      out += ' ';
      print_expr_into(e.arg(), kAtomPrec, out);
      if (paren) out += ')';
      return;
    }
    case Expr::Kind::Rec: {
      // brace-delimited: atom precedence
      out += "rec{";
      out += e.name();
      out += " = ";
      print_expr_into(e.body(), kTermPrec, out);
      out += '}';
      return;
    }
    case Expr::Kind::Let: {
      bool paren = prec > kTermPrec;
      if (paren) out += '(';
      out += "let ";
      out += e.name();
      out += " = ";
      // The bound term must not swallow the `in`.
      print_expr_into(e.bound(), kAppPrec, out);
      out += " in ";
      print_expr_into(e.let_body(), kTermPrec, out);
      if (paren) out += ')';
      return;
    }
  }
}

}  // namespace detail

inline std::string print_expr(const Expr& e) {
  std::string out;
  detail::print_expr_into(e, 0, out);
  return out;
}

}  // namespace br

#endif  // BR_PRINT_HPP
