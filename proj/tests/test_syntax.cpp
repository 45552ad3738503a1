#include <doctest.h>

#include "br/parse.hpp"
#include "br/print.hpp"
#include "br/syntax.hpp"
#include "support/gen.hpp"

using namespace br;

TEST_CASE("parse_expr: core forms") {
  Expr id = parse_expr("\\x. x");
  CHECK(id.kind() == Expr::Kind::Lam);
  CHECK(id.name() == "x");
  CHECK(id.body().kind() == Expr::Kind::Var);

  Expr r = parse_expr("rec{f = \\x. f x}");
  CHECK(r.kind() == Expr::Kind::Rec);
  CHECK(r.name() == "f");
  CHECK(r.body() == Expr::lam("x", Expr::app(Expr::var("f"), Expr::var("x"))));

  Expr l = parse_expr("let x = 0 in x");
  CHECK(l.kind() == Expr::Kind::Let);
  CHECK(l.bound() == Expr::constant("0"));
}

TEST_CASE("parse_expr: sugar expands per the abbreviation table") {
  // if e1 then e2 else e3 = ifc e1 e2 e3
  Expr e = parse_expr("\\z. \\w. if (null w) then z [] else z w");
  Expr body = e.body().body();
  CHECK(body.kind() == Expr::Kind::App);
  Expr head = body.fn().fn().fn();
  CHECK(head == Expr::constant("ifc"));

  // [a, b] = cons a (cons b nil)
  CHECK(parse_expr("[0, 1]") == parse_expr("cons 0 (cons 1 nil)"));
  CHECK(parse_expr("[0 . x]") == parse_expr("cons 0 x"));
  CHECK(parse_expr("[]") == Expr::constant("nil"));
  CHECK(parse_expr("[0]") == parse_expr("cons 0 nil"));
}

TEST_CASE("parse_expr: identifiers resolve against the constant table") {
  // Bound names shadow constants; unknown names are free variables.
  Expr e = parse_expr("\\cons. cons y");
  CHECK(e.body().fn().kind() == Expr::Kind::Var);
  CHECK(e.body().arg().kind() == Expr::Kind::Var);
  CHECK(parse_expr("cons").kind() == Expr::Kind::Const);
}

TEST_CASE("parse_expr: errors carry positions") {
  CHECK_THROWS_AS(parse_expr("\\x."), ParseError);
  CHECK_THROWS_AS(parse_expr("rec{f. x}"), ParseError);
  try {
    parse_expr("\\x.\n  )");
    CHECK(false);
  } catch (const ParseError& pe) {
    CHECK(pe.line == 2);
  }
}

TEST_CASE("parse_type: precedence") {
  CHECK(parse_type("'a -> 'a") == Type::arrow(Type::var("a"), Type::var("a")));
  Type t = parse_type("'b list -> ('b list -> 'b list) -> 'a");
  Type bl = Type::list(Type::var("b"));
  CHECK(t == Type::arrow(bl, Type::arrow(Type::arrow(bl, bl), Type::var("a"))));
  CHECK(parse_type("int * bool list") == Type::prod(Type::integer(), Type::list(Type::boolean())));
  CHECK(parse_type("'a * 'b -> 'c") ==
        Type::arrow(Type::prod(Type::var("a"), Type::var("b")), Type::var("c")));
  CHECK(parse_type("'a list list") == Type::list(Type::list(Type::var("a"))));
}

TEST_CASE("print_type round-trips") {
  CHECK(print_expr(Expr::lam("x", Expr::var("x"))) == "\\x. x");
  CHECK(print_type(Type::arrow(Type::list(Type::var("b")), Type::list(Type::var("b")))) ==
        "'b list -> 'b list");
  CHECK(print_type(Type::prod(Type::var("a"), Type::var("b"))) == "'a * 'b");

  testing::Rng rng(42);
  for (int i = 0; i < 300; ++i) {
    Type t = testing::gen_type(rng, {"a", "b", "c"}, 4);
    CHECK(parse_type(print_type(t)) == t);
  }
}

TEST_CASE("print_expr round-trips up to alpha") {
  testing::Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    Type target = testing::gen_type(rng, {}, 2);
    Expr e = testing::gen_closed_term(rng, target, 3);
    Expr back = parse_expr(print_expr(e));
    CHECK(alpha_equal(e, back));
  }
}

TEST_CASE("free_vars") {
  CHECK(free_vars(parse_expr("\\x. x")).empty());
  auto fv = free_vars(Expr::rec("f", Expr::app(Expr::var("f"), Expr::var("y"))));
  CHECK(fv == std::set<std::string>{"y"});
  // shadowing
  auto fv2 = free_vars(Expr::app(Expr::var("x"), Expr::lam("x", Expr::var("x"))));
  CHECK(fv2 == std::set<std::string>{"x"});
}

TEST_CASE("free_type_vars") {
  CHECK(free_type_vars(parse_type("'a -> 'a")) == std::set<std::string>{"a"});
  TypeScheme s({"a"}, parse_type("'a -> 'b"));
  CHECK(free_type_vars(s) == std::set<std::string>{"b"});
  TypeEnv env = TypeEnv::of({{"x", parse_type("'a")}, {"y", parse_type("'b list")}});
  CHECK(free_type_vars(env) == std::set<std::string>{"a", "b"});

  testing::Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    Type a = testing::gen_type(rng, {"a", "b"}, 3), b = testing::gen_type(rng, {"b", "c"}, 3);
    auto fa = free_type_vars(a), fb = free_type_vars(b);
    std::set<std::string> both = fa;
    both.insert(fb.begin(), fb.end());
    CHECK(free_type_vars(Type::arrow(a, b)) == both);
    CHECK(free_type_vars(Type::prod(a, b)) == both);
    CHECK(free_type_vars(Type::list(a)) == fa);
  }
}

TEST_CASE("const_type") {
  CHECK(*const_type("cons") == parse_type("'a -> 'a list -> 'a list"));
  CHECK(*const_type("0") == Type::integer());
  CHECK(*const_type("417") == Type::integer());
  CHECK(*const_type("ifc") == parse_type("bool -> 'a -> 'a -> 'a"));
  CHECK(!const_type("plus").has_value());
}

TEST_CASE("prelude extends but cannot override") {
  ConstTable t = parse_prelude("plus : int -> int -> int\n-- a comment\nneg : int -> int\n");
  CHECK(*t.lookup("plus") == parse_type("int -> int -> int"));
  CHECK(t.known("neg"));
  CHECK_THROWS_AS(parse_prelude("cons : int"), ParseError);
}

TEST_CASE("canonical_rename") {
  CHECK(canonical_rename(parse_type("'z -> 'z")) == parse_type("'a -> 'a"));
  CHECK(canonical_rename(parse_type("'q list -> 'p")) == parse_type("'a list -> 'b"));
  testing::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    Type t = testing::gen_type(rng, {"p", "q", "z"}, 3);
    CHECK(canonical_rename(canonical_rename(t)) == canonical_rename(t));
  }
}

TEST_CASE("parsers survive fuzzed input") {
  // every input either parses or raises ParseError with a position
  const char charset[] = "\\xy.f2()[]{}<=->:'ab, rec let in if then else forall *01\n-";
  testing::Rng rng(90210);
  int parsed = 0, rejected = 0;
  for (int i = 0; i < 3000; ++i) {
    std::string input;
    size_t len = rng.below(40);
    for (size_t k = 0; k < len; ++k) input += charset[rng.below(sizeof(charset) - 1)];
    for (int which = 0; which < 3; ++which) {
      try {
        switch (which) {
          case 0: (void)parse_expr(input); break;
          case 1: (void)parse_type(input); break;
          default: (void)parse_subst(input); break;
        }
        ++parsed;
      } catch (const ParseError&) {
        ++rejected;
      }
    }
  }
  CHECK(parsed + rejected == 9000);
  CHECK(parsed > 0);
  CHECK(rejected > 0);
}

TEST_CASE("scheme alpha equality") {
  TypeScheme a({"a"}, parse_type("'a -> 'b"));
  TypeScheme b({"c"}, parse_type("'c -> 'b"));
  TypeScheme c({"c"}, parse_type("'c -> 'd"));
  CHECK(scheme_alpha_equal(a, b));
  CHECK(!scheme_alpha_equal(a, c));
  CHECK(!scheme_alpha_equal(a, TypeScheme(parse_type("'a -> 'b"))));
}
