#include <doctest.h>

#include "br/parse.hpp"
#include "br/subst.hpp"
#include "support/gen.hpp"

using namespace br;

TEST_CASE("apply is homomorphic") {
  Subst s = Subst::single("a", Type::integer());
  CHECK(s(parse_type("'a -> 'a")) == parse_type("int -> int"));
  CHECK(Subst()(parse_type("'a * bool")) == parse_type("'a * bool"));
  Subst s2 = Subst::single("a", parse_type("'b list"));
  CHECK(s2(parse_type("'a * 'a")) == parse_type("'b list * 'b list"));

  testing::Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    Type t = testing::gen_type(rng, {"a", "b", "c"}, 3);
    CHECK(Subst()(t) == t);
  }
}

TEST_CASE("compose") {
  Subst s = Subst::of({{"b", Type::integer()}});
  Subst r = Subst::of({{"a", Type::var("b")}});
  Subst sr = compose(s, r);
  CHECK(sr.lookup("a") == Type::integer());
  CHECK(sr.lookup("b") == Type::integer());

  testing::Rng rng(6);
  std::vector<std::string> vars{"a", "b", "c", "d"};
  for (int i = 0; i < 200; ++i) {
    Subst s1 = testing::gen_subst(rng, vars, vars, 2);
    Subst s2 = testing::gen_subst(rng, vars, vars, 2);
    Subst s3 = testing::gen_subst(rng, vars, vars, 2);
    Type t = testing::gen_type(rng, vars, 3);
    CHECK(compose(s1, s2)(t) == s1(s2(t)));
    CHECK(compose(s1, Subst()) == s1);
    CHECK(compose(Subst(), s1) == s1);
    CHECK(compose(compose(s1, s2), s3) == compose(s1, compose(s2, s3)));
  }
}

TEST_CASE("restrict_to") {
  Subst s = Subst::of({{"a", Type::integer()}, {"b", Type::boolean()}});
  CHECK(restrict_to(s, {"a"}) == Subst::single("a", Type::integer()));
  CHECK(restrict_to(s, {}).is_identity());
  CHECK(restrict_to(s, s.domain()) == s);
}

TEST_CASE("update") {
  CHECK(update(Subst(), "a", Type::integer()).lookup("a") == Type::integer());
  // identity bindings are dropped from the stored domain
  Subst s = update(Subst::single("a", Type::integer()), "a", Type::var("a"));
  CHECK(s.domain().empty());
  CHECK(update(Subst::single("a", Type::integer()), "a", Type::boolean()) ==
        Subst::single("a", Type::boolean()));
}

TEST_CASE("eq_on") {
  Subst s = Subst::single("a", Type::integer());
  CHECK(eq_on(s, s, {"a", "b"}));
  CHECK(eq_on(s, Subst(), {"b"}));
  CHECK(!eq_on(s, Subst::single("a", Type::boolean()), {"a"}));
}

TEST_CASE("scheme application: strict form rejects capture") {
  TypeScheme sch({"a"}, parse_type("'a -> 'b"));
  Subst ok = Subst::single("b", Type::integer());
  CHECK(ok.apply(sch).body == parse_type("'a -> int"));
  CHECK_THROWS_AS(Subst::single("a", Type::integer()).apply(sch), CaptureViolation);
  CHECK_THROWS_AS(Subst::single("b", parse_type("'a list")).apply(sch), CaptureViolation);
}

TEST_CASE("scheme application: hygienic form renames") {
  TypeScheme sch({"a"}, parse_type("'a -> 'b"));
  FreshSupply fresh("t");
  TypeScheme out = apply_scheme(Subst::single("b", parse_type("'a list")), sch, fresh);
  CHECK(out.quantified.size() == 1);
  CHECK(out.quantified[0] != "a");
  CHECK(scheme_alpha_equal(out, TypeScheme({"c"}, parse_type("'c -> 'a list list"))) == false);
  CHECK(scheme_alpha_equal(out, TypeScheme({"c"}, parse_type("'c -> 'a list"))));
}

TEST_CASE("print/parse substitution text") {
  Subst s = Subst::of({{"a", Type::integer()}, {"b", parse_type("'c list")}});
  CHECK(print_subst(s) == "{ 'a := int, 'b := 'c list }");
  CHECK(parse_subst(print_subst(s)) == s);
  CHECK(parse_subst("{}").is_identity());
}
