#ifndef BR_TESTS_GEN_HPP
#define BR_TESTS_GEN_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "br/subst.hpp"
#include "br/syntax.hpp"

namespace br::testing {

// Deterministic xorshift generator so every property run is reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0x9e3779b97f4a7c15ull) : s_(seed ? seed : 1) {}

  uint64_t next() {
    s_ ^= s_ << 13;
    s_ ^= s_ >> 7;
    s_ ^= s_ << 17;
    return s_;
  }
  size_t below(size_t n) { return n == 0 ? 0 : static_cast<size_t>(next() % n); }
  bool chance(int num, int den) { return below(static_cast<size_t>(den)) < static_cast<size_t>(num); }

 private:
  uint64_t s_;
};

inline Type gen_type(Rng& rng, const std::vector<std::string>& vars, int depth) {
  size_t atoms = 2 + vars.size();
  if (depth <= 0 || rng.chance(1, 3)) {
    size_t k = rng.below(atoms);
    if (k == 0) return Type::integer();
    if (k == 1) return Type::boolean();
    return Type::var(vars[k - 2]);
  }
  switch (rng.below(3)) {
    case 0: return Type::arrow(gen_type(rng, vars, depth - 1), gen_type(rng, vars, depth - 1));
    case 1: return Type::prod(gen_type(rng, vars, depth - 1), gen_type(rng, vars, depth - 1));
    default: return Type::list(gen_type(rng, vars, depth - 1));
  }
}

inline Subst gen_subst(Rng& rng, const std::vector<std::string>& domain,
                       const std::vector<std::string>& range_vars, int depth) {
  Subst s;
  for (const auto& v : domain)
    if (rng.chance(2, 3)) s.bind(v, gen_type(rng, range_vars, depth));
  return s;
}

// ---------------------------------------------------------------------------
// Well-typed term generation: builds a closed term of the requested (ground)
// type together with, optionally, typed free variables supplied through env.

struct TypedVar {
  std::string name;
  Type type;
};

inline Expr gen_term_of(Rng& rng, const Type& target, std::vector<TypedVar>& env, int fuel,
                        int* fresh);

inline Expr base_inhabitant(Rng& rng, const Type& target, std::vector<TypedVar>& env, int* fresh) {
  for (size_t i = 0; i < env.size(); ++i) {
    const auto& tv = env[env.size() - 1 - i];
    if (tv.type == target) return Expr::var(tv.name);
  }
  switch (target.kind()) {
    case Type::Kind::Int: return Expr::constant(std::to_string(*fresh % 3));
    case Type::Kind::Bool:
      return Expr::app(Expr::constant("null"), Expr::constant("nil"));
    case Type::Kind::List: return Expr::constant("nil");
    case Type::Kind::Arrow: {
      std::string x = "x" + std::to_string((*fresh)++);
      env.push_back({x, target.left()});
      Expr body = base_inhabitant(rng, target.right(), env, fresh);
      env.pop_back();
      return Expr::lam(x, body);
    }
    case Type::Kind::Prod: {
      Expr l = base_inhabitant(rng, target.left(), env, fresh);
      Expr r = base_inhabitant(rng, target.right(), env, fresh);
      return Expr::app(Expr::app(Expr::constant("pair"), l), r);
    }
    case Type::Kind::Var:
      // No closed inhabitant of a bare variable: fall back to diverging rec.
      return Expr::rec("loop", Expr::var("loop"));
  }
  return Expr::constant("0");
}

inline Expr gen_term_of(Rng& rng, const Type& target, std::vector<TypedVar>& env, int fuel,
                        int* fresh) {
  if (fuel <= 0) return base_inhabitant(rng, target, env, fresh);
  switch (rng.below(6)) {
    case 0: {  // lambda when the goal is an arrow
      if (target.kind() != Type::Kind::Arrow) break;
      std::string x = "x" + std::to_string((*fresh)++);
      env.push_back({x, target.left()});
      Expr body = gen_term_of(rng, target.right(), env, fuel - 1, fresh);
      env.pop_back();
      return Expr::lam(x, body);
    }
    case 1: {  // application at a generated argument type
      Type argty = gen_type(rng, {}, 1);
      Expr fn = gen_term_of(rng, Type::arrow(argty, target), env, fuel - 1, fresh);
      Expr arg = gen_term_of(rng, argty, env, fuel - 1, fresh);
      return Expr::app(fn, arg);
    }
    case 2: {  // if-then-else
      Expr c = gen_term_of(rng, Type::boolean(), env, fuel - 1, fresh);
      Expr a = gen_term_of(rng, target, env, fuel - 1, fresh);
      Expr b = gen_term_of(rng, target, env, fuel - 1, fresh);
      return Expr::app(Expr::app(Expr::app(Expr::constant("ifc"), c), a), b);
    }
    case 3: {  // monomorphic-style rec: binder used at the definition type
      std::string f = "r" + std::to_string((*fresh)++);
      env.push_back({f, target});
      Expr body = gen_term_of(rng, target, env, fuel - 1, fresh);
      env.pop_back();
      return Expr::rec(f, body);
    }
    case 4: {  // pair projection
      Type other = gen_type(rng, {}, 1);
      bool first = rng.chance(1, 2);
      Type p = first ? Type::prod(target, other) : Type::prod(other, target);
      Expr e = gen_term_of(rng, p, env, fuel - 1, fresh);
      return Expr::app(Expr::constant(first ? "fst" : "snd"), e);
    }
    default: break;
  }
  return base_inhabitant(rng, target, env, fresh);
}

inline Expr gen_closed_term(Rng& rng, const Type& target, int fuel) {
  std::vector<TypedVar> env;
  int fresh = 0;
  return gen_term_of(rng, target, env, fuel, &fresh);
}

// Renames every binder to a fresh name (for alpha-invariance tests).
inline Expr alpha_rename(const Expr& e, std::map<std::string, std::string>& scope, int* fresh) {
  switch (e.kind()) {
    case Expr::Kind::Const: return e;
    case Expr::Kind::Var: {
      auto it = scope.find(e.name());
      return it == scope.end() ? e : Expr::var(it->second);
    }
    case Expr::Kind::Lam:
    case Expr::Kind::Rec: {
      std::string nn = "v" + std::to_string((*fresh)++);
      auto old = scope.count(e.name()) ? std::optional<std::string>(scope[e.name()]) : std::nullopt;
      scope[e.name()] = nn;
      Expr body = alpha_rename(e.body(), scope, fresh);
      if (old) scope[e.name()] = *old; else scope.erase(e.name());
      return e.kind() == Expr::Kind::Lam ? Expr::lam(nn, body) : Expr::rec(nn, body);
    }
    case Expr::Kind::App:
      return Expr::app(alpha_rename(e.fn(), scope, fresh), alpha_rename(e.arg(), scope, fresh));
    case Expr::Kind::Let: {
      Expr bound = alpha_rename(e.bound(), scope, fresh);
      std::string nn = "v" + std::to_string((*fresh)++);
      auto old = scope.count(e.name()) ? std::optional<std::string>(scope[e.name()]) : std::nullopt;
      scope[e.name()] = nn;
      Expr body = alpha_rename(e.let_body(), scope, fresh);
      if (old) scope[e.name()] = *old; else scope.erase(e.name());
      return Expr::let(nn, bound, body);
    }
  }
  return e;
}

inline Expr alpha_rename(const Expr& e) {
  std::map<std::string, std::string> scope;
  int fresh = 0;
  return alpha_rename(e, scope, &fresh);
}

}  // namespace br::testing

#endif  // BR_TESTS_GEN_HPP
