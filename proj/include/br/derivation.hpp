#ifndef BR_DERIVATION_HPP
#define BR_DERIVATION_HPP

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "br/infer.hpp"
#include "br/parse.hpp"
#include "br/print.hpp"
#include "br/semiunify.hpp"
#include "br/subst.hpp"
#include "br/syntax.hpp"
#include "br/unify.hpp"

namespace br {

enum class System { Br, BrLet, Brni };

inline System system_of(Mode m) {
  switch (m) {
    case Mode::BrLet:
    case Mode::Mono: return System::BrLet;
    default: return System::Br;
  }
}

// Explicit proof tree. The rules existentially quantify their substitutions,
// so every rec/recni/con/var-p node stores them and the checker verifies
// instead of inferring.
struct Derivation {
  enum class Rule { Var, Con, ArrowI, ArrowE, Rec, RecNI, VarP, Let };

  Rule rule;
  TypeEnv env;
  Expr expr;
  Type goal;
  Subst s1, s2;                         // rec: s1,s2; recni: s1; con/var-p: s1 = instantiation
  std::vector<std::string> quantified;  // let
  std::vector<std::shared_ptr<const Derivation>> premises;

  Derivation(Rule r, TypeEnv env_, Expr expr_, Type goal_)
      : rule(r), env(std::move(env_)), expr(std::move(expr_)), goal(std::move(goal_)) {}
};

using DerivPtr = std::shared_ptr<const Derivation>;

inline const char* rule_name(Derivation::Rule r) {
  switch (r) {
    case Derivation::Rule::Var: return "var";
    case Derivation::Rule::Con: return "con";
    case Derivation::Rule::ArrowI: return "arrow-i";
    case Derivation::Rule::ArrowE: return "arrow-e";
    case Derivation::Rule::Rec: return "rec";
    case Derivation::Rule::RecNI: return "recni";
    case Derivation::Rule::VarP: return "var-p";
    case Derivation::Rule::Let: return "let";
  }
  return "?";
}

struct RuleViolation {
  std::vector<int> path;  // premise indices from the root
  std::string reason;
};

inline std::string path_string(const std::vector<int>& path) {
  if (path.empty()) return "root";
  std::string s;
  for (size_t i = 0; i < path.size(); ++i) {
    if (i) s += '.';
    s += std::to_string(path[i]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Checking

namespace detail {

// The side conditions read FTV(U) over the bindings the subject expression
// can actually see: bindings for variables not free in it cannot influence
// derivability (strengthening). Without this reading, closed terms typed
// under a vacuous binding -- which is how the pairing encoding of Section 5
// combines its two recursions -- would be rejected.
inline std::set<std::string> env_ftv_visible(const TypeEnv& env, const Expr& subject) {
  auto fv = free_vars(subject);
  std::set<std::string> out;
  for (const auto& [x, sch] : env.bindings()) {
    if (!fv.count(x)) continue;
    auto f = sch.free_vars();
    out.insert(f.begin(), f.end());
  }
  return out;
}

struct Checker {
  System system;
  const ConstTable& table;
  std::optional<RuleViolation> violation;

  bool fail(const std::vector<int>& path, std::string reason) {
    if (!violation) violation = RuleViolation{path, std::move(reason)};
    return false;
  }

  bool check(const Derivation& d, std::vector<int>& path) {
    if (system != System::BrLet && !d.env.all_mono())
      return fail(path, "polymorphic environment entry outside BR+let");
    switch (d.rule) {
      case Derivation::Rule::Var: {
        if (!d.premises.empty()) return fail(path, "var expects no premises");
        if (d.expr.kind() != Expr::Kind::Var) return fail(path, "var subject must be a variable");
        const TypeScheme* sch = d.env.lookup(d.expr.name());
        if (!sch) return fail(path, "variable '" + d.expr.name() + "' not bound");
        if (!sch->is_mono()) return fail(path, "var used at a polymorphic binding");
        if (sch->body != d.goal) return fail(path, "var type differs from its binding");
        return true;
      }
      case Derivation::Rule::Con: {
        if (!d.premises.empty()) return fail(path, "con expects no premises");
        if (d.expr.kind() != Expr::Kind::Const) return fail(path, "con subject must be a constant");
        auto ty = table.lookup(d.expr.name());
        if (!ty) return fail(path, "unknown constant '" + d.expr.name() + "'");
        if (d.s1(*ty) != d.goal)
          return fail(path, "constant type instance mismatch: expected " + print_type(d.s1(*ty)));
        return true;
      }
      case Derivation::Rule::VarP: {
        if (system != System::BrLet) return fail(path, "var-p outside BR+let");
        if (!d.premises.empty()) return fail(path, "var-p expects no premises");
        if (d.expr.kind() != Expr::Kind::Var) return fail(path, "var-p subject must be a variable");
        const TypeScheme* sch = d.env.lookup(d.expr.name());
        if (!sch) return fail(path, "variable '" + d.expr.name() + "' not bound");
        std::set<std::string> qs(sch->quantified.begin(), sch->quantified.end());
        for (const auto& v : d.s1.domain())
          if (!qs.count(v))
            return fail(path, "var-p instantiation moves '" + v + "' outside the quantifier list");
        if (d.s1(sch->body) != d.goal) return fail(path, "var-p instance mismatch");
        return true;
      }
      case Derivation::Rule::ArrowI: {
        if (d.premises.size() != 1) return fail(path, "arrow-i expects one premise");
        if (d.expr.kind() != Expr::Kind::Lam) return fail(path, "arrow-i subject must be a lambda");
        if (d.goal.kind() != Type::Kind::Arrow) return fail(path, "arrow-i goal must be an arrow");
        const Derivation& p = *d.premises[0];
        if (p.expr != d.expr.body()) return fail(path, "premise subject is not the lambda body");
        if (!(p.env == d.env.with(d.expr.name(), TypeScheme(d.goal.left()))))
          return fail(path, "premise environment must bind the binder at the domain type");
        if (p.goal != d.goal.right()) return fail(path, "premise goal must be the codomain");
        return check_child(p, path, 0);
      }
      case Derivation::Rule::ArrowE: {
        if (d.premises.size() != 2) return fail(path, "arrow-e expects two premises");
        if (d.expr.kind() != Expr::Kind::App)
          return fail(path, "arrow-e subject must be an application");
        const Derivation& f = *d.premises[0];
        const Derivation& a = *d.premises[1];
        if (f.expr != d.expr.fn() || a.expr != d.expr.arg())
          return fail(path, "premise subjects must be the function and argument");
        if (!(f.env == d.env) || !(a.env == d.env))
          return fail(path, "premise environments must equal the conclusion environment");
        if (f.goal != Type::arrow(a.goal, d.goal))
          return fail(path, "function premise type must be argument -> conclusion");
        return check_child(f, path, 0) && check_child(a, path, 1);
      }
      case Derivation::Rule::Rec:
      case Derivation::Rule::RecNI: {
        bool ni = d.rule == Derivation::Rule::RecNI;
        if (ni && system != System::Brni) return fail(path, "recni outside BRNI");
        if (!ni && system == System::Brni) return fail(path, "rec is not a BRNI rule");
        if (d.premises.size() != 1) return fail(path, "rec expects one premise");
        if (d.expr.kind() != Expr::Kind::Rec) return fail(path, "rec subject must be a rec term");
        const Derivation& p = *d.premises[0];
        if (p.expr != d.expr.body()) return fail(path, "premise subject is not the rec body");
        const Type& u = p.goal;
        if (!(p.env == d.env.with(d.expr.name(), TypeScheme(d.s1(u)))))
          return fail(path, "premise must bind the recursion variable at s1(premise goal)");
        Type concl = ni ? u : d.s2(u);
        if (d.goal != concl)
          return fail(path, ni ? "recni conclusion type must equal the premise goal"
                               : "rec conclusion type must be s2(premise goal)");
        auto local = free_type_vars(u);
        for (const auto& v : env_ftv_visible(d.env, d.expr)) local.erase(v);
        for (const auto& v : d.s1.domain())
          if (!local.count(v))
            return fail(path, "Dom(s1) leaves FTV(premise goal) - FTV(environment): '" + v + "'");
        if (!ni)
          for (const auto& v : d.s2.domain())
            if (!local.count(v))
              return fail(path,
                          "Dom(s2) leaves FTV(premise goal) - FTV(environment): '" + v + "'");
        return check_child(p, path, 0);
      }
      case Derivation::Rule::Let: {
        if (system != System::BrLet) return fail(path, "let outside BR+let");
        if (d.premises.size() != 2) return fail(path, "let expects two premises");
        if (d.expr.kind() != Expr::Kind::Let) return fail(path, "let subject must be a let term");
        const Derivation& p1 = *d.premises[0];
        const Derivation& p2 = *d.premises[1];
        if (p1.expr != d.expr.bound() || p2.expr != d.expr.let_body())
          return fail(path, "premise subjects must be the bound term and the body");
        if (!(p1.env == d.env)) return fail(path, "bound-term environment mismatch");
        if (p2.goal != d.goal) return fail(path, "body goal must equal the conclusion type");
        std::set<std::string> distinct(d.quantified.begin(), d.quantified.end());
        if (distinct.size() != d.quantified.size())
          return fail(path, "quantified names must be pairwise distinct");
        TypeScheme gen = d.quantified.empty() ? TypeScheme(p1.goal)
                                              : TypeScheme(d.quantified, p1.goal);
        if (!(p2.env == d.env.with(d.expr.name(), gen)))
          return fail(path, "body environment must bind the generalized bound type");
        auto vgen = free_type_vars(p1.goal);
        auto visible = env_ftv_visible(d.env, d.expr);
        for (const auto& q : d.quantified) {
          if (!vgen.count(q))
            return fail(path, "generalized variable '" + q + "' not free in the bound type");
          if (visible.count(q))
            return fail(path, "generalized variable '" + q + "' is free in the environment");
        }
        return check_child(p1, path, 0) && check_child(p2, path, 1);
      }
    }
    return fail(path, "unknown rule");
  }

  bool check_child(const Derivation& d, std::vector<int>& path, int idx) {
    path.push_back(idx);
    bool ok = check(d, path);
    path.pop_back();
    return ok;
  }
};

}  // namespace detail

inline std::optional<RuleViolation> check_derivation(
    const Derivation& d, System system, const ConstTable& table = ConstTable::builtins()) {
  detail::Checker c{system, table, std::nullopt};
  std::vector<int> path;
  c.check(d, path);
  return c.violation;
}

// ---------------------------------------------------------------------------
// Instantiation (the executable form of the substitution property). Fails
// for BRNI derivations, which do not have that property.

namespace detail {

struct SubstDeriv {
  FreshSupply& fresh;
  const ConstTable& table;

  DerivPtr go(const Derivation& d, const Subst& s) {
    switch (d.rule) {
      case Derivation::Rule::Var: {
        auto n = std::make_shared<Derivation>(d.rule, apply_env(s, d.env, fresh), d.expr,
                                              s(d.goal));
        return n;
      }
      case Derivation::Rule::Con: {
        auto n = std::make_shared<Derivation>(d.rule, apply_env(s, d.env, fresh), d.expr,
                                              s(d.goal));
        auto ty = table.lookup(d.expr.name());
        n->s1 = ty ? restrict_to(compose(s, d.s1), free_type_vars(*ty)) : compose(s, d.s1);
        return n;
      }
      case Derivation::Rule::VarP: {
        TypeEnv env2;
        TypeScheme mapped = TypeScheme(Type::integer());
        std::map<std::string, std::string> qmap;
        for (const auto& [x, sch] : d.env.bindings()) {
          if (x == d.expr.name()) {
            mapped = apply_scheme_mapped(s, sch, fresh, &qmap);
            env2 = env2.with(x, mapped);
          } else {
            env2 = env2.with(x, apply_scheme(s, sch, fresh));
          }
        }
        auto n = std::make_shared<Derivation>(d.rule, env2, d.expr, s(d.goal));
        Subst inst;
        for (const auto& [q, q2] : qmap) inst.bind(q2, s(d.s1.lookup(q)));
        n->s1 = inst;
        return n;
      }
      case Derivation::Rule::ArrowI:
      case Derivation::Rule::ArrowE: {
        auto n = std::make_shared<Derivation>(d.rule, apply_env(s, d.env, fresh), d.expr,
                                              s(d.goal));
        for (const auto& p : d.premises) n->premises.push_back(go(*p, s));
        return n;
      }
      case Derivation::Rule::Rec: {
        const Derivation& p = *d.premises[0];
        const Type& u = p.goal;
        // Rename the rule-local variables fresh when the substitution could
        // move or capture them, mirroring the proof's "we can assume they do
        // not occur elsewhere".
        auto locals = free_type_vars(u);
        for (const auto& v : free_type_vars(d.env)) locals.erase(v);
        std::vector<std::string> alpha;
        for (const auto& v : u.vars_in_order())
          if (locals.count(v)) alpha.push_back(v);

        std::set<std::string> danger = s.domain();
        {
          // capture can only come through the substitution's action on the
          // variables visible from inside the premise
          std::set<std::string> relevant = free_type_vars(d.env);
          for (const auto& v : free_type_vars(u))
            if (!locals.count(v)) relevant.insert(v);
          for (const auto& r : relevant) s.lookup(r).collect_vars(danger);
        }
        bool clash = false;
        for (const auto& a : alpha)
          if (danger.count(a)) { clash = true; break; }

        Subst ren;
        std::vector<std::string> beta;
        for (const auto& a : alpha) {
          std::string b = clash ? fresh.next() : a;
          beta.push_back(b);
          if (clash) ren.bind(a, Type::var(b));
        }
        Subst s_local = clash ? compose(s, ren) : s;
        auto n = std::make_shared<Derivation>(d.rule, apply_env(s, d.env, fresh), d.expr,
                                              s(d.goal));
        n->premises.push_back(go(p, s_local));
        Subst s1n, s2n;
        for (size_t i = 0; i < alpha.size(); ++i) {
          s1n.bind(beta[i], s_local(d.s1.lookup(alpha[i])));
          s2n.bind(beta[i], s(d.s2.lookup(alpha[i])));
        }
        n->s1 = s1n;
        n->s2 = s2n;
        return n;
      }
      case Derivation::Rule::Let: {
        const Derivation& p1 = *d.premises[0];
        const Derivation& p2 = *d.premises[1];
        std::set<std::string> danger = s.domain();
        {
          std::set<std::string> relevant = free_type_vars(d.env);
          std::set<std::string> qs(d.quantified.begin(), d.quantified.end());
          for (const auto& v : free_type_vars(p1.goal))
            if (!qs.count(v)) relevant.insert(v);
          for (const auto& r : relevant) s.lookup(r).collect_vars(danger);
        }
        bool clash = false;
        for (const auto& q : d.quantified)
          if (danger.count(q)) { clash = true; break; }
        Subst ren;
        std::vector<std::string> q2;
        for (const auto& q : d.quantified) {
          std::string b = clash ? fresh.next() : q;
          q2.push_back(b);
          if (clash) ren.bind(q, Type::var(b));
        }
        Subst s_local = clash ? compose(s, ren) : s;
        auto n = std::make_shared<Derivation>(d.rule, apply_env(s, d.env, fresh), d.expr,
                                              s(d.goal));
        n->quantified = q2;
        n->premises.push_back(go(p1, s_local));
        n->premises.push_back(go(p2, s));
        return n;
      }
      case Derivation::Rule::RecNI:
        throw std::runtime_error("BRNI derivations do not support instantiation");
    }
    throw std::runtime_error("unreachable derivation rule");
  }
};

}  // namespace detail

inline void collect_type_vars(const Derivation& d, std::set<std::string>& out) {
  for (const auto& [x, sch] : d.env.bindings()) {
    sch.body.collect_vars(out);
    out.insert(sch.quantified.begin(), sch.quantified.end());
  }
  d.goal.collect_vars(out);
  for (const auto& [v, t] : d.s1.mapping()) {
    out.insert(v);
    t.collect_vars(out);
  }
  for (const auto& [v, t] : d.s2.mapping()) {
    out.insert(v);
    t.collect_vars(out);
  }
  out.insert(d.quantified.begin(), d.quantified.end());
  for (const auto& p : d.premises) collect_type_vars(*p, out);
}

inline std::variant<DerivPtr, std::string> subst_derivation(
    const Derivation& d, const Subst& s, const ConstTable& table = ConstTable::builtins()) {
  std::set<std::string> avoid = s.domain();
  auto rv = s.range_vars();
  avoid.insert(rv.begin(), rv.end());
  collect_type_vars(d, avoid);
  FreshSupply fresh("s", std::move(avoid));
  detail::SubstDeriv sd{fresh, table};
  try {
    return sd.go(d, s);
  } catch (const std::runtime_error& e) {
    return std::string(e.what());
  }
}

// ---------------------------------------------------------------------------
// Reconstruction: replay the inference trace with a unifier of the residual
// (the constructive content of the soundness theorem).

struct DeriveError {
  std::string message;
};

namespace detail {

struct DerivBuilder {
  FreshSupply& fresh;
  const ConstTable& table;

  DerivPtr build(const ETrace& t, const Subst& sigma) {
    switch (t.c) {
      case ETrace::Case::Var: {
        auto n = std::make_shared<Derivation>(Derivation::Rule::Var,
                                              apply_env(sigma, t.env, fresh), t.expr,
                                              sigma(t.goal));
        return n;
      }
      case ETrace::Case::Con: {
        auto n = std::make_shared<Derivation>(Derivation::Rule::Con,
                                              apply_env(sigma, t.env, fresh), t.expr,
                                              sigma(t.goal));
        n->s1 = restrict_to(compose(sigma, t.inst_renaming), free_type_vars(t.table_type));
        return n;
      }
      case ETrace::Case::VarP: {
        TypeEnv env2;
        std::map<std::string, std::string> qmap;
        for (const auto& [x, sch] : t.env.bindings()) {
          if (x == t.expr.name())
            env2 = env2.with(x, apply_scheme_mapped(sigma, sch, fresh, &qmap));
          else
            env2 = env2.with(x, apply_scheme(sigma, sch, fresh));
        }
        auto n = std::make_shared<Derivation>(Derivation::Rule::VarP, env2, t.expr,
                                              sigma(t.goal));
        Subst inst;
        for (const auto& [q, q2] : qmap) inst.bind(q2, sigma(t.inst_renaming.lookup(q)));
        n->s1 = inst;
        return n;
      }
      case ETrace::Case::Lam: {
        DerivPtr kid = build(*t.kids[0], sigma);
        Subst theta = compose(sigma, t.partial);
        auto n = std::make_shared<Derivation>(Derivation::Rule::ArrowI,
                                              apply_env(theta, t.env, fresh), t.expr,
                                              Type::arrow(theta(t.alpha), theta(t.beta)));
        n->premises = {kid};
        return n;
      }
      case ETrace::Case::App: {
        DerivPtr fn = build(*t.kids[0], compose(sigma, t.kids[1]->partial));
        DerivPtr arg = build(*t.kids[1], sigma);
        Subst theta = compose(sigma, t.partial);
        auto n = std::make_shared<Derivation>(Derivation::Rule::ArrowE,
                                              apply_env(theta, t.env, fresh), t.expr,
                                              theta(t.goal));
        n->premises = {fn, arg};
        return n;
      }
      case ETrace::Case::Rec: {
        // Build the premise at the semiunifier instance, close with (rec)
        // whose s1 is the matching witness, then instantiate by sigma.
        DerivPtr kid = build(*t.kids[0], t.solve);
        Subst s21 = compose(t.solve, t.kids[0]->partial);
        std::optional<Type> uvec = rec_env_product(t.env);
        Type lhs = uvec ? Type::prod(t.alpha, *uvec) : t.alpha;
        Type rhs = uvec ? Type::prod(t.beta, *uvec) : t.beta;
        auto witness = match_types(s21(lhs), s21(rhs));
        if (!witness) throw std::runtime_error("rec witness vanished during reconstruction");
        auto pre = std::make_shared<Derivation>(Derivation::Rule::Rec,
                                                apply_env(s21, t.env, fresh), t.expr,
                                                s21(t.alpha));
        pre->premises = {kid};
        pre->s1 = *witness;
        auto inst = subst_derivation(*pre, sigma, table);
        if (auto* err = std::get_if<std::string>(&inst)) throw std::runtime_error(*err);
        return std::get<DerivPtr>(inst);
      }
      case ETrace::Case::Let: {
        const ETrace& bound = *t.kids[0];
        const ETrace& body = *t.kids[1];
        DerivPtr p1 = build(bound, compose(sigma, compose(body.partial, t.solve)));
        DerivPtr p2 = build(body, sigma);
        Subst theta = compose(sigma, t.partial);
        auto n = std::make_shared<Derivation>(Derivation::Rule::Let,
                                              apply_env(theta, t.env, fresh), t.expr,
                                              theta(t.goal));
        n->quantified = t.let_gen;
        n->premises = {p1, p2};
        return n;
      }
      case ETrace::Case::Sentinel:
        throw std::runtime_error("failure sentinel reached during reconstruction");
    }
    throw std::runtime_error("unreachable trace case");
  }
};

}  // namespace detail

inline std::variant<DerivPtr, DeriveError> derive(const TypingProblem& p, const Subst& solution,
                                                  Mode mode,
                                                  const ConstTable& table = ConstTable::builtins()) {
  FreshSupply fresh = make_session_supply(p, table);
  {
    auto sd = solution.domain();
    auto sr = solution.range_vars();
    fresh.avoid(sd);
    fresh.avoid(sr);
  }
  auto traced = infer_traced(p, fresh, mode, table);
  if (auto* f = std::get_if<InferFailure>(&traced))
    return DeriveError{std::string("not a solution: inference failed (") + to_string(f->kind) +
                       ")"};
  const TracedInfer& ti = std::get<TracedInfer>(traced);
  auto solved = unify(ti.result.residual);
  if (std::holds_alternative<UnifyFailure>(solved))
    return DeriveError{"not a solution: residual constraints are unsolvable"};
  Subst m = std::get<Subst>(solved);
  Subst ms0 = compose(m, ti.result.partial);
  std::vector<std::pair<Type, Type>> pairs;
  for (const auto& v : p.free_type_vars())
    pairs.emplace_back(ms0(Type::var(v)), solution(Type::var(v)));
  auto r = match_all(pairs);
  if (!r) return DeriveError{"not a solution of this typing problem"};
  Subst sigma = compose(*r, m);
  detail::DerivBuilder builder{fresh, table};
  try {
    return builder.build(*ti.root, sigma);
  } catch (const std::runtime_error& e) {
    return DeriveError{e.what()};
  }
}

// ---------------------------------------------------------------------------
// Serialization: nested records with explicit rule names and substitution
// blocks, e.g.
//   (rec (s1 { 'a := 'b list }) (s2 {})
//     (env (f : 'a)) (expr rec{f = f}) (type 'a)
//     (premise (var ...)))

inline void print_derivation_into(const Derivation& d, int indent, std::string& out) {
  std::string pad(2 * static_cast<size_t>(indent), ' ');
  out += pad;
  out += '(';
  out += rule_name(d.rule);
  switch (d.rule) {
    case Derivation::Rule::Con:
    case Derivation::Rule::VarP:
      out += " (inst " + print_subst(d.s1) + ")";
      break;
    case Derivation::Rule::Rec:
      out += " (s1 " + print_subst(d.s1) + ") (s2 " + print_subst(d.s2) + ")";
      break;
    case Derivation::Rule::RecNI:
      out += " (s1 " + print_subst(d.s1) + ")";
      break;
    case Derivation::Rule::Let: {
      out += " (gen";
      for (const auto& q : d.quantified) out += " '" + q;
      out += ")";
      break;
    }
    default: break;
  }
  out += "\n" + pad + "  (env";
  for (const auto& [x, sch] : d.env.bindings()) out += " (" + x + " : " + print_type(sch) + ")";
  out += ")\n";
  out += pad + "  (expr " + print_expr(d.expr) + ")\n";
  out += pad + "  (type " + print_type(d.goal) + ")";
  for (const auto& p : d.premises) {
    out += "\n" + pad + "  (premise\n";
    print_derivation_into(*p, indent + 2, out);
    out += ")";
  }
  out += ")";
}

inline std::string print_derivation(const Derivation& d) {
  std::string out;
  print_derivation_into(d, 0, out);
  out += "\n";
  return out;
}

namespace detail {

class DerivParser {
 public:
  DerivParser(Lexer& lx, const ConstTable& table) : lx_(lx), table_(table) {}

  DerivPtr node() {
    expect(Tok::LParen, "'('");
    // "rec" and "let" are term keywords, so rule names arrive as such
    if (lx_.peek().kind != Tok::Ident && lx_.peek().kind != Tok::KwRec &&
        lx_.peek().kind != Tok::KwLet)
      lx_.fail("expected rule name");
    std::string rn = lx_.take().text;
    Derivation::Rule rule = Derivation::Rule::Var;
    if (rn == "var") rule = Derivation::Rule::Var;
    else if (rn == "con") rule = Derivation::Rule::Con;
    else if (rn == "arrow-i") rule = Derivation::Rule::ArrowI;
    else if (rn == "arrow-e") rule = Derivation::Rule::ArrowE;
    else if (rn == "rec") rule = Derivation::Rule::Rec;
    else if (rn == "recni") rule = Derivation::Rule::RecNI;
    else if (rn == "var-p") rule = Derivation::Rule::VarP;
    else if (rn == "let") rule = Derivation::Rule::Let;
    else lx_.fail("unknown rule '" + rn + "'");

    bool have_env = false, have_expr = false, have_type = false;
    TypeEnv env;
    std::optional<Expr> expr;
    std::optional<Type> goal;
    Subst s1, s2;
    std::vector<std::string> quantified;
    std::vector<DerivPtr> premises;

    while (lx_.peek().kind == Tok::LParen) {
      lx_.take();
      if (lx_.peek().kind != Tok::Ident) lx_.fail("expected field name");
      std::string field = lx_.take().text;
      if (field == "env") {
        have_env = true;
        while (lx_.peek().kind == Tok::LParen) {
          lx_.take();
          if (lx_.peek().kind != Tok::Ident) lx_.fail("expected binding name");
          std::string x = lx_.take().text;
          expect(Tok::Colon, "':'");
          TypeParser tp(lx_);
          env = env.with(x, tp.scheme());
          expect(Tok::RParen, "')'");
        }
      } else if (field == "expr") {
        have_expr = true;
        ExprParser ep(lx_, table_);
        expr = ep.term();
      } else if (field == "type") {
        have_type = true;
        TypeParser tp(lx_);
        goal = tp.type();
      } else if (field == "inst" || field == "s1") {
        s1 = subst_block();
      } else if (field == "s2") {
        s2 = subst_block();
      } else if (field == "gen") {
        while (lx_.peek().kind == Tok::TyVar) quantified.push_back(lx_.take().text);
      } else if (field == "premise") {
        premises.push_back(node());
      } else {
        lx_.fail("unknown field '" + field + "'");
      }
      expect(Tok::RParen, "')'");
    }
    expect(Tok::RParen, "')'");
    if (!have_env || !have_expr || !have_type) lx_.fail("node needs env, expr and type fields");
    auto n = std::make_shared<Derivation>(rule, env, *expr, *goal);
    n->s1 = s1;
    n->s2 = s2;
    n->quantified = quantified;
    n->premises = premises;
    return n;
  }

 private:
  Subst subst_block() {
    expect(Tok::LBrace, "'{'");
    Subst s;
    if (lx_.peek().kind != Tok::RBrace) {
      for (;;) {
        if (lx_.peek().kind != Tok::TyVar) lx_.fail("expected type variable");
        std::string v = lx_.take().text;
        expect(Tok::Assign, "':='");
        TypeParser tp(lx_);
        s.bind(v, tp.type());
        if (lx_.peek().kind != Tok::Comma) break;
        lx_.take();
      }
    }
    expect(Tok::RBrace, "'}'");
    return s;
  }

  void expect(Tok k, const char* what) {
    if (lx_.peek().kind != k) lx_.fail(std::string("expected ") + what);
    lx_.take();
  }

  Lexer& lx_;
  const ConstTable& table_;
};

}  // namespace detail

inline DerivPtr parse_derivation(std::string_view text,
                                 const ConstTable& table = ConstTable::builtins()) {
  detail::Lexer lx(text);
  detail::DerivParser p(lx, table);
  DerivPtr d = p.node();
  detail::expect_end(lx);
  return d;
}

}  // namespace br

#endif  // BR_DERIVATION_HPP
