#ifndef BR_INFER_HPP
#define BR_INFER_HPP

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "br/fresh.hpp"
#include "br/semiunify.hpp"
#include "br/subst.hpp"
#include "br/syntax.hpp"
#include "br/unify.hpp"

namespace br {

// BR is the bimorphic-recursion calculus; BR+let adds the polymorphic let;
// mono is ML-style recursion (recursive calls share the definition's type,
// let stays polymorphic).
enum class Mode { Br, BrLet, Mono };

struct TypingProblem {
  TypeEnv env;
  Expr expr;
  Type goal;

  std::set<std::string> free_type_vars() const {
    auto out = env.free_vars();
    goal.collect_vars(out);
    return out;
  }
};

struct RecSolve {
  std::string binder;
  Type body_type;  // solved type of the definition body
  Type call_type;  // solved type assumed for the recursive calls
  Subst solved;    // the semiunifier (or unifier, in mono mode)
};

struct InferResult {
  UnifProblem residual;
  Subst partial;
  std::vector<RecSolve> trace;
};

struct InferFailure {
  enum class Kind {
    UnboundVariable,
    UnknownConstant,
    UnificationClash,
    Occurs,
    SemiUnificationFailed,
    BudgetExceeded,
    InvalidProblem,  // e.g. a let term or scheme binding fed to BR mode
  };
  Kind kind;
  std::string name;
  SourceLoc loc;
  std::string detail;
};

inline const char* to_string(InferFailure::Kind k) {
  switch (k) {
    case InferFailure::Kind::UnboundVariable: return "unbound-variable";
    case InferFailure::Kind::UnknownConstant: return "unknown-constant";
    case InferFailure::Kind::UnificationClash: return "unification-clash";
    case InferFailure::Kind::Occurs: return "occurs";
    case InferFailure::Kind::SemiUnificationFailed: return "semiunification-failed";
    case InferFailure::Kind::BudgetExceeded: return "budget-exceeded";
    case InferFailure::Kind::InvalidProblem: return "invalid-problem";
  }
  return "?";
}

struct InferOptions {
  // Report unsolvable cases through the literal residual {bool = int} and
  // keep going, rather than stopping with a structured reason.
  bool faithful_sentinel = false;
  int step_budget = kDefaultStepBudget;
};

// One node per recursive call of E; derive() replays these.
struct ETrace {
  enum class Case { Var, VarP, Con, Lam, App, Rec, Let, Sentinel };
  Case c = Case::Sentinel;

  // judgment of this call
  TypeEnv env;
  Expr expr;
  Type goal;

  ETrace(TypeEnv env_, Expr expr_, Type goal_)
      : env(std::move(env_)), expr(std::move(expr_)), goal(std::move(goal_)) {}

  // (E_i, s_i) returned by this call
  UnifProblem residual;
  Subst partial;

  Type alpha, beta;      // fresh variables, by case
  Subst inst_renaming;   // Con: table-variable renaming; VarP: quantifier renaming
  Type table_type;       // Con: the table entry
  Subst solve;           // Rec: semiunifier (mono: unifier); Let: mgu of the bound term
  std::vector<std::string> let_gen;
  std::vector<std::shared_ptr<const ETrace>> kids;
};

using ETracePtr = std::shared_ptr<const ETrace>;

namespace detail {

struct InferFailEx {
  InferFailure f;
};

// Product of the environment types, in binding order, for the rec rule's
// inequation. Scheme entries contribute their free variables (the part the
// rule must protect); a closed scheme contributes the inert ground type int.
// An empty environment has no product: the inequation degenerates to a <= b.
inline std::optional<Type> rec_env_product(const TypeEnv& env) {
  std::optional<Type> acc;
  for (auto it = env.bindings().rbegin(); it != env.bindings().rend(); ++it) {
    const TypeScheme& sch = it->second;
    Type t = Type::integer();
    if (sch.is_mono()) {
      t = sch.body;
    } else {
      auto fv = sch.free_vars();
      std::optional<Type> vt;
      for (auto v = fv.rbegin(); v != fv.rend(); ++v)
        vt = vt ? Type::prod(Type::var(*v), *vt) : Type::var(*v);
      if (vt) t = *vt;
    }
    acc = acc ? Type::prod(t, *acc) : t;
  }
  return acc;
}

struct InferSession {
  FreshSupply& fresh;
  Mode mode;
  const ConstTable& table;
  InferOptions opts;
  std::vector<RecSolve> rec_trace;

  [[noreturn]] void fail(InferFailure f) { throw InferFailEx{std::move(f)}; }

  ETracePtr sentinel(TypeEnv env, const Expr& e, const Type& goal) {
    auto t = std::make_shared<ETrace>(std::move(env), e, goal);
    t->c = ETrace::Case::Sentinel;
    t->residual = problem({{Type::boolean(), Type::integer()}});
    t->residual[0].loc = e.loc();
    return t;
  }

  Type fresh_instance(const Type& generic, Subst& renaming_out) {
    Subst ren;
    for (const auto& v : generic.vars_in_order()) ren.bind(v, fresh.fresh_type());
    renaming_out = ren;
    return ren(generic);
  }

  ETracePtr run(const TypeEnv& env, const Expr& e, const Type& goal) {
    auto t = std::make_shared<ETrace>(env, e, goal);
    switch (e.kind()) {
      case Expr::Kind::Var: {
        const TypeScheme* sch = env.lookup(e.name());
        if (!sch) {
          if (opts.faithful_sentinel) return sentinel(env, e, goal);
          fail({InferFailure::Kind::UnboundVariable, e.name(), e.loc(), "variable not in scope"});
        }
        if (!sch->is_mono() && mode == Mode::Br)
          fail({InferFailure::Kind::InvalidProblem, e.name(), e.loc(),
                "polymorphic binding in BR mode"});
        if (sch->is_mono()) {
          t->c = ETrace::Case::Var;
          t->residual = problem({{sch->body, goal}});
          t->residual[0].loc = e.loc();
          return t;
        }
        // (var-P): instantiate the scheme with fresh variables.
        t->c = ETrace::Case::VarP;
        Subst ren;
        for (const auto& q : sch->quantified) ren.bind(q, fresh.fresh_type());
        t->inst_renaming = ren;
        t->residual = problem({{ren(sch->body), goal}});
        t->residual[0].loc = e.loc();
        return t;
      }
      case Expr::Kind::Const: {
        auto ty = table.lookup(e.name());
        if (!ty) {
          if (opts.faithful_sentinel) return sentinel(env, e, goal);
          fail({InferFailure::Kind::UnknownConstant, e.name(), e.loc(), "constant not in table"});
        }
        t->c = ETrace::Case::Con;
        t->table_type = *ty;
        Type inst = fresh_instance(*ty, t->inst_renaming);
        t->residual = problem({{goal, inst}});
        t->residual[0].loc = e.loc();
        return t;
      }
      case Expr::Kind::Lam: {
        Type a = fresh.fresh_type(), b = fresh.fresh_type();
        t->c = ETrace::Case::Lam;
        t->alpha = a;
        t->beta = b;
        ETracePtr kid = run(env.with(e.name(), TypeScheme(a)), e.body(), b);
        const Subst& s1 = kid->partial;
        t->residual = kid->residual;
        t->residual.push_back({s1(Type::arrow(a, b)), s1(goal), e.loc()});
        t->partial = s1;
        t->kids = {kid};
        return t;
      }
      case Expr::Kind::App: {
        Type a = fresh.fresh_type();
        t->c = ETrace::Case::App;
        t->alpha = a;
        ETracePtr k1 = run(env, e.fn(), Type::arrow(a, goal));
        const Subst& s1 = k1->partial;
        ETracePtr k2 = run(apply_env(s1, env, fresh), e.arg(), s1(a));
        const Subst& s2 = k2->partial;
        t->residual = apply_subst(s2, k1->residual);
        for (const auto& eq : k2->residual) t->residual.push_back(eq);
        t->partial = compose(s2, s1);
        t->kids = {k1, k2};
        return t;
      }
      case Expr::Kind::Rec: {
        Type a = fresh.fresh_type(), b = fresh.fresh_type();
        t->alpha = a;
        t->beta = b;
        ETracePtr kid = run(env.with(e.name(), TypeScheme(b)), e.body(), a);
        const Subst& s1 = kid->partial;
        std::optional<Type> uvec = rec_env_product(env);
        Type lhs = uvec ? Type::prod(a, *uvec) : a;
        Type rhs = uvec ? Type::prod(b, *uvec) : b;

        Subst s2;
        if (mode == Mode::Mono) {
          UnifProblem eqs = kid->residual;
          eqs.push_back({s1(a), s1(b), e.loc()});
          auto solved = unify(eqs);
          if (auto* uf = std::get_if<UnifyFailure>(&solved)) {
            if (opts.faithful_sentinel) return sentinel(env, e, goal);
            fail({uf->kind == UnifyFailure::Kind::Occurs ? InferFailure::Kind::Occurs
                                                         : InferFailure::Kind::UnificationClash,
                  e.name(), uf->loc.known() ? uf->loc : e.loc(),
                  print_type(uf->lhs) + " vs " + print_type(uf->rhs)});
          }
          s2 = std::get<Subst>(solved);
        } else {
          SemiUnifProblem sp;
          sp.equations = kid->residual;
          sp.inequation = std::make_pair(s1(lhs), s1(rhs));
          auto solved = semi_unify(sp, fresh, opts.step_budget);
          if (auto* sf = std::get_if<SemiUnifFailure>(&solved)) {
            if (sf->kind == SemiUnifFailure::Kind::BudgetExceeded)
              fail({InferFailure::Kind::BudgetExceeded, e.name(), e.loc(), sf->detail});
            if (opts.faithful_sentinel) return sentinel(env, e, goal);
            fail({InferFailure::Kind::SemiUnificationFailed, e.name(), e.loc(), sf->detail});
          }
          s2 = std::get<Subst>(solved);
        }
        t->c = ETrace::Case::Rec;
        t->solve = s2;
        Subst s21 = compose(s2, s1);
        t->residual = problem({{s21(goal), s21(a)}});
        t->residual[0].loc = e.loc();
        t->partial = s21;
        t->kids = {kid};
        rec_trace.push_back({e.name(), s21(a), s21(b), s2});
        return t;
      }
      case Expr::Kind::Let: {
        if (mode == Mode::Br)
          fail({InferFailure::Kind::InvalidProblem, e.name(), e.loc(), "let term in BR mode"});
        Type a = fresh.fresh_type();
        t->alpha = a;
        ETracePtr k1 = run(env, e.bound(), a);
        const Subst& s1 = k1->partial;
        auto solved = unify(k1->residual);
        if (auto* uf = std::get_if<UnifyFailure>(&solved)) {
          if (opts.faithful_sentinel) return sentinel(env, e, goal);
          fail({uf->kind == UnifyFailure::Kind::Occurs ? InferFailure::Kind::Occurs
                                                       : InferFailure::Kind::UnificationClash,
                e.name(), uf->loc.known() ? uf->loc : e.loc(),
                print_type(uf->lhs) + " vs " + print_type(uf->rhs)});
        }
        Subst s2 = std::get<Subst>(solved);
        Subst s21 = compose(s2, s1);
        TypeEnv env2 = apply_env(s21, env, fresh);
        Type bound_ty = s21(a);
        auto env_ftv = env2.free_vars();
        std::vector<std::string> gen;
        for (const auto& v : bound_ty.vars_in_order())
          if (!env_ftv.count(v)) gen.push_back(v);
        TypeScheme sch = gen.empty() ? TypeScheme(bound_ty) : TypeScheme(gen, bound_ty);
        ETracePtr k2 = run(env2.with(e.name(), sch), e.let_body(), s21(goal));
        t->c = ETrace::Case::Let;
        t->solve = s2;
        t->let_gen = gen;
        t->residual = k2->residual;
        t->partial = compose(k2->partial, s21);
        t->kids = {k1, k2};
        return t;
      }
    }
    fail({InferFailure::Kind::InvalidProblem, "", e.loc(), "unreachable expression form"});
  }
};

}  // namespace detail

struct TracedInfer {
  ETracePtr root;
  InferResult result;
};

inline std::variant<TracedInfer, InferFailure> infer_traced(
    const TypingProblem& p, FreshSupply& fresh, Mode mode,
    const ConstTable& table = ConstTable::builtins(), const InferOptions& opts = {}) {
  if (mode == Mode::Br) {
    if (p.expr.contains_let())
      return InferFailure{InferFailure::Kind::InvalidProblem, "", p.expr.loc(),
                          "let term in BR mode"};
    if (!p.env.all_mono())
      return InferFailure{InferFailure::Kind::InvalidProblem, "", p.expr.loc(),
                          "polymorphic environment in BR mode"};
  }
  detail::InferSession sess{fresh, mode, table, opts, {}};
  try {
    ETracePtr root = sess.run(p.env, p.expr, p.goal);
    return TracedInfer{root, InferResult{root->residual, root->partial, sess.rec_trace}};
  } catch (const detail::InferFailEx& ex) {
    return ex.f;
  }
}

inline std::variant<InferResult, InferFailure> algo_E(
    const TypingProblem& p, FreshSupply& fresh, Mode mode,
    const ConstTable& table = ConstTable::builtins(), const InferOptions& opts = {}) {
  auto r = infer_traced(p, fresh, mode, table, opts);
  if (auto* f = std::get_if<InferFailure>(&r)) return *f;
  return std::get<TracedInfer>(r).result;
}

inline FreshSupply make_session_supply(const TypingProblem& p, const ConstTable& table,
                                       const std::string& prefix = "t") {
  std::set<std::string> avoid = table.all_type_vars();
  auto ftv = p.free_type_vars();
  avoid.insert(ftv.begin(), ftv.end());
  return FreshSupply(prefix, std::move(avoid));
}

// Theorem 1 driver: fresh goal a, E(⊢ e : a) = (E0, s0), then the principal
// type is mgu(E0) applied to s0(a), canonically renamed.
inline std::variant<Type, InferFailure> principal_type(
    const Expr& e, Mode mode, const ConstTable& table = ConstTable::builtins(),
    const InferOptions& opts = {}, const TypeEnv& env = {}) {
  TypingProblem p{env, e, Type::integer()};
  FreshSupply fresh = make_session_supply(p, table);
  p.goal = fresh.fresh_type();
  auto r = algo_E(p, fresh, mode, table, opts);
  if (auto* f = std::get_if<InferFailure>(&r)) return *f;
  const InferResult& res = std::get<InferResult>(r);
  auto solved = unify(res.residual);
  if (auto* uf = std::get_if<UnifyFailure>(&solved))
    return InferFailure{uf->kind == UnifyFailure::Kind::Occurs
                            ? InferFailure::Kind::Occurs
                            : InferFailure::Kind::UnificationClash,
                        "", uf->loc, print_type(uf->lhs) + " vs " + print_type(uf->rhs)};
  return canonical_rename(compose(std::get<Subst>(solved), res.partial)(p.goal));
}

// Most general solution of a typing problem, restricted to its variables.
inline std::variant<Subst, InferFailure> solve_typing_problem(
    const TypingProblem& p, Mode mode, const ConstTable& table = ConstTable::builtins(),
    const InferOptions& opts = {}) {
  FreshSupply fresh = make_session_supply(p, table);
  auto r = algo_E(p, fresh, mode, table, opts);
  if (auto* f = std::get_if<InferFailure>(&r)) return *f;
  const InferResult& res = std::get<InferResult>(r);
  auto solved = unify(res.residual);
  if (auto* uf = std::get_if<UnifyFailure>(&solved))
    return InferFailure{uf->kind == UnifyFailure::Kind::Occurs
                            ? InferFailure::Kind::Occurs
                            : InferFailure::Kind::UnificationClash,
                        "", uf->loc, print_type(uf->lhs) + " vs " + print_type(uf->rhs)};
  return restrict_to(compose(std::get<Subst>(solved), res.partial), p.free_type_vars());
}

// ---------------------------------------------------------------------------
// Diagnostic E' emitter: substitution-free, two inequations per rec node, so
// nested recursion can exceed the single-inequation fragment. Never solved.

namespace detail {

inline void emit_sup_rec(const TypeEnv& env, const Expr& e, const Type& goal, FreshSupply& fresh,
                         const ConstTable& table, EmittedSUP& out) {
  switch (e.kind()) {
    case Expr::Kind::Var: {
      const TypeScheme* sch = env.lookup(e.name());
      if (!sch || !sch->is_mono()) {
        out.equations.push_back({Type::boolean(), Type::integer(), e.loc()});
        return;
      }
      out.equations.push_back({sch->body, goal, e.loc()});
      return;
    }
    case Expr::Kind::Const: {
      auto ty = table.lookup(e.name());
      if (!ty) {
        out.equations.push_back({Type::boolean(), Type::integer(), e.loc()});
        return;
      }
      Subst ren;
      for (const auto& v : ty->vars_in_order()) ren.bind(v, fresh.fresh_type());
      out.equations.push_back({goal, ren(*ty), e.loc()});
      return;
    }
    case Expr::Kind::Lam: {
      Type a = fresh.fresh_type(), b = fresh.fresh_type();
      emit_sup_rec(env.with(e.name(), TypeScheme(a)), e.body(), b, fresh, table, out);
      out.equations.push_back({Type::arrow(a, b), goal, e.loc()});
      return;
    }
    case Expr::Kind::App: {
      Type a = fresh.fresh_type();
      emit_sup_rec(env, e.fn(), Type::arrow(a, goal), fresh, table, out);
      emit_sup_rec(env, e.arg(), a, fresh, table, out);
      return;
    }
    case Expr::Kind::Rec: {
      Type a = fresh.fresh_type(), b = fresh.fresh_type();
      emit_sup_rec(env.with(e.name(), TypeScheme(b)), e.body(), a, fresh, table, out);
      std::optional<Type> uvec;
      {
        std::optional<Type> acc;
        for (auto it = env.bindings().rbegin(); it != env.bindings().rend(); ++it)
          acc = acc ? Type::prod(it->second.body, *acc) : it->second.body;
        uvec = acc;
      }
      Type la = uvec ? Type::prod(a, *uvec) : a;
      Type lb = uvec ? Type::prod(b, *uvec) : b;
      Type lu = uvec ? Type::prod(goal, *uvec) : goal;
      out.inequations.emplace_back(la, lb);
      out.inequations.emplace_back(la, lu);
      return;
    }
    case Expr::Kind::Let:
      // E' is defined for BR terms only.
      out.equations.push_back({Type::boolean(), Type::integer(), e.loc()});
      return;
  }
}

}  // namespace detail

inline EmittedSUP emit_sup(const TypingProblem& p, FreshSupply& fresh,
                           const ConstTable& table = ConstTable::builtins()) {
  EmittedSUP out;
  detail::emit_sup_rec(p.env, p.expr, p.goal, fresh, table, out);
  return out;
}

inline EmittedSUP emit_sup(const TypingProblem& p, const ConstTable& table = ConstTable::builtins()) {
  FreshSupply fresh = make_session_supply(p, table);
  return emit_sup(p, fresh, table);
}

}  // namespace br

#endif  // BR_INFER_HPP
