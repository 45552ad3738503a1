#ifndef BR_BRNI_HPP
#define BR_BRNI_HPP

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "br/derivation.hpp"
#include "br/parse.hpp"
#include "br/semiunify.hpp"
#include "br/syntax.hpp"

namespace br {

// ---------------------------------------------------------------------------
// Semiunification terms M, N ::= a | M * M. They embed injectively into the
// mono types, so the solvers and matchers apply unchanged.

struct SUTerm {
  // index > 0: variable a<index>; 0: product with two children
  int index = 0;
  std::shared_ptr<const SUTerm> left, right;

  static SUTerm var(int i) {
    SUTerm t;
    t.index = i;
    return t;
  }
  static SUTerm prod(SUTerm l, SUTerm r) {
    SUTerm t;
    t.left = std::make_shared<const SUTerm>(std::move(l));
    t.right = std::make_shared<const SUTerm>(std::move(r));
    return t;
  }
  bool is_var() const { return index > 0; }

  void collect_indices(std::set<int>& out) const {
    if (is_var()) {
      out.insert(index);
    } else {
      left->collect_indices(out);
      right->collect_indices(out);
    }
  }
};

inline std::string su_var_name(int i) { return "a" + std::to_string(i); }
inline std::string tilde_var_name(int i) { return "z" + std::to_string(i); }

inline Type embed(const SUTerm& m) {
  if (m.is_var()) return Type::var(su_var_name(m.index));
  return Type::prod(embed(*m.left), embed(*m.right));
}

inline std::string print_su_term(const SUTerm& m, bool parens = false) {
  if (m.is_var()) return su_var_name(m.index);
  std::string s = print_su_term(*m.left, true) + " * " + print_su_term(*m.right, false);
  return parens ? "(" + s + ")" : s;
}

// The two-inequation shape of the undecidability reduction.
struct SUPInstance {
  SUTerm m1, n1, m2, n2;

  std::set<int> var_indices() const {
    std::set<int> out;
    m1.collect_indices(out);
    n1.collect_indices(out);
    m2.collect_indices(out);
    n2.collect_indices(out);
    return out;
  }
};

// s is a semiunifier when each inequation admits its own matching witness.
inline bool check_two_ineq_semiunifier(const SUPInstance& inst, const Subst& s) {
  return match_types(s(embed(inst.m1)), s(embed(inst.n1))).has_value() &&
         match_types(s(embed(inst.m2)), s(embed(inst.n2))).has_value();
}

// ---------------------------------------------------------------------------
// Capture-avoiding expression substitution e[x := e1].

namespace detail {

inline std::string unused_name(const std::string& base, const std::set<std::string>& taken) {
  if (!taken.count(base)) return base;
  for (int i = 0;; ++i) {
    std::string cand = base + std::to_string(i);
    if (!taken.count(cand)) return cand;
  }
}

}  // namespace detail

inline Expr expr_subst(const Expr& e, const std::string& x, const Expr& replacement) {
  switch (e.kind()) {
    case Expr::Kind::Const: return e;
    case Expr::Kind::Var: return e.name() == x ? replacement : e;
    case Expr::Kind::App:
      return Expr::app(expr_subst(e.fn(), x, replacement), expr_subst(e.arg(), x, replacement),
                       e.loc());
    case Expr::Kind::Lam:
    case Expr::Kind::Rec: {
      if (e.name() == x) return e;  // binder shadows x
      std::string binder = e.name();
      Expr body = e.body();
      auto fv = free_vars(replacement);
      if (fv.count(binder) && free_vars(body).count(x)) {
        // rename the binder away from the replacement's free variables
        std::set<std::string> taken = fv;
        auto bodyfv = free_vars(body);
        taken.insert(bodyfv.begin(), bodyfv.end());
        taken.insert(x);
        std::string fresh = detail::unused_name(binder, taken);
        body = expr_subst(body, binder, Expr::var(fresh));
        binder = fresh;
      }
      Expr nb = expr_subst(body, x, replacement);
      return e.kind() == Expr::Kind::Lam ? Expr::lam(binder, nb, e.loc())
                                         : Expr::rec(binder, nb, e.loc());
    }
    case Expr::Kind::Let: {
      Expr nbound = expr_subst(e.bound(), x, replacement);
      if (e.name() == x) return Expr::let(e.name(), nbound, e.let_body(), e.loc());
      std::string binder = e.name();
      Expr body = e.let_body();
      auto fv = free_vars(replacement);
      if (fv.count(binder) && free_vars(body).count(x)) {
        std::set<std::string> taken = fv;
        auto bodyfv = free_vars(body);
        taken.insert(bodyfv.begin(), bodyfv.end());
        taken.insert(x);
        std::string fresh = detail::unused_name(binder, taken);
        body = expr_subst(body, binder, Expr::var(fresh));
        binder = fresh;
      }
      return Expr::let(binder, nbound, expr_subst(body, x, replacement), e.loc());
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// The Section 5 term formers.

inline Expr pair_of(Expr a, Expr b) {
  return Expr::app(Expr::app(Expr::constant("pair"), std::move(a)), std::move(b));
}

// (e1 =. e2) = \y. (y e1, y e2) with y not free in e1 e2
inline Expr doteq(const Expr& e1, const Expr& e2) {
  std::set<std::string> taken = free_vars(e1);
  auto f2 = free_vars(e2);
  taken.insert(f2.begin(), f2.end());
  std::string y = detail::unused_name("y", taken);
  return Expr::lam(y, pair_of(Expr::app(Expr::var(y), e1), Expr::app(Expr::var(y), e2)));
}

// a~i = zi, (M1 x M2)~ = (M1~, M2~)
inline Expr tilde(const SUTerm& m) {
  if (m.is_var()) return Expr::var(tilde_var_name(m.index));
  return pair_of(tilde(*m.left), tilde(*m.right));
}

inline Expr k_combinator() { return Expr::lam("x", Expr::lam("y", Expr::var("x"))); }

namespace detail {

// rec{f = \z⃗. K (M̃1, M̃2) (\y⃗. (f y⃗.k =. Ñk))}
inline Expr encode_side(const SUPInstance& inst, int k, const std::vector<int>& zs) {
  Expr fcall = Expr::var("f");
  for (int i : zs) fcall = Expr::app(fcall, Expr::var("y" + std::to_string(i)));
  Expr proj = Expr::app(Expr::constant(k == 1 ? "fst" : "snd"), fcall);
  Expr inner = doteq(proj, tilde(k == 1 ? inst.n1 : inst.n2));
  for (auto it = zs.rbegin(); it != zs.rend(); ++it)
    inner = Expr::lam("y" + std::to_string(*it), inner);
  Expr body = Expr::app(Expr::app(k_combinator(), pair_of(tilde(inst.m1), tilde(inst.m2))), inner);
  for (auto it = zs.rbegin(); it != zs.rend(); ++it)
    body = Expr::lam(tilde_var_name(*it), body);
  return Expr::rec("f", body);
}

}  // namespace detail

// The reduction term: e1 =. e2 is BRNI-typable iff {M1 <= N1, M2 <= N2} has
// a semiunifier.
inline Expr encode_sup(const SUPInstance& inst) {
  std::set<int> vars = inst.var_indices();
  std::vector<int> zs(vars.begin(), vars.end());
  return doteq(detail::encode_side(inst, 1, zs), detail::encode_side(inst, 2, zs));
}

// ---------------------------------------------------------------------------
// Construction of the BRNI derivation from a semiunifier (the right-to-left
// direction of the reduction lemma, made executable).

namespace detail {

struct BrniBuilder {
  DerivPtr var_node(const TypeEnv& env, const std::string& x) {
    const TypeScheme* sch = env.lookup(x);
    auto n = std::make_shared<Derivation>(Derivation::Rule::Var, env, Expr::var(x), sch->body);
    return n;
  }

  DerivPtr con_node(const TypeEnv& env, const std::string& c, const Subst& inst,
                    const ConstTable& table) {
    Type ty = *table.lookup(c);
    auto n = std::make_shared<Derivation>(Derivation::Rule::Con, env, Expr::constant(c),
                                          inst(ty));
    n->s1 = restrict_to(inst, free_type_vars(ty));
    return n;
  }

  DerivPtr app_node(DerivPtr f, DerivPtr a) {
    auto n = std::make_shared<Derivation>(Derivation::Rule::ArrowE, f->env,
                                          Expr::app(f->expr, a->expr), f->goal.right());
    n->premises = {std::move(f), std::move(a)};
    return n;
  }

  // conclusion env is the premise env without the binder (outer passed in)
  DerivPtr lam_node(const TypeEnv& outer, const std::string& binder, Type dom, DerivPtr body) {
    auto n = std::make_shared<Derivation>(Derivation::Rule::ArrowI, outer,
                                          Expr::lam(binder, body->expr),
                                          Type::arrow(std::move(dom), body->goal));
    n->premises = {std::move(body)};
    return n;
  }

  // env |- tilde(M) : s(M)
  DerivPtr tilde_deriv(const SUTerm& m, const TypeEnv& env, const Subst& s,
                       const ConstTable& table) {
    if (m.is_var()) return var_node(env, tilde_var_name(m.index));
    Type lt = s(embed(*m.left)), rt = s(embed(*m.right));
    DerivPtr pc = con_node(env, "pair", Subst::of({{"a", lt}, {"b", rt}}), table);
    return app_node(app_node(pc, tilde_deriv(*m.left, env, s, table)),
                    tilde_deriv(*m.right, env, s, table));
  }
};

}  // namespace detail

inline std::variant<DerivPtr, std::string> build_brni_derivation(
    const SUPInstance& inst, const Subst& s, const Subst& r1, const Subst& r2,
    const ConstTable& table = ConstTable::builtins()) {
  if (r1(s(embed(inst.m1))) != s(embed(inst.n1)))
    return std::string("precondition violated: r1(s(M1)) != s(N1)");
  if (r2(s(embed(inst.m2))) != s(embed(inst.n2)))
    return std::string("precondition violated: r2(s(M2)) != s(N2)");

  detail::BrniBuilder b;
  std::set<int> vars = inst.var_indices();
  std::vector<int> zs(vars.begin(), vars.end());

  Type p = Type::prod(s(embed(inst.m1)), s(embed(inst.m2)));
  Type u = p;
  for (auto it = zs.rbegin(); it != zs.rend(); ++it)
    u = Type::arrow(s(Type::var(su_var_name(*it))), u);
  TypeEnv top;  // empty
  Expr term = encode_sup(inst);
  const std::string& ybind = term.name();  // the outer binder chosen by doteq
  TypeEnv ydev = top.with(ybind, TypeScheme(Type::arrow(u, u)));

  auto build_side = [&](int k, const Subst& rk) -> DerivPtr {
    Subst rk_local = restrict_to(rk, free_type_vars(u));
    Type ru = rk_local(u);
    Type sk = s(embed(k == 1 ? inst.n1 : inst.n2));

    Expr side_term = detail::encode_side(inst, k, zs);
    TypeEnv env_f = ydev.with("f", TypeScheme(ru));
    // abstractions over z⃗
    TypeEnv env_z = env_f;
    for (int i : zs) env_z = env_z.with(tilde_var_name(i), TypeScheme(s(Type::var(su_var_name(i)))));

    // (M̃1, M̃2) : P
    DerivPtr pair_m =
        b.app_node(b.app_node(b.con_node(env_z, "pair",
                                         Subst::of({{"a", s(embed(inst.m1))},
                                                    {"b", s(embed(inst.m2))}}),
                              table),
                              b.tilde_deriv(inst.m1, env_z, s, table)),
                   b.tilde_deriv(inst.m2, env_z, s, table));

    // \y⃗. (f y⃗.k =. Ñk)
    TypeEnv env_y = env_z;
    for (int i : zs)
      env_y = env_y.with("y" + std::to_string(i), TypeScheme(rk_local(s(Type::var(su_var_name(i))))));
    // inner =. : \y'. (y' (f y⃗.k), y' Ñk) at type (sk -> sk) -> sk * sk
    Expr proj_term = Expr::app(Expr::constant(k == 1 ? "fst" : "snd"), [&] {
      Expr fc = Expr::var("f");
      for (int i : zs) fc = Expr::app(fc, Expr::var("y" + std::to_string(i)));
      return fc;
    }());
    Expr inner_term = doteq(proj_term, tilde(k == 1 ? inst.n1 : inst.n2));
    const std::string& yin = inner_term.name();
    TypeEnv env_yin = env_y.with(yin, TypeScheme(Type::arrow(sk, sk)));
    DerivPtr projd = b.app_node(b.var_node(env_yin, yin),
                                b.app_node(b.con_node(env_yin, k == 1 ? "fst" : "snd",
                                                      Subst::of({{"a", rk_local(s(embed(inst.m1)))},
                                                                 {"b", rk_local(s(embed(inst.m2)))}}),
                                           table),
                                           [&] {
                                             DerivPtr fc = b.var_node(env_yin, "f");
                                             for (int i : zs)
                                               fc = b.app_node(
                                                   fc, b.var_node(env_yin, "y" + std::to_string(i)));
                                             return fc;
                                           }()));
    DerivPtr ntk = b.app_node(b.var_node(env_yin, yin),
                              b.tilde_deriv(k == 1 ? inst.n1 : inst.n2, env_yin, s, table));
    DerivPtr inner_pair = b.app_node(
        b.app_node(b.con_node(env_yin, "pair", Subst::of({{"a", sk}, {"b", sk}}), table), projd),
        ntk);
    DerivPtr inner = b.lam_node(env_y, yin, Type::arrow(sk, sk), inner_pair);

    // wrap \y⃗ (reverse order)
    DerivPtr lam_ys = inner;
    {
      std::vector<int> rev(zs.rbegin(), zs.rend());
      for (int i : rev) {
        // peel the binding for y_i: outer env of this lambda binds all y_j with j before i
        TypeEnv peeled = env_z;
        for (int j : zs) {
          if (j == i) break;
          peeled = peeled.with("y" + std::to_string(j),
                               TypeScheme(rk_local(s(Type::var(su_var_name(j))))));
        }
        lam_ys = b.lam_node(peeled, "y" + std::to_string(i),
                            rk_local(s(Type::var(su_var_name(i)))), lam_ys);
      }
    }

    // K : P -> B -> P applied to (M̃1,M̃2) and the lambda block
    Type bty = lam_ys->goal;
    TypeEnv kx = env_z.with("x", TypeScheme(p));
    TypeEnv kxy = kx.with("y", TypeScheme(bty));
    DerivPtr kdev = b.lam_node(env_z, "x", p, b.lam_node(kx, "y", bty, b.var_node(kxy, "x")));
    DerivPtr body = b.app_node(b.app_node(kdev, pair_m), lam_ys);

    // wrap \z⃗
    DerivPtr lam_zs = body;
    {
      std::vector<int> rev(zs.rbegin(), zs.rend());
      for (int i : rev) {
        TypeEnv peeled = env_f;
        for (int j : zs) {
          if (j == i) break;
          peeled = peeled.with(tilde_var_name(j), TypeScheme(s(Type::var(su_var_name(j)))));
        }
        lam_zs = b.lam_node(peeled, tilde_var_name(i), s(Type::var(su_var_name(i))), lam_zs);
      }
    }

    // (recni): ydev |- rec{f = \z⃗.e3} : u with s1 = rk
    auto rec = std::make_shared<Derivation>(Derivation::Rule::RecNI, ydev, side_term, u);
    rec->s1 = rk_local;
    rec->premises = {lam_zs};
    return rec;
  };

  DerivPtr d1 = build_side(1, r1);
  DerivPtr d2 = build_side(2, r2);

  DerivPtr ye1 = detail::BrniBuilder().app_node(detail::BrniBuilder().var_node(ydev, ybind), d1);
  DerivPtr ye2 = detail::BrniBuilder().app_node(detail::BrniBuilder().var_node(ydev, ybind), d2);
  DerivPtr top_pair = detail::BrniBuilder().app_node(
      detail::BrniBuilder().app_node(
          detail::BrniBuilder().con_node(ydev, "pair", Subst::of({{"a", u}, {"b", u}}), table),
          ye1),
      ye2);
  DerivPtr root = detail::BrniBuilder().lam_node(top, ybind, Type::arrow(u, u), top_pair);
  return root;
}

// ---------------------------------------------------------------------------
// Extraction: read the semiunifier off the z-binder types at the recursion
// premises of an encoder-shaped derivation.

inline std::variant<Subst, std::string> extract_semiunifier(const Derivation& d) {
  auto mismatch = [](const std::string& what) {
    return std::variant<Subst, std::string>("shape-mismatch: " + what);
  };
  if (d.rule != Derivation::Rule::ArrowI) return mismatch("root is not the =. lambda");
  if (d.premises.size() != 1) return mismatch("root premise count");
  const Derivation& pr = *d.premises[0];  // pair (y e1) (y e2)
  if (pr.rule != Derivation::Rule::ArrowE) return mismatch("root body is not an application");
  const Derivation& pl = *pr.premises[0];  // pair (y e1)
  if (pl.rule != Derivation::Rule::ArrowE) return mismatch("pair application shape");
  const Derivation& ye1 = *pl.premises[1];  // y e1
  if (ye1.rule != Derivation::Rule::ArrowE) return mismatch("y e1 shape");
  const Derivation& e1 = *ye1.premises[1];
  if (e1.rule != Derivation::Rule::RecNI) return mismatch("e1 is not a recni node");

  // reconstruct the instance from the encoder term
  const Expr& rec_term = e1.expr;
  if (rec_term.kind() != Expr::Kind::Rec) return mismatch("recni subject");

  // descend the z-lambda chain, collecting binder types by index
  const Derivation* cur = e1.premises.empty() ? nullptr : e1.premises[0].get();
  Subst s;
  std::set<int> seen;
  while (cur && cur->rule == Derivation::Rule::ArrowI &&
         cur->expr.name().size() > 1 && cur->expr.name()[0] == 'z') {
    int idx = 0;
    try {
      idx = std::stoi(cur->expr.name().substr(1));
    } catch (...) {
      return mismatch("z binder name");
    }
    if (cur->goal.kind() != Type::Kind::Arrow) return mismatch("z lambda type");
    s.bind(su_var_name(idx), cur->goal.left());
    seen.insert(idx);
    cur = cur->premises.empty() ? nullptr : cur->premises[0].get();
  }
  if (seen.empty()) return mismatch("no z binders found");

  // recover M/N terms from the expression to verify the result
  // rec body after z-lambdas: K (M̃1,M̃2) (\y⃗. (f y⃗.1 =. Ñ1))
  Expr body = rec_term.body();
  while (body.kind() == Expr::Kind::Lam && body.name()[0] == 'z') body = body.body();
  if (body.kind() != Expr::Kind::App) return mismatch("rec body");
  Expr kapp = body.fn();
  if (kapp.kind() != Expr::Kind::App) return mismatch("K application");
  Expr pair_m = kapp.arg();

  std::function<std::optional<SUTerm>(const Expr&)> untilde =
      [&](const Expr& e) -> std::optional<SUTerm> {
    if (e.kind() == Expr::Kind::Var && e.name().size() > 1 && e.name()[0] == 'z') {
      try {
        return SUTerm::var(std::stoi(e.name().substr(1)));
      } catch (...) {
        return std::nullopt;
      }
    }
    if (e.kind() == Expr::Kind::App && e.fn().kind() == Expr::Kind::App &&
        e.fn().fn().kind() == Expr::Kind::Const && e.fn().fn().name() == "pair") {
      auto l = untilde(e.fn().arg());
      auto r = untilde(e.arg());
      if (l && r) return SUTerm::prod(*l, *r);
    }
    return std::nullopt;
  };

  auto m12 = untilde(pair_m);
  if (!m12 || m12->is_var()) return mismatch("(M1,M2) pair");
  SUPInstance inst{*m12->left, SUTerm::var(1), *m12->right, SUTerm::var(1)};

  // Ñk sits in the inner =. body: \y⃗. \y'. (y' proj, y' Ñk)
  auto find_n = [&](const Expr& rec_side) -> std::optional<SUTerm> {
    Expr b2 = rec_side.body();
    while (b2.kind() == Expr::Kind::Lam && b2.name()[0] == 'z') b2 = b2.body();
    if (b2.kind() != Expr::Kind::App) return std::nullopt;
    Expr lamy = b2.arg();
    while (lamy.kind() == Expr::Kind::Lam && lamy.name()[0] == 'y' && lamy.name().size() > 1)
      lamy = lamy.body();
    if (lamy.kind() != Expr::Kind::Lam) return std::nullopt;  // the =. binder
    Expr inner = lamy.body();
    if (inner.kind() != Expr::Kind::App) return std::nullopt;
    Expr yn = inner.arg();  // y' Ñk
    if (yn.kind() != Expr::Kind::App) return std::nullopt;
    return untilde(yn.arg());
  };

  auto n1 = find_n(rec_term);
  const Derivation& yr = *pr.premises[1];  // y e2
  if (yr.rule != Derivation::Rule::ArrowE) return mismatch("y e2 shape");
  const Derivation& e2 = *yr.premises[1];
  if (e2.rule != Derivation::Rule::RecNI) return mismatch("e2 is not a recni node");
  auto n2 = find_n(e2.expr);
  if (!n1 || !n2) return mismatch("N terms");
  inst.n1 = *n1;
  inst.n2 = *n2;

  Subst out;
  for (int i : inst.var_indices()) {
    if (!seen.count(i)) return mismatch("missing binder for a" + std::to_string(i));
    out.bind(su_var_name(i), s.lookup(su_var_name(i)));
  }
  if (!check_two_ineq_semiunifier(inst, out))
    return mismatch("extracted substitution is not a semiunifier of the encoded instance");
  return out;
}

// ---------------------------------------------------------------------------
// Instance files: two lines `M <= N` over variables a1, a2, ... and `*`.

namespace detail {

class SUTermParser {
 public:
  explicit SUTermParser(Lexer& lx) : lx_(lx) {}

  SUTerm term() {
    SUTerm l = atom();
    if (lx_.peek().kind == Tok::Star) {
      lx_.take();
      return SUTerm::prod(l, term());
    }
    return l;
  }

 private:
  SUTerm atom() {
    if (lx_.peek().kind == Tok::LParen) {
      lx_.take();
      SUTerm t = term();
      if (lx_.peek().kind != Tok::RParen) lx_.fail("expected ')'");
      lx_.take();
      return t;
    }
    if (lx_.peek().kind != Tok::Ident) lx_.fail("expected a variable a1, a2, ...");
    Token t = lx_.take();
    if (t.text.size() < 2 || t.text[0] != 'a')
      throw ParseError("semiunification variables are a1, a2, ...", t.line, t.col);
    for (size_t i = 1; i < t.text.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t.text[i])))
        throw ParseError("semiunification variables are a1, a2, ...", t.line, t.col);
    int idx = 0;
    try {
      idx = std::stoi(t.text.substr(1));
    } catch (const std::exception&) {
      throw ParseError("variable index out of range", t.line, t.col);
    }
    if (idx < 1) throw ParseError("variable indices start at 1", t.line, t.col);
    return SUTerm::var(idx);
  }

  Lexer& lx_;
};

}  // namespace detail

inline SUPInstance parse_sup_instance(std::string_view text) {
  detail::Lexer lx(text);
  detail::SUTermParser p(lx);
  auto ineq = [&]() {
    SUTerm m = p.term();
    if (lx.peek().kind != detail::Tok::Leq) lx.fail("expected '<='");
    lx.take();
    SUTerm n = p.term();
    return std::make_pair(m, n);
  };
  auto [m1, n1] = ineq();
  auto [m2, n2] = ineq();
  detail::expect_end(lx);
  return SUPInstance{m1, n1, m2, n2};
}

inline std::string print_sup_instance(const SUPInstance& inst) {
  return print_su_term(inst.m1) + " <= " + print_su_term(inst.n1) + "\n" +
         print_su_term(inst.m2) + " <= " + print_su_term(inst.n2) + "\n";
}

}  // namespace br

#endif  // BR_BRNI_HPP
