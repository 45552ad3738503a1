#ifndef BR_SEMIUNIFY_HPP
#define BR_SEMIUNIFY_HPP

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "br/fresh.hpp"
#include "br/parse.hpp"
#include "br/subst.hpp"
#include "br/unify.hpp"

namespace br {

// At most one inequation u <= v: the uniform restriction under which
// semi-unification is decidable.
struct SemiUnifProblem {
  UnifProblem equations;
  std::optional<std::pair<Type, Type>> inequation;

  std::set<std::string> free_vars() const {
    std::set<std::string> out = free_type_vars(equations);
    if (inequation) {
      inequation->first.collect_vars(out);
      inequation->second.collect_vars(out);
    }
    return out;
  }
};

// The diagnostic form produced by the E' emitter; with two or more
// inequations it is never routed to the solver.
struct EmittedSUP {
  UnifProblem equations;
  std::vector<std::pair<Type, Type>> inequations;
};

// ---------------------------------------------------------------------------
// Matching: least s with s(u) = v and Dom(s) within FTV(u).

inline bool match_into(const Type& u, const Type& v, std::map<std::string, Type>& binding) {
  if (u.is_var()) {
    auto [it, inserted] = binding.emplace(u.name(), v);
    return inserted || it->second == v;
  }
  if (u.kind() != v.kind()) return false;
  for (int i = 0; i < u.arity(); ++i)
    if (!match_into(i == 0 ? u.left() : u.right(), i == 0 ? v.left() : v.right(), binding))
      return false;
  return true;
}

inline std::optional<Subst> match_all(const std::vector<std::pair<Type, Type>>& pairs) {
  std::map<std::string, Type> binding;
  for (const auto& [u, v] : pairs)
    if (!match_into(u, v, binding)) return std::nullopt;
  Subst s;
  for (auto& [x, t] : binding) s.bind(x, t);
  return s;
}

inline std::optional<Subst> match_types(const Type& u, const Type& v) {
  return match_all({{u, v}});
}

// ---------------------------------------------------------------------------
// Uniform semi-unification.
//
// Rewriting solver over a state of forced equations plus the single
// instantiated inequation. Each round:
//   (a) unify all equations and apply the result to both sides;
//   (b) decompose constructor <= constructor componentwise (head clash fails);
//   (c) a pending constructor-term <= variable forces that variable to the
//       matching head with fresh arguments;
//   (d) two obligations a <= w1, a <= w2 with the same left variable force
//       the equation w1 = w2 (the shared witness maps a to one term);
//   (e) remaining variable <= term obligations discharge into the witness.
// Every added equation holds under every semiunifier, so the fixpoint is a
// most general semiunifier.
//
// Unsolvable growth cycles (e.g. 'a * 'a <= 'a) are caught by an extended
// occurs check on the obligation dependency graph built each round: an edge
// g -> b is recorded when the witness image of b is forced to contain (c)-
// style, weight 1) or to be at least as large as (atomic, weight 0) the
// image of g; a cycle with positive total weight contradicts the finiteness
// of types. A step budget guards the (open) completeness of that criterion;
// exceeding it reports budget-exceeded, distinct from no-semiunifier.

struct SemiUnifFailure {
  enum class Kind { NoSemiunifier, BudgetExceeded };
  Kind kind;
  std::string detail;
};

inline constexpr int kDefaultStepBudget = 1000;

namespace detail {

struct Obligations {
  // left variable -> distinct right-hand sides seen
  std::map<std::string, std::vector<Type>> atomic;
  // constructor term <= variable, in FIFO discovery order
  std::vector<std::pair<Type, std::string>> expansions;
  bool clash = false;
  Type clash_l, clash_r;

  // growth edges: (from, to, weight)
  std::vector<std::tuple<std::string, std::string, int>> edges;
};

inline void decompose(const Type& l, const Type& r, Obligations& out) {
  if (out.clash) return;
  if (l.is_var()) {
    auto& seen = out.atomic[l.name()];
    bool dup = false;
    for (const auto& w : seen) dup = dup || w == r;
    if (!dup) seen.push_back(r);
    if (r.is_var()) out.edges.emplace_back(l.name(), r.name(), 0);
    return;
  }
  if (r.is_var()) {
    out.expansions.emplace_back(l, r.name());
    std::set<std::string> lvars;
    l.collect_vars(lvars);
    for (const auto& g : lvars) out.edges.emplace_back(g, r.name(), 1);
    return;
  }
  if (l.kind() != r.kind()) {
    out.clash = true;
    out.clash_l = l;
    out.clash_r = r;
    return;
  }
  for (int i = 0; i < l.arity(); ++i)
    decompose(i == 0 ? l.left() : l.right(), i == 0 ? r.left() : r.right(), out);
}

// Any edge of weight 1 inside a strongly connected component lies on a cycle
// of positive total weight.
inline bool has_positive_cycle(const std::vector<std::tuple<std::string, std::string, int>>& edges) {
  std::map<std::string, std::vector<std::string>> adj, radj;
  std::set<std::string> nodes;
  for (const auto& [a, b, w] : edges) {
    adj[a].push_back(b);
    radj[b].push_back(a);
    nodes.insert(a);
    nodes.insert(b);
    if (a == b && w > 0) return true;
  }
  // Kosaraju
  std::vector<std::string> order;
  std::set<std::string> seen;
  for (const auto& n : nodes) {
    if (seen.count(n)) continue;
    std::vector<std::pair<std::string, size_t>> stack{{n, 0}};
    seen.insert(n);
    while (!stack.empty()) {
      auto& [cur, idx] = stack.back();
      auto& nexts = adj[cur];
      if (idx < nexts.size()) {
        const std::string nx = nexts[idx++];
        if (!seen.count(nx)) {
          seen.insert(nx);
          stack.push_back({nx, 0});
        }
      } else {
        order.push_back(cur);
        stack.pop_back();
      }
    }
  }
  std::map<std::string, int> comp;
  int ncomp = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (comp.count(*it)) continue;
    std::vector<std::string> stack{*it};
    comp[*it] = ncomp;
    while (!stack.empty()) {
      std::string cur = stack.back();
      stack.pop_back();
      for (const auto& nx : radj[cur]) {
        if (!comp.count(nx)) {
          comp[nx] = ncomp;
          stack.push_back(nx);
        }
      }
    }
    ++ncomp;
  }
  for (const auto& [a, b, w] : edges)
    if (w > 0 && comp[a] == comp[b]) return true;
  return false;
}

inline Type head_skeleton(const Type& t, FreshSupply& fresh) {
  switch (t.kind()) {
    case Type::Kind::Arrow: return Type::arrow(fresh.fresh_type(), fresh.fresh_type());
    case Type::Kind::Prod: return Type::prod(fresh.fresh_type(), fresh.fresh_type());
    case Type::Kind::List: return Type::list(fresh.fresh_type());
    default: return t;  // bool / int
  }
}

}  // namespace detail

inline std::variant<Subst, SemiUnifFailure> semi_unify(const SemiUnifProblem& p,
                                                       FreshSupply& fresh,
                                                       int step_budget = kDefaultStepBudget) {
  const std::set<std::string> original_vars = p.free_vars();
  UnifProblem eqs = p.equations;

  // Undetected divergence grows the instantiated sides geometrically, so a
  // size ceiling stops it within a few rounds; the round ceiling covers slow
  // non-growing loops. Both report budget-exceeded, never no-semiunifier.
  size_t size_limit = 256;
  if (p.inequation)
    size_limit += static_cast<size_t>(step_budget) *
                  (p.inequation->first.size() + p.inequation->second.size());

  for (int step = 0; step < step_budget; ++step) {
    auto solved = unify(eqs);
    if (auto* fail = std::get_if<UnifyFailure>(&solved))
      return SemiUnifFailure{SemiUnifFailure::Kind::NoSemiunifier,
                             fail->kind == UnifyFailure::Kind::Occurs ? "occurs check"
                                                                      : "constructor clash"};
    Subst s = std::get<Subst>(solved);
    if (!p.inequation) return restrict_to(s, original_vars);

    Type lhs = s(p.inequation->first), rhs = s(p.inequation->second);
    if (lhs.size() + rhs.size() > size_limit)
      return SemiUnifFailure{SemiUnifFailure::Kind::BudgetExceeded,
                             "instantiated inequation exceeded the size budget"};
    detail::Obligations obs;
    detail::decompose(lhs, rhs, obs);
    if (obs.clash)
      return SemiUnifFailure{SemiUnifFailure::Kind::NoSemiunifier,
                             "inequation head clash: " + print_type(obs.clash_l) +
                                 " <= " + print_type(obs.clash_r)};
    if (detail::has_positive_cycle(obs.edges))
      return SemiUnifFailure{SemiUnifFailure::Kind::NoSemiunifier,
                             "growth cycle in the inequation (extended occurs check)"};

    UnifProblem forced;
    for (const auto& [a, ws] : obs.atomic)
      for (size_t i = 1; i < ws.size(); ++i) forced.push_back({ws[0], ws[i], {}});
    std::set<std::string> expanded;
    for (const auto& [l, b] : obs.expansions) {
      if (!expanded.insert(b).second) continue;
      forced.push_back({Type::var(b), detail::head_skeleton(l, fresh), {}});
    }
    if (forced.empty()) return restrict_to(s, original_vars);
    for (auto& eq : forced) eqs.push_back(eq);
  }
  return SemiUnifFailure{SemiUnifFailure::Kind::BudgetExceeded,
                         "no fixpoint within the step budget"};
}

// s is a semiunifier iff it unifies every equation and the instantiated
// inequation admits a matching witness.
inline bool check_semiunifier(const SemiUnifProblem& p, const Subst& s) {
  if (!unifies(s, p.equations)) return false;
  if (!p.inequation) return true;
  return match_types(s(p.inequation->first), s(p.inequation->second)).has_value();
}

// ---------------------------------------------------------------------------
// Brute-force oracle: enumerate substitutions mapping FTV(p) to types of
// bounded depth over vocab plus {bool, int}; return the first that passes
// check_semiunifier. Exhaustive for witnesses within the bound; failure is
// not a proof of unsolvability.

namespace detail {

inline void enumerate_types(const std::vector<std::string>& vocab, int depth,
                            std::vector<Type>& out) {
  std::vector<Type> cur;
  for (const auto& v : vocab) cur.push_back(Type::var(v));
  cur.push_back(Type::boolean());
  cur.push_back(Type::integer());
  out = cur;
  for (int d = 0; d < depth; ++d) {
    std::vector<Type> next = out;
    for (const auto& a : out) {
      Type l = Type::list(a);
      bool dup = false;
      for (const auto& t : next) dup = dup || t == l;
      if (!dup) next.push_back(l);
      for (const auto& b : out) {
        for (Type t : {Type::arrow(a, b), Type::prod(a, b)}) {
          bool d2 = false;
          for (const auto& u : next) d2 = d2 || u == t;
          if (!d2) next.push_back(t);
        }
      }
    }
    out = std::move(next);
  }
}

}  // namespace detail

inline std::optional<Subst> oracle_search(const SemiUnifProblem& p,
                                          const std::vector<std::string>& vocab, int depth) {
  const std::set<std::string> ftv = p.free_vars();
  std::vector<std::string> vars(ftv.begin(), ftv.end());
  if (vars.empty()) return check_semiunifier(p, Subst()) ? std::optional<Subst>(Subst()) : std::nullopt;
  std::vector<Type> pool;
  detail::enumerate_types(vocab, depth, pool);
  // Each variable tries itself first, so the identity substitution is the
  // first candidate overall.
  std::vector<std::vector<Type>> candidates(vars.size());
  for (size_t i = 0; i < vars.size(); ++i) {
    Type self = Type::var(vars[i]);
    candidates[i].push_back(self);
    for (const auto& t : pool)
      if (t != self) candidates[i].push_back(t);
  }
  std::vector<size_t> pick(vars.size(), 0);
  for (;;) {
    Subst s;
    for (size_t i = 0; i < vars.size(); ++i) s.bind(vars[i], candidates[i][pick[i]]);
    if (check_semiunifier(p, s)) return s;
    size_t i = 0;
    for (; i < vars.size(); ++i) {
      if (++pick[i] < candidates[i].size()) break;
      pick[i] = 0;
    }
    if (i == vars.size()) return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// SUP problem files: an `eq:` section of `u = v` lines and a `leq:` section
// with at most one `u <= v` line (the emitter's diagnostic output may carry
// several).

struct SupFile {
  UnifProblem equations;
  std::vector<std::pair<Type, Type>> inequations;
};

inline SupFile parse_sup_file(std::string_view text) {
  detail::Lexer lx{text};
  SupFile out;
  enum class Section { None, Eq, Leq } section = Section::None;
  while (lx.peek().kind != detail::Tok::End) {
    if (lx.peek().kind == detail::Tok::Ident &&
        (lx.peek().text == "eq" || lx.peek().text == "leq")) {
      detail::Token t = lx.take();
      if (lx.peek().kind != detail::Tok::Colon)
        throw ParseError("expected ':' after section name", t.line, t.col);
      lx.take();
      section = t.text == "eq" ? Section::Eq : Section::Leq;
      continue;
    }
    if (section == Section::None)
      throw ParseError("expected section header 'eq:' or 'leq:'", lx.peek().line, lx.peek().col);
    detail::TypeParser tp(lx);
    detail::Token at = lx.peek();
    Type lhs = tp.type();
    if (section == Section::Eq) {
      if (lx.peek().kind != detail::Tok::Equals) lx.fail("expected '='");
      lx.take();
      Type rhs = tp.type();
      out.equations.push_back({lhs, rhs, {at.line, at.col}});
    } else {
      if (lx.peek().kind != detail::Tok::Leq) lx.fail("expected '<='");
      lx.take();
      Type rhs = tp.type();
      out.inequations.emplace_back(lhs, rhs);
    }
  }
  return out;
}

inline std::string print_sup_file(const UnifProblem& eqs,
                                  const std::vector<std::pair<Type, Type>>& leqs) {
  std::string out;
  if (!eqs.empty()) {
    out += "eq:\n";
    for (const auto& e : eqs) out += print_type(e.lhs) + " = " + print_type(e.rhs) + "\n";
  }
  if (!leqs.empty()) {
    out += "leq:\n";
    for (const auto& [l, r] : leqs) out += print_type(l) + " <= " + print_type(r) + "\n";
  }
  return out;
}

}  // namespace br

#endif  // BR_SEMIUNIFY_HPP
