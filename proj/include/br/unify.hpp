#ifndef BR_UNIFY_HPP
#define BR_UNIFY_HPP

#include <deque>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "br/subst.hpp"
#include "br/syntax.hpp"

namespace br {

struct UnifEq {
  Type lhs, rhs;
  SourceLoc loc;
};

// A unification problem is a multiset of equations; order is irrelevant for
// solvability but fixes the (deterministic) solved form.
using UnifProblem = std::vector<UnifEq>;

inline UnifProblem problem(std::initializer_list<std::pair<Type, Type>> eqs) {
  UnifProblem p;
  for (auto& [l, r] : eqs) p.push_back({l, r, {}});
  return p;
}

inline std::set<std::string> free_type_vars(const UnifProblem& p) {
  std::set<std::string> out;
  for (const auto& eq : p) {
    eq.lhs.collect_vars(out);
    eq.rhs.collect_vars(out);
  }
  return out;
}

inline UnifProblem apply_subst(const Subst& s, const UnifProblem& p) {
  UnifProblem out;
  out.reserve(p.size());
  for (const auto& eq : p) out.push_back({s(eq.lhs), s(eq.rhs), eq.loc});
  return out;
}

struct UnifyFailure {
  enum class Kind { Clash, Occurs };
  Kind kind;
  Type lhs, rhs;
  SourceLoc loc;
};

// Robinson-style unification with an explicit work list. The returned
// substitution is idempotent, deterministic given the equation order, and
// has Dom(s) contained in FTV(p).
inline std::variant<Subst, UnifyFailure> unify(const UnifProblem& p) {
  Subst s;
  std::deque<UnifEq> work(p.begin(), p.end());
  while (!work.empty()) {
    UnifEq eq = work.front();
    work.pop_front();
    Type a = s(eq.lhs), b = s(eq.rhs);
    if (a == b) continue;
    if (a.is_var() || b.is_var()) {
      if (!a.is_var()) std::swap(a, b);
      if (b.contains_var(a.name()))
        return UnifyFailure{UnifyFailure::Kind::Occurs, a, b, eq.loc};
      s = compose(Subst::single(a.name(), b), s);
      continue;
    }
    if (a.kind() != b.kind())
      return UnifyFailure{UnifyFailure::Kind::Clash, a, b, eq.loc};
    for (int i = a.arity() - 1; i >= 0; --i)
      work.push_front({i == 0 ? a.left() : a.right(), i == 0 ? b.left() : b.right(), eq.loc});
  }
  return s;
}

inline bool unifies(const Subst& s, const UnifProblem& p) {
  for (const auto& eq : p)
    if (s(eq.lhs) != s(eq.rhs)) return false;
  return true;
}

}  // namespace br

#endif  // BR_UNIFY_HPP
