#ifndef BR_SUBST_HPP
#define BR_SUBST_HPP

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "br/fresh.hpp"
#include "br/print.hpp"
#include "br/syntax.hpp"

namespace br {

struct CaptureViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A substitution is a finite map from type variables to mono types. Identity
// bindings are never stored, so the observable domain is exactly
// {a | s(a) != a}. The identity substitution is the empty map.
class Subst {
 public:
  Subst() = default;

  static Subst identity() { return Subst(); }

  static Subst single(const std::string& v, Type t) {
    Subst s;
    s.bind(v, std::move(t));
    return s;
  }

  static Subst of(std::initializer_list<std::pair<std::string, Type>> bs) {
    Subst s;
    for (auto& [v, t] : bs) s.bind(v, t);
    return s;
  }

  void bind(const std::string& v, Type t) {
    if (t.is_var() && t.name() == v)
      m_.erase(v);
    else
      m_[v] = std::move(t);
  }

  bool is_identity() const { return m_.empty(); }

  Type lookup(const std::string& v) const {
    auto it = m_.find(v);
    return it == m_.end() ? Type::var(v) : it->second;
  }

  std::set<std::string> domain() const {
    std::set<std::string> d;
    for (const auto& [v, t] : m_) d.insert(v);
    return d;
  }

  std::set<std::string> range_vars() const {
    std::set<std::string> out;
    for (const auto& [v, t] : m_) t.collect_vars(out);
    return out;
  }

  Type apply(const Type& t) const {
    if (m_.empty()) return t;
    switch (t.kind()) {
      case Type::Kind::Var: return lookup(t.name());
      case Type::Kind::Arrow: return Type::arrow(apply(t.left()), apply(t.right()));
      case Type::Kind::Prod: return Type::prod(apply(t.left()), apply(t.right()));
      case Type::Kind::List: return Type::list(apply(t.left()));
      default: return t;
    }
  }
  Type operator()(const Type& t) const { return apply(t); }

  // Scheme application requires the caller to have renamed the quantifiers
  // apart from the substitution first ("errors: capture-violation").
  TypeScheme apply(const TypeScheme& s) const {
    if (m_.empty()) return s;
    for (const auto& q : s.quantified) {
      if (m_.count(q))
        throw CaptureViolation("substitution domain touches quantified variable '" + q + "'");
    }
    // Only bindings for the scheme's free variables matter for capture.
    auto fv = s.free_vars();
    std::set<std::string> relevant_range;
    for (const auto& [v, t] : m_)
      if (fv.count(v)) t.collect_vars(relevant_range);
    for (const auto& q : s.quantified) {
      if (relevant_range.count(q))
        throw CaptureViolation("substitution range captures quantified variable '" + q + "'");
    }
    return TypeScheme(s.quantified, apply(s.body));
  }

  TypeEnv apply(const TypeEnv& env) const {
    TypeEnv out;
    for (const auto& [x, s] : env.bindings()) out = out.with(x, apply(s));
    return out;
  }
  TypeEnv operator()(const TypeEnv& env) const { return apply(env); }

  const std::map<std::string, Type>& mapping() const { return m_; }

  friend bool operator==(const Subst& a, const Subst& b) { return a.m_ == b.m_; }

 private:
  std::map<std::string, Type> m_;
};

// compose(s1, s2)(a) = s1(s2(a)).
inline Subst compose(const Subst& s1, const Subst& s2) {
  Subst out;
  for (const auto& [v, t] : s2.mapping()) out.bind(v, s1.apply(t));
  for (const auto& [v, t] : s1.mapping())
    if (!s2.mapping().count(v)) out.bind(v, t);
  return out;
}

// s|V: agrees with s on V, identity elsewhere.
inline Subst restrict_to(const Subst& s, const std::set<std::string>& v) {
  Subst out;
  for (const auto& [x, t] : s.mapping())
    if (v.count(x)) out.bind(x, t);
  return out;
}

// s[a := u]: point override.
inline Subst update(const Subst& s, const std::string& a, Type u) {
  Subst out = s;
  out.bind(a, std::move(u));
  return out;
}

// s1 =V s2: pointwise equality on V.
inline bool eq_on(const Subst& s1, const Subst& s2, const std::set<std::string>& v) {
  for (const auto& x : v)
    if (s1.lookup(x) != s2.lookup(x)) return false;
  return true;
}

// Capture-free scheme application: quantifiers are renamed to fresh names
// when (and only when) they collide with the substitution. quantifier_map,
// when given, receives old-quantifier -> new-quantifier.
inline TypeScheme apply_scheme_mapped(const Subst& s, const TypeScheme& sch, FreshSupply& fresh,
                                      std::map<std::string, std::string>* quantifier_map) {
  if (quantifier_map)
    for (const auto& q : sch.quantified) (*quantifier_map)[q] = q;
  if (sch.is_mono()) return TypeScheme(s.apply(sch.body));
  std::set<std::string> danger = s.domain();
  auto fv = sch.free_vars();
  for (const auto& [v, t] : s.mapping())
    if (fv.count(v)) t.collect_vars(danger);
  bool clash = false;
  for (const auto& q : sch.quantified)
    if (danger.count(q)) { clash = true; break; }
  if (!clash) return TypeScheme(sch.quantified, s.apply(sch.body));
  std::vector<std::string> qs;
  Subst ren;
  for (const auto& q : sch.quantified) {
    std::string q2 = fresh.next();
    qs.push_back(q2);
    ren.bind(q, Type::var(q2));
    if (quantifier_map) (*quantifier_map)[q] = q2;
  }
  Subst open = compose(s, ren);
  return TypeScheme(std::move(qs), open.apply(sch.body));
}

inline TypeScheme apply_scheme(const Subst& s, const TypeScheme& sch, FreshSupply& fresh) {
  return apply_scheme_mapped(s, sch, fresh, nullptr);
}

inline TypeEnv apply_env(const Subst& s, const TypeEnv& env, FreshSupply& fresh) {
  TypeEnv out;
  for (const auto& [x, sch] : env.bindings()) out = out.with(x, apply_scheme(s, sch, fresh));
  return out;
}

// Textual form used in machine-readable output: { 'a := int, 'b := 'c list }.
inline std::string print_subst(const Subst& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& [v, t] : s.mapping()) {
    out += first ? " " : ", ";
    first = false;
    out += "'";
    out += v;
    out += " := ";
    out += print_type(t);
  }
  out += first ? "}" : " }";
  return out;
}

}  // namespace br

#endif  // BR_SUBST_HPP
