#ifndef BR_SYNTAX_HPP
#define BR_SYNTAX_HPP

#include <cassert>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace br {

struct SourceLoc {
  int line = 0;
  int col = 0;
  bool known() const { return line > 0; }
};

// ---------------------------------------------------------------------------
// Mono types: 'a | bool | int | u -> v | u * v | u list
// Immutable, structurally shared trees.

class Type {
 public:
  enum class Kind { Var, Bool, Int, Arrow, Prod, List };

  Type() : Type(integer()) {}

  static Type var(std::string name) {
    return Type(std::make_shared<const Node>(Node{Kind::Var, std::move(name), nullptr, nullptr}));
  }
  static Type boolean() {
    return Type(std::make_shared<const Node>(Node{Kind::Bool, {}, nullptr, nullptr}));
  }
  static Type integer() {
    return Type(std::make_shared<const Node>(Node{Kind::Int, {}, nullptr, nullptr}));
  }
  static Type arrow(Type dom, Type cod) {
    return Type(std::make_shared<const Node>(Node{Kind::Arrow, {}, dom.n_, cod.n_}));
  }
  static Type prod(Type l, Type r) {
    return Type(std::make_shared<const Node>(Node{Kind::Prod, {}, l.n_, r.n_}));
  }
  static Type list(Type elem) {
    return Type(std::make_shared<const Node>(Node{Kind::List, {}, elem.n_, nullptr}));
  }

  Kind kind() const { return n_->k; }
  bool is_var() const { return n_->k == Kind::Var; }

  const std::string& name() const {
    assert(is_var());
    return n_->name;
  }
  // Arrow/Prod: left and right child; List: left is the element type.
  Type left() const {
    assert(n_->a);
    return Type(n_->a);
  }
  Type right() const {
    assert(n_->b);
    return Type(n_->b);
  }

  int arity() const {
    switch (n_->k) {
      case Kind::Arrow:
      case Kind::Prod: return 2;
      case Kind::List: return 1;
      default: return 0;
    }
  }

  friend int compare(const Type& x, const Type& y) {
    if (x.n_ == y.n_) return 0;
    if (x.n_->k != y.n_->k) return x.n_->k < y.n_->k ? -1 : 1;
    if (x.n_->k == Kind::Var) return x.n_->name.compare(y.n_->name);
    for (int i = 0; i < x.arity(); ++i) {
      int c = compare(Type(i == 0 ? x.n_->a : x.n_->b), Type(i == 0 ? y.n_->a : y.n_->b));
      if (c != 0) return c;
    }
    return 0;
  }
  friend bool operator==(const Type& x, const Type& y) { return compare(x, y) == 0; }
  friend bool operator!=(const Type& x, const Type& y) { return compare(x, y) != 0; }
  friend bool operator<(const Type& x, const Type& y) { return compare(x, y) < 0; }

  bool contains_var(const std::string& v) const {
    if (is_var()) return n_->name == v;
    for (int i = 0; i < arity(); ++i)
      if ((i == 0 ? left() : right()).contains_var(v)) return true;
    return false;
  }

  void collect_vars(std::set<std::string>& out) const {
    if (is_var()) {
      out.insert(n_->name);
      return;
    }
    for (int i = 0; i < arity(); ++i) (i == 0 ? left() : right()).collect_vars(out);
  }

  // Variables in first-occurrence (left-to-right) order.
  void vars_in_order(std::vector<std::string>& out, std::set<std::string>& seen) const {
    if (is_var()) {
      if (seen.insert(n_->name).second) out.push_back(n_->name);
      return;
    }
    for (int i = 0; i < arity(); ++i) (i == 0 ? left() : right()).vars_in_order(out, seen);
  }
  std::vector<std::string> vars_in_order() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    vars_in_order(out, seen);
    return out;
  }

  size_t size() const {
    size_t s = 1;
    for (int i = 0; i < arity(); ++i) s += (i == 0 ? left() : right()).size();
    return s;
  }

 private:
  struct Node {
    Kind k;
    std::string name;
    std::shared_ptr<const Node> a, b;
  };
  explicit Type(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
  std::shared_ptr<const Node> n_;
};

inline std::set<std::string> free_type_vars(const Type& t) {
  std::set<std::string> out;
  t.collect_vars(out);
  return out;
}

// ---------------------------------------------------------------------------
// Type schemes: forall 'a1 ... 'an. u   (a mono type is a scheme with no
// quantifiers).

struct TypeScheme {
  std::vector<std::string> quantified;
  Type body;

  TypeScheme() = default;
  TypeScheme(Type mono) : body(std::move(mono)) {}  // NOLINT: implicit by design
  TypeScheme(std::vector<std::string> qs, Type b) : quantified(std::move(qs)), body(std::move(b)) {}

  bool is_mono() const { return quantified.empty(); }

  std::set<std::string> free_vars() const {
    std::set<std::string> out = free_type_vars(body);
    for (const auto& q : quantified) out.erase(q);
    return out;
  }
};

inline std::set<std::string> free_type_vars(const TypeScheme& s) { return s.free_vars(); }

// Alpha-equality of schemes: quantifier lists of equal length whose bodies
// agree under positional identification of the quantified names.
inline bool scheme_alpha_equal(const TypeScheme& a, const TypeScheme& b) {
  if (a.quantified.size() != b.quantified.size()) return false;
  if (a.quantified.empty()) return a.body == b.body;
  std::map<std::string, std::string> a2b, b2a;
  for (size_t i = 0; i < a.quantified.size(); ++i) {
    if (!a2b.emplace(a.quantified[i], b.quantified[i]).second) return false;
    if (!b2a.emplace(b.quantified[i], a.quantified[i]).second) return false;
  }
  struct Walk {
    const std::map<std::string, std::string>& a2b;
    const std::map<std::string, std::string>& b2a;
    bool go(const Type& x, const Type& y) const {
      if (x.kind() != y.kind()) return false;
      if (x.is_var()) {
        auto i = a2b.find(x.name());
        auto j = b2a.find(y.name());
        if (i == a2b.end() && j == b2a.end()) return x.name() == y.name();
        if (i == a2b.end() || j == b2a.end()) return false;
        return i->second == y.name() && j->second == x.name();
      }
      for (int k = 0; k < x.arity(); ++k)
        if (!go(k == 0 ? x.left() : x.right(), k == 0 ? y.left() : y.right())) return false;
      return true;
    }
  };
  return Walk{a2b, b2a}.go(a.body, b.body);
}

// ---------------------------------------------------------------------------
// Type environments: at most one binding per term variable. In BR and BRNI
// every binding is mono; schemes appear only in BR+let.

class TypeEnv {
 public:
  TypeEnv() = default;

  static TypeEnv of(std::initializer_list<std::pair<std::string, TypeScheme>> bs) {
    TypeEnv e;
    for (auto& [x, s] : bs) e.bindings_[x] = s;
    return e;
  }

  const TypeScheme* lookup(const std::string& x) const {
    auto it = bindings_.find(x);
    return it == bindings_.end() ? nullptr : &it->second;
  }
  bool binds(const std::string& x) const { return bindings_.count(x) != 0; }

  TypeEnv with(const std::string& x, TypeScheme s) const {
    TypeEnv e = *this;
    e.bindings_[x] = std::move(s);
    return e;
  }
  TypeEnv without(const std::string& x) const {
    TypeEnv e = *this;
    e.bindings_.erase(x);
    return e;
  }

  bool empty() const { return bindings_.empty(); }
  size_t size() const { return bindings_.size(); }
  const std::map<std::string, TypeScheme>& bindings() const { return bindings_; }

  bool all_mono() const {
    for (const auto& [x, s] : bindings_)
      if (!s.is_mono()) return false;
    return true;
  }

  std::set<std::string> free_vars() const {
    std::set<std::string> out;
    for (const auto& [x, s] : bindings_) {
      auto f = s.free_vars();
      out.insert(f.begin(), f.end());
    }
    return out;
  }

  friend bool operator==(const TypeEnv& a, const TypeEnv& b) {
    if (a.bindings_.size() != b.bindings_.size()) return false;
    auto i = a.bindings_.begin();
    auto j = b.bindings_.begin();
    for (; i != a.bindings_.end(); ++i, ++j) {
      if (i->first != j->first) return false;
      if (!scheme_alpha_equal(i->second, j->second)) return false;
    }
    return true;
  }

 private:
  std::map<std::string, TypeScheme> bindings_;
};

inline std::set<std::string> free_type_vars(const TypeEnv& e) { return e.free_vars(); }

// ---------------------------------------------------------------------------
// Expressions: x | c | \x. e | e e | rec{x = e} | let x = e in e

class Expr {
 public:
  enum class Kind { Var, Const, Lam, App, Rec, Let };

  static Expr var(std::string x, SourceLoc loc = {}) { return mk(Kind::Var, std::move(x), {}, loc); }
  static Expr constant(std::string c, SourceLoc loc = {}) {
    return mk(Kind::Const, std::move(c), {}, loc);
  }
  static Expr lam(std::string binder, Expr body, SourceLoc loc = {}) {
    return mk(Kind::Lam, std::move(binder), {std::move(body)}, loc);
  }
  static Expr app(Expr fn, Expr arg, SourceLoc loc = {}) {
    return mk(Kind::App, {}, {std::move(fn), std::move(arg)}, loc);
  }
  static Expr rec(std::string binder, Expr body, SourceLoc loc = {}) {
    return mk(Kind::Rec, std::move(binder), {std::move(body)}, loc);
  }
  static Expr let(std::string binder, Expr bound, Expr body, SourceLoc loc = {}) {
    return mk(Kind::Let, std::move(binder), {std::move(bound), std::move(body)}, loc);
  }

  Kind kind() const { return n_->k; }
  const std::string& name() const { return n_->name; }  // Var/Const name or binder
  SourceLoc loc() const { return n_->loc; }

  // Lam/Rec body; Let bound term; App function.
  Expr child0() const { return Expr(n_->kids[0]); }
  // App argument; Let body.
  Expr child1() const { return Expr(n_->kids[1]); }

  Expr fn() const { assert(kind() == Kind::App); return child0(); }
  Expr arg() const { assert(kind() == Kind::App); return child1(); }
  Expr body() const {
    assert(kind() == Kind::Lam || kind() == Kind::Rec);
    return child0();
  }
  Expr bound() const { assert(kind() == Kind::Let); return child0(); }
  Expr let_body() const { assert(kind() == Kind::Let); return child1(); }

  size_t num_children() const { return n_->kids.size(); }

  bool contains_let() const {
    if (kind() == Kind::Let) return true;
    for (const auto& k : n_->kids)
      if (Expr(k).contains_let()) return true;
    return false;
  }
  bool contains_rec() const {
    if (kind() == Kind::Rec) return true;
    for (const auto& k : n_->kids)
      if (Expr(k).contains_rec()) return true;
    return false;
  }

  size_t size() const {
    size_t s = 1;
    for (const auto& k : n_->kids) s += Expr(k).size();
    return s;
  }

  // Syntactic equality (binder names included).
  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.n_ == b.n_) return true;
    if (a.n_->k != b.n_->k || a.n_->name != b.n_->name) return false;
    if (a.n_->kids.size() != b.n_->kids.size()) return false;
    for (size_t i = 0; i < a.n_->kids.size(); ++i)
      if (!(Expr(a.n_->kids[i]) == Expr(b.n_->kids[i]))) return false;
    return true;
  }
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  struct Node {
    Kind k;
    std::string name;
    std::vector<std::shared_ptr<const Node>> kids;
    SourceLoc loc;
  };
  explicit Expr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
  static Expr mk(Kind k, std::string name, std::vector<Expr> kids, SourceLoc loc) {
    std::vector<std::shared_ptr<const Node>> ks;
    ks.reserve(kids.size());
    for (auto& e : kids) ks.push_back(e.n_);
    return Expr(std::make_shared<const Node>(Node{k, std::move(name), std::move(ks), loc}));
  }
  std::shared_ptr<const Node> n_;
};

inline void collect_free_vars(const Expr& e, std::set<std::string>& bound,
                              std::set<std::string>& out) {
  switch (e.kind()) {
    case Expr::Kind::Var:
      if (!bound.count(e.name())) out.insert(e.name());
      return;
    case Expr::Kind::Const: return;
    case Expr::Kind::Lam:
    case Expr::Kind::Rec: {
      bool inserted = bound.insert(e.name()).second;
      collect_free_vars(e.body(), bound, out);
      if (inserted) bound.erase(e.name());
      return;
    }
    case Expr::Kind::App:
      collect_free_vars(e.fn(), bound, out);
      collect_free_vars(e.arg(), bound, out);
      return;
    case Expr::Kind::Let: {
      collect_free_vars(e.bound(), bound, out);
      bool inserted = bound.insert(e.name()).second;
      collect_free_vars(e.let_body(), bound, out);
      if (inserted) bound.erase(e.name());
      return;
    }
  }
}

inline std::set<std::string> free_vars(const Expr& e) {
  std::set<std::string> bound, out;
  collect_free_vars(e, bound, out);
  return out;
}

// Alpha-equivalence via positional binder identification.
inline bool alpha_equal_impl(const Expr& a, const Expr& b, std::map<std::string, int>& da,
                             std::map<std::string, int>& db, int depth) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expr::Kind::Const: return a.name() == b.name();
    case Expr::Kind::Var: {
      auto i = da.find(a.name());
      auto j = db.find(b.name());
      if ((i == da.end()) != (j == db.end())) return false;
      if (i == da.end()) return a.name() == b.name();  // both free
      return i->second == j->second;
    }
    case Expr::Kind::Lam:
    case Expr::Kind::Rec: {
      auto sa = da.find(a.name()) != da.end() ? std::optional<int>(da[a.name()]) : std::nullopt;
      auto sb = db.find(b.name()) != db.end() ? std::optional<int>(db[b.name()]) : std::nullopt;
      da[a.name()] = depth;
      db[b.name()] = depth;
      bool ok = alpha_equal_impl(a.body(), b.body(), da, db, depth + 1);
      if (sa) da[a.name()] = *sa; else da.erase(a.name());
      if (sb) db[b.name()] = *sb; else db.erase(b.name());
      return ok;
    }
    case Expr::Kind::App:
      return alpha_equal_impl(a.fn(), b.fn(), da, db, depth) &&
             alpha_equal_impl(a.arg(), b.arg(), da, db, depth);
    case Expr::Kind::Let: {
      if (!alpha_equal_impl(a.bound(), b.bound(), da, db, depth)) return false;
      auto sa = da.find(a.name()) != da.end() ? std::optional<int>(da[a.name()]) : std::nullopt;
      auto sb = db.find(b.name()) != db.end() ? std::optional<int>(db[b.name()]) : std::nullopt;
      da[a.name()] = depth;
      db[b.name()] = depth;
      bool ok = alpha_equal_impl(a.let_body(), b.let_body(), da, db, depth + 1);
      if (sa) da[a.name()] = *sa; else da.erase(a.name());
      if (sb) db[b.name()] = *sb; else db.erase(b.name());
      return ok;
    }
  }
  return false;
}

inline bool alpha_equal(const Expr& a, const Expr& b) {
  std::map<std::string, int> da, db;
  return alpha_equal_impl(a, b, da, db, 0);
}

// ---------------------------------------------------------------------------
// Built-in constants. Any nonnegative decimal literal is a constant of type
// int; the named built-ins carry the generic types below and cannot be
// overridden by a prelude.

inline bool is_int_literal(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

class ConstTable {
 public:
  static const ConstTable& builtins() {
    static const ConstTable t = make_builtins();
    return t;
  }

  std::optional<Type> lookup(const std::string& name) const {
    if (is_int_literal(name)) return Type::integer();
    auto it = entries_.find(name);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }
  bool known(const std::string& name) const { return lookup(name).has_value(); }

  // Prelude extension; built-ins win. Returns false when the name is reserved.
  bool add(const std::string& name, Type ty) {
    if (builtins().entries_.count(name) || is_int_literal(name)) return false;
    entries_[name] = std::move(ty);
    return true;
  }

  const std::map<std::string, Type>& entries() const { return entries_; }

  std::set<std::string> all_type_vars() const {
    std::set<std::string> out;
    for (const auto& [n, t] : entries_) t.collect_vars(out);
    return out;
  }

 private:
  static ConstTable make_builtins() {
    ConstTable t;
    Type a = Type::var("a"), b = Type::var("b");
    t.entries_["pair"] = Type::arrow(a, Type::arrow(b, Type::prod(a, b)));
    t.entries_["fst"] = Type::arrow(Type::prod(a, b), a);
    t.entries_["snd"] = Type::arrow(Type::prod(a, b), b);
    t.entries_["nil"] = Type::list(a);
    t.entries_["cons"] = Type::arrow(a, Type::arrow(Type::list(a), Type::list(a)));
    t.entries_["hd"] = Type::arrow(Type::list(a), a);
    t.entries_["tl"] = Type::arrow(Type::list(a), Type::list(a));
    t.entries_["null"] = Type::arrow(Type::list(a), Type::boolean());
    t.entries_["ifc"] = Type::arrow(Type::boolean(), Type::arrow(a, Type::arrow(a, a)));
    return t;
  }
  std::map<std::string, Type> entries_;
};

inline std::optional<Type> const_type(const std::string& name,
                                      const ConstTable& table = ConstTable::builtins()) {
  return table.lookup(name);
}

// ---------------------------------------------------------------------------
// Canonical renaming: variables mapped to a, b, ..., z, a1, b1, ... in
// first-occurrence order. Two types are equal up to renaming iff their
// canonical forms coincide.

inline std::string canonical_var_name(size_t i) {
  std::string s(1, static_cast<char>('a' + i % 26));
  if (i >= 26) s += std::to_string(i / 26);
  return s;
}

inline Type rename_vars(const Type& t, const std::map<std::string, std::string>& m) {
  switch (t.kind()) {
    case Type::Kind::Var: {
      auto it = m.find(t.name());
      return it == m.end() ? t : Type::var(it->second);
    }
    case Type::Kind::Arrow: return Type::arrow(rename_vars(t.left(), m), rename_vars(t.right(), m));
    case Type::Kind::Prod: return Type::prod(rename_vars(t.left(), m), rename_vars(t.right(), m));
    case Type::Kind::List: return Type::list(rename_vars(t.left(), m));
    default: return t;
  }
}

inline Type canonical_rename(const Type& t) {
  std::map<std::string, std::string> m;
  size_t next = 0;
  for (const auto& v : t.vars_in_order()) m[v] = canonical_var_name(next++);
  return rename_vars(t, m);
}

inline bool equal_up_to_renaming(const Type& a, const Type& b) {
  return canonical_rename(a) == canonical_rename(b);
}

}  // namespace br

#endif  // BR_SYNTAX_HPP
