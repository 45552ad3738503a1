// Command-line front end for the BR type inference toolkit.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "br/brni.hpp"
#include "br/derivation.hpp"
#include "br/infer.hpp"
#include "br/parse.hpp"
#include "br/print.hpp"
#include "br/semiunify.hpp"

using json = nlohmann::json;
using namespace br;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;   // untypable / no-semiunifier / violation
constexpr int kExitUsage = 2;      // parse or configuration error
constexpr int kExitBudget = 3;     // solver budget exceeded

struct Options {
  std::string mode = "br-let";
  bool machine = false;
  std::string prelude;
  std::string fresh_seed = "t";
  bool faithful_sentinel = false;
  int step_budget = kDefaultStepBudget;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Mode parse_mode(const std::string& m) {
  if (m == "br") return Mode::Br;
  if (m == "br-let") return Mode::BrLet;
  if (m == "mono") return Mode::Mono;
  throw std::runtime_error("unknown mode '" + m + "' (expected br, br-let or mono)");
}

System parse_system(const std::string& s) {
  if (s == "br") return System::Br;
  if (s == "br-let") return System::BrLet;
  if (s == "brni") return System::Brni;
  throw std::runtime_error("unknown system '" + s + "' (expected br, br-let or brni)");
}

ConstTable load_table(const Options& opt) {
  if (opt.prelude.empty()) return ConstTable::builtins();
  return parse_prelude(slurp(opt.prelude));
}

json subst_json(const Subst& s) {
  json out = json::object();
  for (const auto& [v, t] : s.mapping()) out["'" + v] = print_type(t);
  return out;
}

json equations_json(const UnifProblem& p) {
  json out = json::array();
  for (const auto& eq : p) out.push_back({{"lhs", print_type(eq.lhs)}, {"rhs", print_type(eq.rhs)}});
  return out;
}

json failure_json(const InferFailure& f) {
  json out{{"kind", to_string(f.kind)}, {"detail", f.detail}};
  if (!f.name.empty()) out["name"] = f.name;
  if (f.loc.known()) {
    out["line"] = f.loc.line;
    out["col"] = f.loc.col;
  }
  return out;
}

std::string failure_text(const InferFailure& f) {
  std::string s = to_string(f.kind);
  if (!f.name.empty()) s += " '" + f.name + "'";
  if (f.loc.known()) s += " at " + std::to_string(f.loc.line) + ":" + std::to_string(f.loc.col);
  if (!f.detail.empty()) s += " (" + f.detail + ")";
  return s;
}

int cmd_infer(const std::string& file, const Options& opt) {
  ConstTable table = load_table(opt);
  Expr e = parse_expr(slurp(file), table);
  Mode mode = parse_mode(opt.mode);
  InferOptions iopts{opt.faithful_sentinel, opt.step_budget};

  TypingProblem p{{}, e, Type::integer()};
  FreshSupply fresh = make_session_supply(p, table, opt.fresh_seed);
  p.goal = fresh.fresh_type();
  auto traced = algo_E(p, fresh, mode, table, iopts);

  if (auto* f = std::get_if<InferFailure>(&traced)) {
    bool usage = f->kind == InferFailure::Kind::InvalidProblem ||
                 f->kind == InferFailure::Kind::BudgetExceeded;
    if (opt.machine) {
      std::cout << json{{"command", "infer"}, {"mode", opt.mode}, {"ok", false},
                        {"error", failure_json(*f)}}
                       .dump(2)
                << "\n";
    } else {
      std::cout << "untypable: " << failure_text(*f) << "\n";
    }
    return usage ? kExitUsage : kExitNegative;
  }

  const InferResult& res = std::get<InferResult>(traced);
  auto solved = unify(res.residual);
  json trace = json::array();
  for (const auto& r : res.trace)
    trace.push_back({{"binder", r.binder},
                     {"body_type", print_type(r.body_type)},
                     {"call_type", print_type(r.call_type)},
                     {"subst", subst_json(r.solved)}});

  if (auto* uf = std::get_if<UnifyFailure>(&solved)) {
    InferFailure f{uf->kind == UnifyFailure::Kind::Occurs ? InferFailure::Kind::Occurs
                                                          : InferFailure::Kind::UnificationClash,
                   "", uf->loc, print_type(uf->lhs) + " vs " + print_type(uf->rhs)};
    if (opt.machine) {
      std::cout << json{{"command", "infer"},
                        {"mode", opt.mode},
                        {"ok", false},
                        {"error", failure_json(f)},
                        {"residual", equations_json(res.residual)},
                        {"partial", subst_json(res.partial)},
                        {"trace", trace}}
                       .dump(2)
                << "\n";
    } else {
      std::cout << "untypable: " << failure_text(f) << "\n";
    }
    return kExitNegative;
  }

  Type ty = canonical_rename(compose(std::get<Subst>(solved), res.partial)(p.goal));
  if (opt.machine) {
    std::cout << json{{"command", "infer"},
                      {"mode", opt.mode},
                      {"ok", true},
                      {"type", print_type(ty)},
                      {"residual", equations_json(res.residual)},
                      {"partial", subst_json(res.partial)},
                      {"trace", trace}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << print_type(ty) << "\n";
  }
  return kExitOk;
}

int cmd_check(const std::string& file, const std::string& type_text, const Options& opt) {
  ConstTable table = load_table(opt);
  Expr e = parse_expr(slurp(file), table);
  Type want = parse_type(type_text);
  Mode mode = parse_mode(opt.mode);
  auto r = principal_type(e, mode, table, InferOptions{opt.faithful_sentinel, opt.step_budget});
  if (auto* f = std::get_if<InferFailure>(&r)) {
    if (opt.machine)
      std::cout << json{{"command", "check"}, {"ok", false}, {"error", failure_json(*f)}}.dump(2)
                << "\n";
    else
      std::cout << "untypable: " << failure_text(*f) << "\n";
    return f->kind == InferFailure::Kind::InvalidProblem ? kExitUsage : kExitNegative;
  }
  Type principal = std::get<Type>(r);
  bool ok = match_types(principal, want).has_value();
  if (opt.machine)
    std::cout << json{{"command", "check"},
                      {"ok", ok},
                      {"principal", print_type(principal)},
                      {"checked", print_type(want)}}
                     .dump(2)
              << "\n";
  else
    std::cout << (ok ? "ok: " : "no: ") << print_type(want) << " (principal "
              << print_type(principal) << ")\n";
  return ok ? kExitOk : kExitNegative;
}

int cmd_solve_sup(const std::string& file, const Options& opt) {
  SupFile f = parse_sup_file(slurp(file));
  if (f.inequations.size() > 1) {
    std::cerr << "solve-sup handles at most one inequation (got "
              << f.inequations.size()
              << "); emit-sup output with several is diagnostic only\n";
    return kExitUsage;
  }
  SemiUnifProblem p;
  p.equations = f.equations;
  if (!f.inequations.empty()) p.inequation = f.inequations[0];
  FreshSupply fresh(opt.fresh_seed, p.free_vars());
  auto r = semi_unify(p, fresh, opt.step_budget);
  if (auto* fail = std::get_if<SemiUnifFailure>(&r)) {
    bool budget = fail->kind == SemiUnifFailure::Kind::BudgetExceeded;
    if (opt.machine)
      std::cout << json{{"command", "solve-sup"},
                        {"ok", false},
                        {"result", budget ? "budget-exceeded" : "no-semiunifier"},
                        {"detail", fail->detail}}
                       .dump(2)
                << "\n";
    else
      std::cout << (budget ? "budget-exceeded" : "no-semiunifier") << ": " << fail->detail << "\n";
    return budget ? kExitBudget : kExitNegative;
  }
  const Subst& s = std::get<Subst>(r);
  if (opt.machine)
    std::cout << json{{"command", "solve-sup"},
                      {"ok", true},
                      {"subst", subst_json(s)},
                      {"text", print_subst(s)}}
                     .dump(2)
              << "\n";
  else
    std::cout << print_subst(s) << "\n";
  return kExitOk;
}

int cmd_emit_sup(const std::string& file, const Options& opt) {
  ConstTable table = load_table(opt);
  Expr e = parse_expr(slurp(file), table);
  if (e.contains_let()) {
    std::cerr << "emit-sup is defined for BR terms only (no let)\n";
    return kExitUsage;
  }
  TypingProblem p{{}, e, Type::integer()};
  FreshSupply fresh = make_session_supply(p, table, opt.fresh_seed);
  p.goal = fresh.fresh_type();
  EmittedSUP sup = emit_sup(p, fresh, table);
  if (opt.machine) {
    json ineqs = json::array();
    for (const auto& [l, r] : sup.inequations)
      ineqs.push_back({{"lhs", print_type(l)}, {"rhs", print_type(r)}});
    std::cout << json{{"command", "emit-sup"},
                      {"equations", equations_json(sup.equations)},
                      {"inequations", ineqs},
                      {"count", sup.inequations.size()},
                      {"diagnostic", true}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << print_sup_file(sup.equations, sup.inequations);
    std::cout << "inequations: " << sup.inequations.size() << "\n";
  }
  return kExitOk;
}

int cmd_encode_sup(const std::string& file, const Options& opt) {
  SUPInstance inst = parse_sup_instance(slurp(file));
  Expr term = encode_sup(inst);
  if (opt.machine)
    std::cout << json{{"command", "encode-sup"}, {"term", print_expr(term)}}.dump(2) << "\n";
  else
    std::cout << print_expr(term) << "\n";
  return kExitOk;
}

int cmd_check_derivation(const std::string& file, const std::string& system_text,
                         const Options& opt) {
  ConstTable table = load_table(opt);
  DerivPtr d = parse_derivation(slurp(file), table);
  System sys = parse_system(system_text);
  auto v = check_derivation(*d, sys, table);
  if (opt.machine) {
    json out{{"command", "check-derivation"}, {"ok", !v.has_value()}};
    if (v) {
      out["path"] = v->path;
      out["reason"] = v->reason;
    } else {
      out["judgment"] = {{"env", print_env(d->env)},
                         {"expr", print_expr(d->expr)},
                         {"type", print_type(d->goal)}};
    }
    std::cout << out.dump(2) << "\n";
  } else if (v) {
    std::cout << "rule-violation at " << path_string(v->path) << ": " << v->reason << "\n";
  } else {
    std::cout << "ok: " << (d->env.empty() ? "" : print_env(d->env) + " ")
              << "|- " << print_expr(d->expr) << " : " << print_type(d->goal) << "\n";
  }
  return v ? kExitNegative : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"type inference for bimorphic recursion (BR, BR+let, BRNI tools)"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--mode", opt.mode, "typing mode: br, br-let or mono")
      ->default_val("br-let");
  app.add_flag("--machine", opt.machine, "machine-readable JSON output");
  app.add_option("--prelude", opt.prelude, "prelude file with extra constants (name : type)");
  app.add_option("--fresh-seed", opt.fresh_seed, "prefix for fresh type variables")
      ->default_val("t");
  app.add_flag("--faithful-sentinel", opt.faithful_sentinel,
               "report failures as the literal residual {bool = int}");
  app.add_option("--step-budget", opt.step_budget, "semi-unification step budget")
      ->default_val(kDefaultStepBudget)
      ->check(CLI::PositiveNumber);

  std::string infer_file;
  auto* infer = app.add_subcommand("infer", "infer the principal type of a term file");
  infer->fallthrough();
  infer->add_option("file", infer_file, "term file")->required();

  std::string check_file, check_type;
  auto* check = app.add_subcommand("check", "check that a term has a given type");
  check->fallthrough();
  check->add_option("file", check_file, "term file")->required();
  check->add_option("--type", check_type, "expected type")->required();

  std::string sup_file;
  auto* solve = app.add_subcommand("solve-sup", "solve a semi-unification problem file");
  solve->fallthrough();
  solve->add_option("file", sup_file, "problem file (eq:/leq: sections)")->required();

  std::string emit_file;
  auto* emit = app.add_subcommand("emit-sup", "emit the diagnostic semi-unification problem");
  emit->fallthrough();
  emit->add_option("file", emit_file, "term file")->required();

  std::string enc_file;
  auto* enc = app.add_subcommand("encode-sup", "encode a two-inequation instance as a BRNI term");
  enc->fallthrough();
  enc->add_option("file", enc_file, "instance file (two 'M <= N' lines)")->required();

  std::string deriv_file, deriv_system = "br";
  auto* chkd = app.add_subcommand("check-derivation", "check a derivation file");
  chkd->fallthrough();
  chkd->add_option("file", deriv_file, "derivation file")->required();
  chkd->add_option("--system", deriv_system, "br, br-let or brni")->default_val("br");

  CLI11_PARSE(app, argc, argv);

  try {
    if (infer->parsed()) return cmd_infer(infer_file, opt);
    if (check->parsed()) return cmd_check(check_file, check_type, opt);
    if (solve->parsed()) return cmd_solve_sup(sup_file, opt);
    if (emit->parsed()) return cmd_emit_sup(emit_file, opt);
    if (enc->parsed()) return cmd_encode_sup(enc_file, opt);
    if (chkd->parsed()) return cmd_check_derivation(deriv_file, deriv_system, opt);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
