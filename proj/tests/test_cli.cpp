#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

namespace {

struct RunResult {
  int exit_code;
  std::string out;
};

RunResult run(const std::string& args) {
  std::string cmd = std::string(BR_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  std::array<char, 4096> buf;
  while (size_t n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  int status = pclose(p);
  return {WEXITSTATUS(status), out};
}

std::string corpus(const std::string& name) { return std::string(BR_CORPUS_DIR) + "/" + name; }

std::string write_temp(const std::string& name, const std::string& content) {
  std::string path = "/tmp/br_cli_" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("cli: infer on the corpus") {
  auto db = run("infer " + corpus("db.br"));
  CHECK(db.exit_code == 0);
  CHECK(db.out == "'a list -> 'a list\n");

  auto db2 = run("infer " + corpus("db2.br"));
  CHECK(db2.exit_code == 0);
  CHECK(db2.out == "('a list -> 'b) -> 'a list -> 'b\n");

  auto neg = run("infer " + corpus("db3prime.br"));
  CHECK(neg.exit_code == 1);
  CHECK(neg.out.find("untypable") != std::string::npos);

  auto mono = run("infer " + corpus("db2.br") + " --mode mono");
  CHECK(mono.exit_code == 1);

  auto bad = run("infer /nonexistent.br");
  CHECK(bad.exit_code == 2);
}

TEST_CASE("cli: every corpus building block is covered") {
  auto e0 = run("infer " + corpus("e0.br"));
  CHECK(e0.exit_code == 0);
  CHECK(e0.out == "int list\n");
  // e2 and e3 are open bodies: their recursion variables are free
  auto e2 = run("infer " + corpus("e2.br"));
  CHECK(e2.exit_code == 1);
  CHECK(e2.out.find("unbound-variable 'f2'") != std::string::npos);
  auto e3 = run("infer " + corpus("e3.br"));
  CHECK(e3.exit_code == 1);
  auto db3 = run("infer " + corpus("db3.br"));
  CHECK(db3.out == "('a list -> 'b) -> 'a list -> 'b\n");
  auto s1 = run("encode-sup " + corpus("sup1.sup"));
  CHECK(s1.exit_code == 0);
}

TEST_CASE("cli: check") {
  CHECK(run("check " + corpus("db2.br") +
            " --type \"('b list -> 'b list) -> 'b list -> 'b list\" --mode br")
            .exit_code == 0);
  CHECK(run("check " + corpus("db2.br") + " --type \"int -> int\" --mode br").exit_code == 1);
}

TEST_CASE("cli: solve-sup") {
  auto solved = run("solve-sup " + corpus("uniform1.sup"));
  CHECK(solved.exit_code == 0);
  CHECK(solved.out == "{ 'a := int, 'b := int }\n");

  auto nos = run("solve-sup " + corpus("unsolvable.sup"));
  CHECK(nos.exit_code == 1);
  CHECK(nos.out.find("no-semiunifier") != std::string::npos);

  auto empty = run("solve-sup " + corpus("empty.sup"));
  CHECK(empty.exit_code == 0);
  CHECK(empty.out == "{}\n");

  std::string two = write_temp("two.sup", "leq:\n'a <= 'b\n'c <= 'd\n");
  CHECK(run("solve-sup " + two).exit_code == 2);

  // an exhausted step budget is reported apart from unsolvability
  auto tight = run("solve-sup " + corpus("uniform1.sup") + " --step-budget 1");
  CHECK(tight.exit_code == 3);
  CHECK(tight.out.find("budget-exceeded") != std::string::npos);
}

TEST_CASE("cli: emit-sup") {
  auto e = run("emit-sup " + corpus("db4.br"));
  CHECK(e.exit_code == 0);
  CHECK(e.out.find("inequations: 4") != std::string::npos);
  std::string idf = write_temp("id.br", "\\x. x\n");
  auto z = run("emit-sup " + idf);
  CHECK(z.exit_code == 0);
  CHECK(z.out.find("inequations: 0") != std::string::npos);
  std::string lf = write_temp("let.br", "let x = 0 in x\n");
  CHECK(run("emit-sup " + lf).exit_code == 2);
}

TEST_CASE("cli: encode-sup") {
  auto r = run("encode-sup " + corpus("sup1.sup"));
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("\\y. pair (y rec{f = ") == 0);
}

TEST_CASE("cli: check-derivation") {
  CHECK(run("check-derivation " + corpus("let/pair_inst.deriv") + " --system br-let")
            .exit_code == 0);
  CHECK(run("check-derivation " + corpus("db2.deriv") + " --system brni").exit_code == 0);
  CHECK(run("check-derivation " + corpus("db2_ex1.deriv") + " --system br").exit_code == 0);
  auto r = run("check-derivation " + corpus("db2_ex1.deriv") + " --system brni");
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("rule-violation") != std::string::npos);
}

TEST_CASE("cli: prelude and machine output stability") {
  std::string f = write_temp("plus.br", "plus 1 2\n");
  auto no_prelude = run("infer " + f);
  CHECK(no_prelude.exit_code == 1);  // plus is a free variable without the prelude
  auto with = run("infer " + f + " --prelude " + corpus("prelude.txt"));
  CHECK(with.exit_code == 0);
  CHECK(with.out == "int\n");

  auto a = run("infer " + corpus("db4.br") + " --machine --fresh-seed q");
  auto b = run("infer " + corpus("db4.br") + " --machine --fresh-seed q");
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("\"trace\"") != std::string::npos);
  CHECK(a.out.find("\"residual\"") != std::string::npos);
}

TEST_CASE("cli: faithful sentinel mode") {
  std::string f = write_temp("unbound.br", "y\n");
  auto plain = run("infer " + f);
  CHECK(plain.exit_code == 1);
  CHECK(plain.out.find("unbound-variable") != std::string::npos);
  auto faithful = run("infer " + f + " --faithful-sentinel --machine");
  CHECK(faithful.exit_code == 1);
  CHECK(faithful.out.find("bool") != std::string::npos);
  CHECK(faithful.out.find("unbound") == std::string::npos);
  // recursion failures also collapse to the sentinel and keep running
  auto rec = run("infer " + corpus("db3prime.br") + " --faithful-sentinel");
  CHECK(rec.exit_code == 1);
  CHECK(rec.out.find("untypable") != std::string::npos);
}
