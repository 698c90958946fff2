#include "common.hpp"

using namespace testsupport;

namespace {

StdlibMatchSemantics semantics() {
  StdlibMatchSemantics sem;
  for (const ManifestClass &c : stdlib_manifest().classes)
    sem.add_class(stdenv()->lookup(SymbolId::intern(c.name))->klass);
  return sem;
}

OracleResult oracle(const ProbeMatch &pm, const Thing &subject) {
  StdlibMatchSemantics sem = semantics();
  return oracle_match(pm.match->clauses, subject, sem);
}

const Binding &matcher(const char *name) {
  return *stdenv()->lookup(SymbolId::intern(name));
}

} // namespace

TEST_SUITE("normcheck") {

TEST_CASE("things compare by identity") {
  using namespace things;
  Thing a = identifier("x"), b = identifier("x");
  CHECK(a == a);
  CHECK_FALSE(a == b);
  CHECK(num(3) == num(3));
  CHECK(cleared(CType::value).cleared());
  CHECK(cleared(CType::long_) == num(0));
  CHECK_FALSE(boxed_integer(1).cleared());
}

TEST_CASE("oracle: clauses in order, first match wins") {
  ProbeMatch pm = compile_probe("(defun probe (v :long n) (match n (?(isdivisible 2 ?a) a) "
                                "(?(isdivisible 3 ?b) b) (?_ 0)))",
                                stdenv());
  OracleResult r = oracle(pm, things::num(6));
  CHECK(r.clause == 0);
  CHECK(r.bindings.at(SymbolId::intern("a")).num == 3);
  CHECK(oracle(pm, things::num(9)).clause == 1);
  CHECK(oracle(pm, things::num(7)).clause == 2);
}

TEST_CASE("oracle: repeated variable is an identity test") {
  ProbeMatch pm = compile_probe("(defun probe (v :hstmt s) (match s (?(assign_single ?v ?v) 1)))",
                                stdenv());
  Thing x = things::identifier("x");
  CHECK(oracle(pm, things::stmt("assign_single", {x, x})).clause == 0);
  CHECK_FALSE(oracle(pm, things::stmt("assign_single", {x, things::identifier("x")})).clause);
  CHECK_FALSE(oracle(pm, things::stmt("nop")).clause);
}

TEST_CASE("oracle: disjunctions backtrack") {
  ProbeMatch pm = compile_probe(
      "(defun probe (v :long n)\n"
      "  (match n (?(and ?(or ?(isdivisible 2 ?_) ?(isdivisible 3 ?_)) ?(isbiggereven 10 ?h)) h)\n"
      "           (?_ 0)))",
      stdenv());
  CHECK(oracle(pm, things::num(12)).clause == 0);
  CHECK(oracle(pm, things::num(12)).bindings.at(SymbolId::intern("h")).num == 6);
  CHECK(oracle(pm, things::num(9)).clause == 1);
  CHECK(oracle(pm, things::num(4)).clause == 1);
}

TEST_CASE("semantics mirror the matcher templates") {
  StdlibMatchSemantics sem = semantics();
  std::vector<Thing> out;
  Thing id = things::identifier("abc");
  CHECK(sem.test(matcher("node_identifier"), id, {}, out));
  std::vector<Thing> f = sem.fill(matcher("node_identifier"), id, {});
  REQUIRE(f.size() == 1);
  CHECK(f[0].ref->text == "abc");
  CHECK_FALSE(sem.test(matcher("node_identifier"), things::integer_cst(1), {}, out));
  CHECK_FALSE(sem.test(matcher("node_identifier"), things::cleared(CType::hnode), {}, out));

  out.clear();
  CHECK(sem.test(matcher("isbiggereven"), things::num(20), {things::num(10)}, out));
  REQUIRE(out.size() == 1);
  CHECK(out[0].num == 10);
  out.clear();
  CHECK_FALSE(sem.test(matcher("isbiggereven"), things::num(8), {things::num(10)}, out));
  CHECK_FALSE(sem.test(matcher("isbiggereven"), things::num(21), {things::num(10)}, out));

  CHECK(sem.test(matcher("integerbox_of"), things::boxed_integer(5), {}, out));
  CHECK_FALSE(sem.test(matcher("integerbox_of"), things::boxed_string("5"), {}, out));
}

TEST_CASE("class membership follows the hierarchy") {
  StdlibMatchSemantics sem = semantics();
  const ClassInfo &named = *stdenv()->lookup(SymbolId::intern("class_named"))->klass;
  const ClassInfo &symbol = *stdenv()->lookup(SymbolId::intern("class_symbol"))->klass;
  Thing kw = things::object("class_keyword", {things::boxed_string("k"), things::cleared(CType::value)});
  CHECK(sem.is_a(kw, named));
  CHECK(sem.is_a(kw, symbol));
  Thing n = things::object("class_named", {things::boxed_string("k")});
  CHECK_FALSE(sem.is_a(n, symbol));
  CHECK_FALSE(sem.is_a(things::cleared(CType::value), named));
  CHECK_FALSE(sem.is_a(things::boxed_integer(1), named));
}

TEST_CASE("an unknown matcher is refused") {
  auto m = expand_src("(defcmatcher odd_one (:long n) () st #{($n) & 1}#)\n");
  BindingPtr b = m.scope->lookup_local(SymbolId::intern("odd_one"));
  REQUIRE(b);
  StdlibMatchSemantics sem = semantics();
  std::vector<Thing> out;
  CHECK_THROWS_AS(sem.test(*b, things::num(1), {}, out), std::logic_error);
}

TEST_CASE("generated cases compile and the oracle decides them") {
  std::mt19937_64 rng(1);
  int matched = 0;
  for (int i = 0; i < 200; ++i) {
    MatchCase c = random_match_case(rng, 3);
    CAPTURE(c.source);
    ProbeMatch pm = compile_probe(c.source, stdenv());
    REQUIRE(pm.match);
    CHECK(pm.match->subject->ctype == c.subject_ctype);
    OracleResult r = oracle(pm, c.subject);
    if (r.clause) {
      ++matched;
      for (const VarPtr &v : pm.match->clauses[*r.clause].vars)
        CHECK(r.bindings.count(v->name));
    }
  }
  CHECK(matched > 20);
}

TEST_CASE("generation is deterministic for a seed") {
  std::mt19937_64 a(5), b(5);
  for (int i = 0; i < 20; ++i)
    CHECK(random_match_case(a).source == random_match_case(b).source);
}

TEST_CASE("normalized stdlib is in A-normal form") {
  Config cfg;
  register_stdlib_macros();
  ExpandedModule em = expand_stdlib(cfg.effective_stdlib_dir());
  ModuleUnit mu = normalize_module(std::move(em));
  CHECK(mu.routines.size() > 10);
  for (const RoutinePtr &r : mu.routines) {
    auto bad = anf_violations(*r);
    CHECK_MESSAGE(bad.empty(), (bad.empty() ? "" : bad[0]));
  }
}

} // TEST_SUITE
