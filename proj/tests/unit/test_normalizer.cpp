#include "common.hpp"

#include "../support/random_source.hpp"

using namespace testsupport;

TEST_SUITE("normalizer") {

TEST_CASE("nested primitive calls get one temporary each") {
  auto mu = normalize_src("(defun f (v :long x) (+i (negi x) 1))");
  const Routine *f = routine_named(mu, "f");
  REQUIRE(f);
  CHECK(f->temp_count == 2);
  CHECK(body_text(*f) == "(let ((:long %t0 (negi x)) (:long %t1 (+i %t0 1))) %t1)");
  int temps = 0;
  for (const VarPtr &v : f->slots)
    temps += v->role == VarRole::temp;
  CHECK(temps == 2);
}

TEST_CASE("atomic operands need no temporary, the routine result does") {
  auto mu = normalize_src("(defun f (v :long x) (+i x 1))\n(defun g (v :long x) x)");
  const Routine *f = routine_named(mu, "f");
  CHECK(f->temp_count == 1);
  CHECK(body_text(*f) == "(let ((:long %t0 (+i x 1))) %t0)");
  const Routine *g = routine_named(mu, "g");
  CHECK(g->temp_count == 0);
  CHECK(body_text(*g) == "x");
}

TEST_CASE("conditional forms are lowered to if") {
  auto mu = normalize_src("(defun f (v w) (or v w))\n"
                          "(defun g (v w) (and v w))\n"
                          "(defun h (v :long x) (cond ((<i x 0) 1) ((>i x 9) 2) (:else 3)))");
  for (const char *n : {"f", "g", "h"}) {
    const Routine *r = routine_named(mu, n);
    REQUIRE(r);
    CHECK(anf_violations(*r).empty());
    std::string b = body_text(*r);
    CHECK_FALSE(contains(b, "(or "));
    CHECK_FALSE(contains(b, "(and "));
    CHECK_FALSE(contains(b, "(cond "));
    CHECK(contains(b, "(if "));
  }
}

TEST_CASE("every node is typed") {
  auto mu = normalize_src("(defun f (v) (tuple (list v v) (box_long (get_int v))))");
  for (const RoutinePtr &r : mu.routines)
    CHECK(anf_violations(*r).empty());
  const Routine *f = routine_named(mu, "f");
  REQUIRE(f->body.size() == 1);
  CHECK(f->body[0]->ctype == CType::value);
}

TEST_CASE("branch unification") {
  CHECK(unify_ctypes({CType::long_, CType::long_}) == CType::long_);
  CHECK(unify_ctypes({CType::long_, CType::value}) == CType::void_);
  CHECK(unify_ctypes({}) == CType::void_);
}

TEST_CASE("random bodies are in A-normal form and normalization is idempotent") {
  ExprGen gen(7);
  for (int i = 0; i < 300; ++i) {
    std::string src = gen.module(1 + gen.pick(4));
    CAPTURE(src);
    ModuleUnit mu = normalize_src(src);
    for (const RoutinePtr &r : mu.routines) {
      auto bad = anf_violations(*r);
      CHECK_MESSAGE(bad.empty(), (bad.empty() ? "" : bad[0]));
      for (const AstPtr &a : r->body)
        CHECK(to_string(*normalize(a, *r, a->ctype)) == to_string(*a));
    }
  }
}

TEST_CASE("the scanner reports non-atomic operands") {
  auto mu = normalize_src("(defun f (v :long x) (+i (negi x) 1))");
  const Routine *f = routine_named(mu, "f");
  // rebuild (+i (negi x) 1) by hand
  const auto &let = f->body[0]->as<form::Let>();
  AstPtr inner = let.bindings[0].init;
  AstPtr outer = let.bindings[1].init;
  auto call = outer->as<form::PrimitiveCall>();
  call.args[0] = inner;
  Ast broken{outer->where, call, CType::long_, true};
  auto bad = anf_violations(broken);
  REQUIRE(bad.size() == 1);
  CHECK(contains(bad[0], "not atomic"));
  Ast untyped{outer->where, outer->form, CType::long_, false};
  CHECK(contains(anf_violations(untyped).at(0), "untyped"));
}

TEST_CASE("normalization errors") {
  Phase ph = Phase::driver;
  CHECK(contains(compile_error("(defun f (v) (+i v 1))", &ph), "expects :long"));
  CHECK(ph == Phase::normalize);
  CHECK(contains(compile_error("(defun f (v :long x) (tuple x))"), "c-type mismatch"));
  CHECK(contains(compile_error("(defun f (v) (list (outnewline)))"), "has no result (:void)"));
  CHECK(contains(compile_error("(defun f (v) (lambda (w) (setq v w)))"), "closed over"));
  CHECK(contains(compile_error("(defun f (v :long x) (setq x v))"), "c-type mismatch"));
}

} // TEST_SUITE
