#include "common.hpp"

using namespace testsupport;

namespace {

template <class F> const F *first_form(const std::vector<AstPtr> &body) {
  for (const AstPtr &a : body)
    if (a->is<F>())
      return &a->as<F>();
  return nullptr;
}

const form::DefFunction *defun_named(const ExpandedModule &m, const char *name) {
  for (const AstPtr &a : m.start->body)
    if (a->is<form::DefFunction>() && a->as<form::DefFunction>().routine->name.name() == name)
      return &a->as<form::DefFunction>();
  return nullptr;
}

} // namespace

TEST_SUITE("expander") {

TEST_CASE("primitive definition and use") {
  auto m = expand_src("(defprimitive twice (:long n) :long #{(2*($n))}#)\n"
                      "(defun f (v :long k) (twice k))");
  BindingPtr b = m.scope->lookup_local(SymbolId::intern("twice"));
  REQUIRE(b);
  CHECK(b->kind == BindingKind::primitive);
  CHECK(b->primitive->result == CType::long_);
  const auto *f = defun_named(m, "f");
  REQUIRE(f);
  REQUIRE(f->routine->body.size() == 1);
  CHECK(f->routine->body[0]->is<form::PrimitiveCall>());
}

TEST_CASE("ctype keyword carries over following formals") {
  FormalList fl = parse_formals(read_unit("(a :long b c :value d)", "x")[0]);
  REQUIRE(fl.size() == 4);
  CHECK(fl[0].ctype == CType::value);
  CHECK(fl[1].ctype == CType::long_);
  CHECK(fl[2].ctype == CType::long_);
  CHECK(fl[3].ctype == CType::value);
}

TEST_CASE("class fields are laid out after inherited ones") {
  auto m = expand_src("(defclass class_point :super class_named :fields (px py))");
  BindingPtr b = m.scope->lookup_local(SymbolId::intern("class_point"));
  REQUIRE(b);
  REQUIRE(b->klass);
  CHECK(b->klass->field_count() == 3);
  BindingPtr py = m.scope->lookup(SymbolId::intern("py"));
  REQUIRE(py);
  CHECK(py->field->index == 2);
  BindingPtr named = m.scope->lookup(SymbolId::intern("class_named"));
  CHECK(b->klass->is_subclass_of(named->klass.get()));
}

TEST_CASE("only exported names reach the module environment") {
  auto m = expand_src("(defun shown (v) v)\n(defun hidden (v) v)\n(export_values shown)");
  CHECK(m.env->lookup_local(SymbolId::intern("shown")));
  CHECK_FALSE(m.env->lookup_local(SymbolId::intern("hidden")));
  CHECK(m.scope->lookup_local(SymbolId::intern("hidden")));
}

TEST_CASE("imports come from the stdlib environment") {
  auto m = expand_src("(defun f (v) (list_reverse v))");
  bool found = false;
  for (const VarPtr &v : m.imports)
    found = found || v->import_name == "list_reverse";
  CHECK(found);
}

TEST_CASE("symbol references are case-insensitive") {
  auto m = expand_src("(defun Foo (v) v)\n(defun g (v) (FOO v))");
  CHECK(defun_named(m, "g"));
}

TEST_CASE("docstrings are kept") {
  auto m = expand_src("(defun f (v) :doc #{Returns $v.}# v)");
  const auto *f = defun_named(m, "f");
  REQUIRE(f);
  REQUIRE(f->routine->doc);
  CHECK(f->routine->doc->chunks.size() == 3);
  CHECK(f->routine->body.size() == 1);
}

TEST_CASE("host macros") {
  auto m = expand_src("(defun f (v) (when v (list_length v)))");
  const auto *f = defun_named(m, "f");
  REQUIRE(f);
  CHECK(f->routine->body[0]->is<form::If>());
}

TEST_CASE("hostif keeps the body for a matching version prefix") {
  ExpandOptions eo;
  eo.host_version = "4.5.1";
  auto run = [&](const char *prefix) {
    auto m = expand_unit(read_unit(std::string("(hostif \"") + prefix + "\" (debug_msg () \"x\"))",
                                   "t.melt"),
                         stdenv(), eo);
    const auto *h = first_form<form::HostIf>(m.start->body);
    REQUIRE(h);
    return h->selected;
  };
  CHECK(run("4.5"));
  CHECK_FALSE(run("4.6"));
}

TEST_CASE("pattern variables in first-occurrence order") {
  auto m = expand_src("(defun f (v :hstmt s) (match s (?(assign_single ?b ?a) 1) (?_ 0)))");
  const auto *f = defun_named(m, "f");
  REQUIRE(f);
  const auto *mt = first_form<form::Match>(f->routine->body);
  REQUIRE(mt);
  REQUIRE(mt->clauses.size() == 2);
  REQUIRE(mt->clauses[0].vars.size() == 2);
  CHECK(mt->clauses[0].vars[0]->name.name() == "b");
  CHECK(mt->clauses[0].vars[1]->name.name() == "a");
  CHECK(mt->clauses[1].vars.empty());
}

TEST_CASE("pattern macro expands to a disjunction") {
  auto m = expand_src("(defun f (v :cstring s) (match s (?(cstring_any_of \"a\" \"b\") 1) (?_ 0)))");
  const auto *mt = first_form<form::Match>(defun_named(m, "f")->routine->body);
  REQUIRE(mt);
  CHECK(mt->clauses[0].pattern->is<pat::Or>());
  CHECK(mt->clauses[0].pattern->as<pat::Or>().disjuncts.size() == 2);
}

TEST_CASE("expansion errors") {
  Phase ph = Phase::driver;
  CHECK(contains(compile_error("(defun f (v) (nosuch v))", &ph), "unbound function or operator nosuch"));
  CHECK(ph == Phase::expand);
  CHECK(contains(compile_error("(defun f (v) v)\n(defun f (v) v)"), "duplicate definition of f"));
  CHECK(contains(compile_error("(defun f (v) (defun g (w) w))"), "only at the top-level"));
  CHECK(contains(compile_error("(defun f (:long n) n)"), "first formal must be a value"));
  CHECK(contains(compile_error("(defun f (v :hstmt s) (match s (?(assign_single ?a) 1)))"),
                 "expects 0 input(s) and 2 sub-pattern(s)"));
  CHECK(contains(compile_error("(defun f (v) (match v (?(or ?a ?(nonnull)) 1)))"),
                 "every branch of a disjunctive pattern"));
  CHECK(contains(compile_error("(defcmatcher m (:hnode n) (:hnode o) st #{1}#)"),
                 "has outputs but no fill"));
  CHECK(contains(compile_error("(defprimitive p (v) :long #{$w}#)"), "references $w"));
  CHECK(contains(compile_error("(export_values nothing_here)"), "cannot export unbound name"));
  std::string d = compile_error("(defun f (v)\n  (progn\n    zz))");
  CHECK(contains(d, "t.melt:3:5"));
  CHECK(contains(d, "unbound variable zz"));
}

} // TEST_SUITE
