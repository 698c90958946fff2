#include "common.hpp"

#include "../support/dot_check.hpp"

#include <functional>
#include <set>

using namespace testsupport;

namespace {

std::set<int> reachable(const MatchGraph &g) {
  std::set<int> seen;
  std::vector<int> todo{g.entry};
  while (!todo.empty()) {
    int s = todo.back();
    todo.pop_back();
    if (s < 0 || !seen.insert(s).second)
      continue;
    const MatchStep &st = g.steps.at(s);
    if (st.kind == StepKind::test) {
      todo.push_back(st.then_step);
      todo.push_back(st.else_step);
    } else {
      todo.push_back(st.next);
    }
  }
  return seen;
}

bool acyclic(const MatchGraph &g) {
  std::vector<int> state(g.steps.size(), 0);
  std::function<bool(int)> visit = [&](int s) {
    if (s < 0)
      return true;
    if (state[s] == 1)
      return false;
    if (state[s] == 2)
      return true;
    state[s] = 1;
    const MatchStep &st = g.steps[s];
    bool ok = st.kind == StepKind::test ? visit(st.then_step) && visit(st.else_step)
                                        : visit(st.next);
    state[s] = 2;
    return ok;
  };
  return visit(g.entry);
}

// Every clause variable is bound on every path reaching its Success step.
bool vars_defined_on_all_paths(const MatchGraph &g) {
  std::set<std::pair<int, std::set<std::uint32_t>>> seen;
  std::function<bool(int, std::set<std::uint32_t>)> walk = [&](int s,
                                                                std::set<std::uint32_t> bound) {
    if (s < 0 || !seen.insert({s, bound}).second)
      return true;
    const MatchStep &st = g.steps[s];
    switch (st.kind) {
    case StepKind::success:
      for (const VarPtr &v : g.clause_vars[st.clause])
        if (!bound.count(v->uid))
          return false;
      return true;
    case StepKind::fail:
      return true;
    case StepKind::test:
      return walk(st.then_step, bound) && walk(st.else_step, bound);
    default:
      if (st.kind == StepKind::fill && st.fill == FillKind::bind)
        bound.insert(st.var->uid);
      return walk(st.next, bound);
    }
  };
  return walk(g.entry, {});
}

StdlibMatchSemantics semantics() {
  StdlibMatchSemantics sem;
  for (const ManifestClass &c : stdlib_manifest().classes)
    sem.add_class(stdenv()->lookup(SymbolId::intern(c.name))->klass);
  return sem;
}

const char *two_clause =
    "(defun f (v x) x)\n(defun g (v x) x)\n"
    "(defun probe (v)\n"
    "  (match v\n"
    "    (?(instance class_symbol :named_name ?synam) (f synam))\n"
    "    (?(instance class_container :container_value ?(and ?cval ?(integerbox_of ?_)))\n"
    "     (g cval))))\n";

const char *field_walk =
    "(defun probe (v :hnode tcurfield)\n"
    "  (match tcurfield\n"
    "    (?(node_field_decl\n"
    "        ?(node_identifier ?(cstring_same \"mcfr_varptr\"))\n"
    "        ?(node_array_type ?telemtype\n"
    "            ?(node_integer_type_bounded ?tindextype\n"
    "                ?(node_integer_cst 0)\n"
    "                ?(node_integer_cst ?lmax)\n"
    "                ?tsize)))\n"
    "     lmax)\n"
    "    (?_ 0)))\n";

} // namespace

TEST_SUITE("matchc") {

TEST_CASE("wildcard match is a single success") {
  ProbeMatch pm = compile_probe("(defun probe (v) (match v (?_ 1)))", stdenv());
  const MatchGraph &g = *pm.match->graph;
  REQUIRE(g.steps.size() == 1);
  CHECK(g.steps[g.entry].kind == StepKind::success);
  dotcheck::Summary sum;
  CHECK(dotcheck::check(emit_dot(g), sum) == "");
  CHECK(sum.nodes.size() == 1);
  CHECK(sum.edges == 0);
}

TEST_CASE("non-linear variable: one fill, one identity test") {
  ProbeMatch pm = compile_probe("(defun probe (v :hstmt s) (match s (?(assign_single ?v ?v) 1) (?_ 0)))",
                                stdenv());
  const MatchGraph &g = *pm.match->graph;
  int binds = 0, identity = 0;
  for (const MatchStep &s : g.steps) {
    binds += s.kind == StepKind::fill && s.fill == FillKind::bind;
    identity += s.kind == StepKind::test && s.test == TestKind::identity;
  }
  CHECK(binds == 1);
  CHECK(identity == 1);

  StdlibMatchSemantics sem = semantics();
  Thing x = things::identifier("x");
  CHECK(interpret(g, things::stmt("assign_single", {x, x}), sem).clause == 0);
  CHECK(interpret(g, things::stmt("assign_single", {x, things::identifier("x")}), sem).clause == 1);
}

TEST_CASE("two clauses share the matched root") {
  ProbeMatch pm = compile_probe(two_clause, stdenv());
  const MatchGraph &g = *pm.match->graph;
  int class_tests = 0;
  for (const MatchStep &s : g.steps)
    if (s.kind == StepKind::test && s.test == TestKind::instance) {
      ++class_tests;
      CHECK(s.subject == 0);
    }
  CHECK(class_tests == 2);
  CHECK(g.data[0].role == DataRole::root);
  CHECK(g.count(StepKind::flag_conj) == 1);
  CHECK(g.count(StepKind::set_flag) == 2);

  StdlibMatchSemantics sem = semantics();
  Thing name = things::boxed_string("foo");
  MatchOutcome a = interpret(g, things::object("class_keyword", {name, things::cleared(CType::value)}), sem);
  CHECK(a.clause == 0);
  CHECK(a.bindings.at(SymbolId::intern("synam")) == name);
  Thing box = things::boxed_integer(3);
  CHECK(interpret(g, things::object("class_container", {box}), sem).clause == 1);
  CHECK_FALSE(interpret(g, things::object("class_container", {name}), sem).clause);
  CHECK_FALSE(interpret(g, things::cleared(CType::value), sem).clause);
}

TEST_CASE("deep host pattern") {
  ProbeMatch pm = compile_probe(field_walk, stdenv());
  const MatchGraph &g = *pm.match->graph;
  CHECK(g.steps.size() >= 15);
  CHECK(g.data.size() >= 10);
  CHECK(reachable(g).size() == g.steps.size());
  CHECK(acyclic(g));

  using namespace things;
  StdlibMatchSemantics sem = semantics();
  Thing range = node("integer_type", {integer_cst(0), integer_cst(7), integer_cst(8)});
  Thing arr = node("array_type", {identifier("mlt_val"), range});
  Thing fld = node("field_decl", {identifier("mcfr_varptr"), arr});
  MatchOutcome o = interpret(g, fld, sem);
  REQUIRE(o.clause == 0);
  CHECK(o.bindings.at(SymbolId::intern("lmax")).num == 7);
  CHECK(o.bindings.at(SymbolId::intern("tindextype")) == range);
  Thing other = node("field_decl", {identifier("mcfr_other"), arr});
  CHECK(interpret(g, other, sem).clause == 1);
  Thing nonzero = node("field_decl", {identifier("mcfr_varptr"),
                                      node("array_type", {identifier("t"),
                                                          node("integer_type", {integer_cst(1), integer_cst(7), integer_cst(8)})})});
  CHECK(interpret(g, nonzero, sem).clause == 1);
}

TEST_CASE("fun-matcher results feed sub-patterns") {
  ProbeMatch pm = compile_probe(
      "(defun probe (v :long n) (match n (?(isbiggereven 10 ?h) h) (?(isdivisible 3 ?q) q) (?_ 0)))",
      stdenv());
  const MatchGraph &g = *pm.match->graph;
  StdlibMatchSemantics sem = semantics();
  MatchOutcome a = interpret(g, things::num(24), sem);
  CHECK(a.clause == 0);
  CHECK(a.bindings.at(SymbolId::intern("h")).num == 12);
  MatchOutcome b = interpret(g, things::num(9), sem);
  CHECK(b.clause == 1);
  CHECK(b.bindings.at(SymbolId::intern("q")).num == 3);
  CHECK(interpret(g, things::num(8), sem).clause == 2);
}

TEST_CASE("graph invariants and sharing soundness on random matches") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 400; ++i) {
    MatchCase c = random_match_case(rng, 3);
    CAPTURE(c.source);
    ProbeMatch shared = compile_probe(c.source, stdenv());
    ProbeMatch plain = compile_probe(c.source, stdenv(), MatchCompileOptions{false});
    const MatchGraph &g = *shared.match->graph;
    CHECK(acyclic(g));
    CHECK(reachable(g).size() == g.steps.size());
    CHECK(vars_defined_on_all_paths(g));
    for (const MatchStep &s : g.steps)
      if (s.kind == StepKind::test)
        CHECK((s.then_step >= 0 && s.else_step >= 0));
    StdlibMatchSemantics sem = semantics();
    MatchOutcome a = interpret(g, c.subject, sem);
    MatchOutcome b = interpret(*plain.match->graph, c.subject, sem);
    CHECK(a.clause == b.clause);
    CHECK(a.bindings == b.bindings);
    CHECK(a.steps_run <= b.steps_run);
  }
}

TEST_CASE("dot output is deterministic and parses") {
  ProbeMatch a = compile_probe(field_walk, stdenv());
  ProbeMatch b = compile_probe(field_walk, stdenv());
  std::string da = emit_dot(*a.match->graph, "m"), db = emit_dot(*b.match->graph, "m");
  CHECK(da == db);
  dotcheck::Summary sum;
  CHECK(dotcheck::check(da, sum) == "");
  CHECK(sum.nodes.size() >= a.match->graph->steps.size());
}

TEST_CASE("every match of a module gets a graph") {
  ModuleUnit mu = normalize_src(std::string(two_clause) + "(defun other (v) (match v (?(nonnull) 1) (?_ 2)))");
  compile_matches(mu);
  CHECK(mu.match_graphs.size() == 2);
}

TEST_CASE("match errors") {
  CHECK(contains(compile_error("(defun f (v) (match v (?(assign_single ?a ?b) 1)))"), ":hstmt"));
  CHECK(contains(compile_error("(defun f (v :long n) (match n (?(instance class_named) 1)))"),
                 "instance pattern"));
}

} // TEST_SUITE
