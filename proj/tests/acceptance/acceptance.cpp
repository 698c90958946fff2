// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "meltlite/driver.hpp"
#include "meltlite/normcheck.hpp"
#include "meltlite/reader.hpp"

#include "../support/dot_check.hpp"
#include "../support/random_source.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef MELTLITE_TEST_DATA_DIR
#define MELTLITE_TEST_DATA_DIR "tests/data"
#endif

namespace fs = std::filesystem;
using namespace meltlite;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string &what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Drops `#ifdef MELTLITE_WITH_LINE ... #endif` blocks.
std::string strip_line_guards(const std::string &text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  bool skipping = false;
  while (std::getline(in, line)) {
    if (line == "#ifdef MELTLITE_WITH_LINE") {
      skipping = true;
      continue;
    }
    if (skipping) {
      if (line == "#endif")
        skipping = false;
      continue;
    }
    out << line << "\n";
  }
  return out.str();
}

const Routine *routine_named(const ModuleUnit &mu, const char *name) {
  for (const RoutinePtr &r : mu.routines)
    if (r->name.valid() && r->name.name() == name)
      return r.get();
  return nullptr;
}

ModuleUnit normalize_source(const std::string &src, ConstModuleEnvPtr parent) {
  ExpandOptions eo;
  eo.module_name = "scratch";
  return normalize_module(expand_unit(read_unit(src, "<probe>"), std::move(parent), eo));
}

Verdict a1() {
  Verdict v;
  auto forms = read_unit("#{/*$P#A*/printf(\"a=%d\\n\", $a);}#", "<a1>");
  v.require(forms.size() == 1 && forms[0].is_macrostring(), "not a single macro-string");
  if (!v.ok)
    return v;
  const auto &ch = forms[0].macrostring().chunks;
  v.require(ch.size() == 5, "expected 5 chunks, got " + std::to_string(ch.size()));
  if (!v.ok)
    return v;
  v.require(ch[0].is_text() && ch[0].text() == "/*", "chunk 1");
  v.require(ch[1].is_ref() && ch[1].ref().symbol == SymbolId::intern("p"), "chunk 2");
  v.require(ch[2].is_text() && ch[2].text() == "A*/printf(\"a=%d\\n\", ", "chunk 3");
  v.require(ch[3].is_ref() && ch[3].ref().symbol == SymbolId::intern("a"), "chunk 4");
  v.require(ch[4].is_text() && ch[4].text() == ");", "chunk 5");
  return v;
}

Verdict a2() {
  Verdict v;
  fs::path data = MELTLITE_TEST_DATA_DIR;
  fs::path old = fs::current_path();
  fs::current_path(data);
  Config cfg;
  Translation t = translate_file("helloworld.melt", cfg);
  fs::current_path(old);
  v.require(t.units.size() == 1, "expected one unit");
  if (!v.ok)
    return v;
  const std::string &text = t.units[0].text;
  const char *expected[] = {
      "  int i=0; /* our HELLOWORLDCHUNK__1 */ ",
      "            HELLOWORLDCHUNK__1_label: printf(\"hello world from MELT\\n\");",
      "            if (i++ < 3) goto HELLOWORLDCHUNK__1_label; ;",
  };
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> chunk_lines;
  while (std::getline(in, line))
    if (line.find("HELLOWORLDCHUNK") != std::string::npos)
      chunk_lines.push_back(line);
  v.require(chunk_lines.size() == 3, "expected 3 chunk lines, got " +
                                         std::to_string(chunk_lines.size()));
  for (std::size_t i = 0; v.ok && i < 3; ++i)
    v.require(chunk_lines[i] == expected[i], "chunk line " + std::to_string(i + 1) + ": " +
                                                 chunk_lines[i]);
  std::string golden = slurp(data / "helloworld+00.c.golden");
  v.require(strip_line_guards(text) == strip_line_guards(golden), "differs from the golden file");
  cfg.line_directives = false;
  fs::current_path(data);
  Translation bare = translate_file("helloworld.melt", cfg);
  fs::current_path(old);
  v.require(bare.units.at(0).text == strip_line_guards(golden),
            "output without line directives differs from the golden file");
  return v;
}

Verdict a3(ConstModuleEnvPtr stdenv) {
  Verdict v;
  ModuleUnit mu = normalize_source("(defun probe (v :long x) (+i (negi x) 1))", stdenv);
  const Routine *r = routine_named(mu, "probe");
  v.require(r != nullptr, "no probe routine");
  if (!v.ok)
    return v;
  v.require(r->temp_count == 2, "expected 2 temporaries, got " + std::to_string(r->temp_count));
  std::string body;
  for (const AstPtr &a : r->body)
    body += to_string(*a);
  v.require(body == "(let ((:long %t0 (negi x)) (:long %t1 (+i %t0 1))) %t1)", "unexpected shape " + body);

  testsupport::ExprGen gen(20261016);
  for (int i = 0; v.ok && i < 1000; ++i) {
    std::string src = gen.module(1 + gen.pick(4));
    ModuleUnit m;
    try {
      m = normalize_source(src, stdenv);
    } catch (const CompileError &e) {
      v.require(false, "case " + std::to_string(i) + ": " + e.diagnostic() + "\n" + src);
      break;
    }
    for (const RoutinePtr &rp : m.routines) {
      auto bad = anf_violations(*rp);
      v.require(bad.empty(), "case " + std::to_string(i) + ": " + (bad.empty() ? "" : bad[0]) +
                                 "\n" + src);
      for (const AstPtr &a : rp->body) {
        AstPtr again = normalize(a, *rp, a->ctype);
        v.require(to_string(*again) == to_string(*a),
                  "not idempotent on case " + std::to_string(i) + ": " + to_string(*a) + " vs " +
                      to_string(*again));
      }
    }
  }
  return v;
}

void add_manifest_classes(StdlibMatchSemantics &sem, const ConstModuleEnvPtr &env) {
  for (const ManifestClass &c : stdlib_manifest().classes)
    if (BindingPtr b = env->lookup(SymbolId::intern(c.name)); b && b->klass)
      sem.add_class(b->klass);
}

std::string describe_bindings(const std::map<SymbolId, Thing> &b) {
  std::string s;
  for (const auto &[k, t] : b)
    s += " " + k.name() + "=" + describe(t);
  return s;
}

Verdict a4(ConstModuleEnvPtr stdenv) {
  Verdict v;
  std::mt19937_64 rng(4242);
  int matched = 0;
  for (int i = 0; v.ok && i < 2000; ++i) {
    MatchCase c = random_match_case(rng, 3);
    ProbeMatch pm;
    try {
      pm = compile_probe(c.source, stdenv);
    } catch (const CompileError &e) {
      v.require(false, "case " + std::to_string(i) + ": " + e.diagnostic() + "\n" + c.source);
      break;
    }
    StdlibMatchSemantics sem;
    add_manifest_classes(sem, stdenv);
    MatchOutcome got = interpret(*pm.match->graph, c.subject, sem);
    OracleResult want = oracle_match(pm.match->clauses, c.subject, sem);
    if (want.clause)
      ++matched;
    v.require(got.clause == want.clause && got.bindings == want.bindings,
              "case " + std::to_string(i) + " subject " + describe(c.subject) + "\n" + c.source +
                  "graph clause " + (got.clause ? std::to_string(*got.clause) : "none") +
                  describe_bindings(got.bindings) + "; oracle clause " +
                  (want.clause ? std::to_string(*want.clause) : "none") +
                  describe_bindings(want.bindings));
  }
  v.require(matched > 200, "too few matching cases: " + std::to_string(matched));

  const char *example =
      "(defun f (v x) x)\n(defun g (v x) x)\n"
      "(defun probe (v)\n"
      "  (match v\n"
      "    (?(instance class_symbol :named_name ?synam) (f synam))\n"
      "    (?(instance class_container :container_value ?(and ?cval ?(integerbox_of ?_)))\n"
      "     (g cval))))\n";
  ProbeMatch pm = compile_probe(example, stdenv);
  const MatchGraph &g = *pm.match->graph;
  int class_tests = 0;
  bool all_on_root = true;
  for (const MatchStep &s : g.steps)
    if (s.kind == StepKind::test && s.test == TestKind::instance) {
      ++class_tests;
      all_on_root = all_on_root && g.data.at(s.subject).role == DataRole::root;
    }
  int roots = 0;
  for (const MatchData &d : g.data)
    roots += d.role == DataRole::root;
  v.require(class_tests == 2 && all_on_root && roots == 1,
            "class tests do not share the matched root");
  v.require(g.count(StepKind::flag_conj) == 1, "expected one conjunction flag");
  std::string dot = emit_dot(g, "example");
  dotcheck::Summary sum;
  std::string err = dotcheck::check(dot, sum);
  v.require(err.empty(), "dot does not parse: " + err);
  v.require(sum.nodes.size() >= g.steps.size() + g.data.size(), "dot misses graph nodes");
  return v;
}

Verdict a5(ConstModuleEnvPtr stdenv) {
  Verdict v;
  ProbeMatch pm = compile_probe("(defun probe (v :hstmt s)\n"
                                "  (match s (?(assign_single ?v ?v) 1) (?_ 0)))\n",
                                stdenv);
  const MatchGraph &g = *pm.match->graph;
  int fills = 0, identity = 0;
  for (const MatchStep &s : g.steps) {
    if (s.kind == StepKind::fill && s.fill == FillKind::bind && s.var &&
        s.var->name == SymbolId::intern("v"))
      ++fills;
    if (s.kind == StepKind::test && s.test == TestKind::identity)
      ++identity;
  }
  v.require(fills == 1, "expected 1 fill of v, got " + std::to_string(fills));
  v.require(identity == 1, "expected 1 identity test, got " + std::to_string(identity));
  return v;
}

Verdict a6() {
  Verdict v;
  Config cfg;
  fs::path work = fs::temp_directory_path() / ("meltlite-a6-" + std::to_string(::getpid()));
  cfg.work_dir = work.string();
  auto t0 = std::chrono::steady_clock::now();
  Translation t = translate_stdlib(cfg);
  write_translation(t, cfg);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::remove_all(work);
  std::size_t lines = 0;
  for (const std::string &f : stdlib_manifest().sources) {
    std::string text = slurp(fs::path(default_stdlib_dir()) / f);
    lines += static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  }
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << lines << " source lines in " << secs << " s";
  v.require(lines >= 800, "stdlib too small: " + os.str());
  v.require(secs < 5.0, os.str());
  v.detail = v.ok ? os.str() : v.detail;
  return v;
}

} // namespace

int main() {
  register_stdlib_macros();
  ConstModuleEnvPtr stdenv = load_stdlib();
  struct Row {
    const char *id;
    const char *title;
    std::function<Verdict()> run;
  };
  std::vector<Row> rows = {
      {"A1", "macro-string decomposition", a1},
      {"A2", "helloworld translation", a2},
      {"A3", "normalization", [&] { return a3(stdenv); }},
      {"A4", "match graph equivalence", [&] { return a4(stdenv); }},
      {"A5", "non-linear pattern", [&] { return a5(stdenv); }},
      {"A6", "stdlib translation throughput", a6},
  };
  int failures = 0;
  for (const Row &r : rows) {
    Verdict v;
    try {
      v = r.run();
    } catch (const CompileError &e) {
      v.ok = false;
      v.detail = e.diagnostic();
    } catch (const std::exception &e) {
      v.ok = false;
      v.detail = e.what();
    }
    failures += !v.ok;
    std::cout << r.id << " " << (v.ok ? "PASS" : "FAIL") << " " << r.title;
    if (!v.detail.empty())
      std::cout << " (" << v.detail << ")";
    std::cout << "\n";
  }
  return failures ? 1 : 0;
}
