#include "common.hpp"

#include <regex>

using namespace testsupport;
namespace fs = std::filesystem;

namespace {

std::string upper(std::string s) {
  for (char &c : s)
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

/// MLT_PREDEF_* enumerators of the runtime header.
std::map<std::string, int> header_predefs() {
  std::map<std::string, int> out;
  std::string h = slurp(fs::path(MELTLITE_RUNTIME_INCLUDE) / "meltlite_runtime.h");
  std::regex re(R"(MLT_PREDEF_([A-Z_]+) = (\d+),)");
  for (auto it = std::sregex_iterator(h.begin(), h.end(), re); it != std::sregex_iterator(); ++it)
    if ((*it)[1] != "_NONE")
      out[(*it)[1]] = std::stoi((*it)[2]);
  return out;
}

} // namespace

TEST_SUITE("stdlib") {

TEST_CASE("manifest slots") {
  const StdlibManifest &m = stdlib_manifest();
  REQUIRE(m.classes.size() == 10);
  REQUIRE(m.discriminants.size() == 14);
  for (std::size_t i = 0; i < m.classes.size(); ++i)
    CHECK(m.classes[i].predef_slot == int(i) + 1);
  for (std::size_t i = 0; i < m.discriminants.size(); ++i)
    CHECK(m.discriminants[i].predef_slot == int(i) + 11);
  CHECK(m.classes[0].name == "class_root");
  CHECK(m.classes[0].super.empty());
}

TEST_CASE("predefined slots agree with the runtime header") {
  std::map<std::string, int> hdr = header_predefs();
  std::map<std::string, int> ours = predefined_map();
  REQUIRE(hdr.size() == ours.size());
  for (const auto &[name, slot] : ours) {
    CAPTURE(name);
    REQUIRE(hdr.count(upper(name)));
    CHECK(hdr[upper(name)] == slot);
  }
}

TEST_CASE("manifest environment") {
  ModuleEnvPtr env = manifest_env();
  BindingPtr kw = env->lookup_local(SymbolId::intern("class_keyword"));
  REQUIRE(kw);
  REQUIRE(kw->klass);
  CHECK(kw->predef_slot == 6);
  CHECK(kw->klass->field_count() == 2);
  BindingPtr sym = env->lookup_local(SymbolId::intern("class_symbol"));
  CHECK(kw->klass->is_subclass_of(sym->klass.get()));
  BindingPtr f = env->lookup_local(SymbolId::intern("named_name"));
  REQUIRE(f);
  CHECK(f->kind == BindingKind::field);
  CHECK(f->field->index == 0);
  BindingPtr d = env->lookup_local(SymbolId::intern("discr_list"));
  REQUIRE(d);
  CHECK(d->predef_slot == 18);
}

TEST_CASE("the library expands as one module") {
  Config cfg;
  ExpandedModule em = expand_stdlib(cfg.effective_stdlib_dir());
  CHECK(em.name == "meltlite_stdlib");
  CHECK(em.defined.size() > 50);
}

TEST_CASE("exported names") {
  ConstModuleEnvPtr env = stdenv();
  for (const char *n : {"list_reverse", "list_length", "integerbox_of", "isbiggereven",
                        "isdivisible", "node_identifier", "cstring_same", "assign_single",
                        "when", "unless", "cstring_any_of", "class_container"})
    CHECK_MESSAGE(env->lookup(SymbolId::intern(n)), n);
  CHECK(stdenv().get() == stdenv().get());
}

TEST_CASE("the library translates to C99") {
  Config cfg;
  Translation t = translate_stdlib(cfg);
  REQUIRE_FALSE(t.units.empty());
  CHECK(t.units[0].file_name == "meltlite_stdlib+00.c");
  fs::path dir = scratch_dir("stdlib");
  cfg.work_dir = dir.string();
  for (const std::string &p : write_translation(t, cfg)) {
    CAPTURE(p);
    CHECK(c_syntax_check(p) == 0);
  }
  fs::remove_all(dir);
}

TEST_CASE("a missing source is reported") {
  fs::path dir = scratch_dir("nostd");
  CHECK_THROWS_AS(read_stdlib_sources(dir.string()), CompileError);
  fs::remove_all(dir);
}

} // TEST_SUITE
