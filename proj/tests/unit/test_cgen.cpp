#include "common.hpp"

using namespace testsupport;
namespace fs = std::filesystem;

namespace {

std::string all_text(const Translation &t) {
  std::string s;
  for (const EmittedUnit &u : t.units)
    s += u.text;
  return s;
}

int count_of(const std::string &hay, const std::string &needle) {
  int n = 0;
  for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1))
    ++n;
  return n;
}

const char *sample =
    "(defun twice (v :long n) (+i n n))\n"
    "(defun pick (v w) (if v v w))\n"
    "(defun walk (v :hnode h)\n"
    "  (match h (?(node_identifier ?(cstring_same \"x\")) v) (?_ ())))\n"
    "(defun hello (v) (code_chunk st #{/*$ST*/ { int $st = 0; (void) $st; }}#) v)\n";

} // namespace

TEST_SUITE("cgen") {

TEST_CASE("state symbols are uniquified by spelling case") {
  EmitCtx ctx;
  SymbolId st = SymbolId::intern("lab");
  MacroString ms = read_macrostring("$LAB: $lab; f($x);", Location{});
  std::map<SymbolId, std::string> subst{{SymbolId::intern("x"), "xx"}};
  CHECK(expand_template(ms, subst, st, ctx) == "LAB__1: lab_1; f(xx);");
  CHECK(expand_template(ms, subst, st, ctx) == "LAB__2: lab_2; f(xx);");
  CHECK(expand_template(ms, subst, st, ctx, 7) == "LAB__7: lab_7; f(xx);");
  CHECK_THROWS_AS(expand_template(ms, subst, SymbolId::intern("other"), ctx), CompileError);
}

TEST_CASE("unknown template variables are errors") {
  EmitCtx ctx;
  MacroString ms = read_macrostring("$nope", Location{});
  CHECK_THROWS_AS(expand_template(ms, {}, SymbolId{}, ctx), CompileError);
}

TEST_CASE("names") {
  CHECK(mangle("list-length?") == "list_length_");
  CHECK(mangle("MixedCase") == "MixedCase");
  CHECK(mangle("9lives") == "_9lives");
  CHECK(entry_symbol("hello-world") == "meltlite_start_hello_world");
  CHECK(module_name_for("/a/b/9x.melt") == "_9x");
  CHECK(module_name_for("dir/my-mod.melt") == "my_mod");
}

TEST_CASE("C string literals") {
  CHECK(c_string_literal("a\"b\\c\n") == "\"a\\\"b\\\\c\\n\"");
  CHECK(c_string_literal("?\?=") == "\"?\\?=\"");
  CHECK(c_string_literal(std::string("\x01", 1)) == "\"\\001\"");
  CHECK(c_string_literal("") == "\"\"");
}

TEST_CASE("frame layout separates values from stuff") {
  ModuleUnit mu = normalize_src("(defun f (v w :long a b :cstring s) (+i a b))");
  FrameLayout l = compute_layout(*routine_named(mu, "f"));
  CHECK(l.value_slots == 2);
  REQUIRE(l.stuff.size() == 4);
  CHECK(l.stuff[0].ctype == CType::long_);
  CHECK(l.stuff[0].index == 0);
  CHECK(l.stuff[1].index == 1);
  CHECK(l.stuff[2].ctype == CType::cstring);
  CHECK(l.stuff[2].index == 0);
  CHECK(l.stuff[3].ctype == CType::long_);
  CHECK(l.stuff[3].index == 2);
  CHECK(l.location == "t.melt:1");
}

TEST_CASE("one C function per routine, with the module entry point") {
  Translation t = translate_src(sample);
  REQUIRE(t.units.size() == 1);
  CHECK(t.units[0].file_name == "t+00.c");
  std::string c = all_text(t);
  CHECK(contains(c, "mlt_val meltlite_start_t(mlt_ctx *mltctx, mlt_val parentenv)\n{"));
  for (const char *n : {"TWICE", "PICK", "WALK", "HELLO"})
    CHECK(count_of(c, std::string("_T_") + n + "(mlt_ctx *mltctx") == 1);
  CHECK(contains(c, "ST__1"));
  CHECK(contains(c, "st_1"));
}

TEST_CASE("line directives are guarded or omitted") {
  std::string with = all_text(translate_src(sample));
  CHECK(count_of(with, "#ifdef MELTLITE_WITH_LINE\n#line ") >= 4);
  Config cfg;
  cfg.line_directives = false;
  CHECK_FALSE(contains(all_text(translate_src(sample, cfg)), "#line"));
}

TEST_CASE("large modules are split") {
  std::string src;
  for (int i = 0; i < 10; ++i)
    src += "(defun f" + std::to_string(i) + " (v) v)\n";
  Config cfg;
  cfg.split_threshold = 4;
  Translation t = translate_src(src, cfg);
  REQUIRE(t.units.size() == 3);
  CHECK(t.units[2].file_name == "t+02.c");
  CHECK(contains(t.units[0].text, "meltlite_start_t(mlt_ctx *mltctx, mlt_val parentenv)\n{"));
  CHECK_FALSE(contains(t.units[1].text, "meltlite_start_t(mlt_ctx *mltctx, mlt_val parentenv)\n{"));
  // every unit declares every routine
  for (const EmittedUnit &u : t.units)
    CHECK(contains(u.text, "mlt_val meltrout_10_T_F9(mlt_ctx *,"));
  cfg.split_threshold = 0;
  CHECK_THROWS_AS(translate_src(src, cfg), CompileError);
}

TEST_CASE("compile warnings are reported, not emitted") {
  Translation t = translate_src("(compile_warning \"careful\" 1)\n(defun f (v) v)");
  REQUIRE(t.warnings.size() == 1);
  CHECK(contains(t.warnings[0], "t.melt:1:1: warning: careful"));
}

TEST_CASE("generated C is warning-free C99") {
  fs::path dir = scratch_dir("cgen");
  Config cfg;
  cfg.split_threshold = 2;
  Translation t = translate_src(sample, cfg);
  CHECK(t.units.size() == 2);
  for (const EmittedUnit &u : t.units) {
    fs::path p = dir / u.file_name;
    write_file_atomic(p.string(), u.text);
    CHECK(c_syntax_check(p) == 0);
    CHECK(c_syntax_check(p, "-DMELTLITE_WITH_LINE") == 0);
  }
  fs::remove_all(dir);
}

} // TEST_SUITE
