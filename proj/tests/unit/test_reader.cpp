#include "meltlite/reader.hpp"

#include <doctest.h>

using namespace meltlite;

namespace {

SExpr read1(const std::string &src) {
  auto v = read_unit(src, "<test>");
  REQUIRE(v.size() == 1);
  return v[0];
}

} // namespace

TEST_SUITE("reader") {

TEST_CASE("quote and question sugar") {
  SExpr q = read1("'a");
  REQUIRE(q.is_list());
  CHECK(q.items().size() == 2);
  CHECK(q.items()[0].is_symbol(SymbolId::intern("quote")));
  CHECK(q.items()[1].is_symbol(SymbolId::intern("a")));

  SExpr b = read1("?b");
  CHECK(b.has_head(SymbolId::intern("question")));
  CHECK(to_string(read1("`(a ,b)")) == "(backquote (a (comma b)))");
}

TEST_CASE("atoms") {
  CHECK(read1("()").is_nil());
  SExpr k = read1(":long");
  REQUIRE(k.is_keyword());
  CHECK(k.keyword() == SymbolId::intern("long"));
  CHECK(read1("-42").long_value() == -42);
  CHECK(read1("\"a\\n\\\"b\"").string_value() == "a\n\"b");
  CHECK(read1("+i").is_symbol(SymbolId::intern("+i")));
}

TEST_CASE("symbols are case-insensitive") {
  CHECK(read1("FOO").symbol() == read1("foo").symbol());
  CHECK(read1("Foo").symbol() == SymbolId::intern("fOO"));
}

TEST_CASE("comments and locations") {
  auto v = read_unit("; comment\n(a\n  b) ; trailing\n c", "f.melt");
  REQUIRE(v.size() == 2);
  CHECK(v[0].location.line == 2);
  CHECK(v[0].location.file_name() == "f.melt");
  CHECK(v[0].items()[1].location.line == 3);
  CHECK(v[0].items()[1].location.column == 3);
  CHECK(v[1].location.line == 4);
}

TEST_CASE("macro-string with separator") {
  SExpr m = read1("#{$sta#_lab: goto $sta#_lab;}#");
  REQUIRE(m.is_macrostring());
  const auto &c = m.macrostring().chunks;
  REQUIRE(c.size() == 4);
  CHECK(c[0].ref().symbol == SymbolId::intern("sta"));
  CHECK(c[1].text() == "_lab: goto ");
  CHECK(c[2].ref().symbol == SymbolId::intern("sta"));
  CHECK(c[3].text() == "_lab;");
}

TEST_CASE("macro-string keeps backslashes, quotes and newlines") {
  SExpr m = read1("#{a\\n \"q\"\nb}#");
  const auto &c = m.macrostring().chunks;
  REQUIRE(c.size() == 1);
  CHECK(c[0].text() == "a\\n \"q\"\nb");
}

TEST_CASE("macro-string dollar escape merges text") {
  SExpr m = read1("#{cost: $$5 and $x}#");
  const auto &c = m.macrostring().chunks;
  REQUIRE(c.size() == 2);
  CHECK(c[0].text() == "cost: $5 and ");
  CHECK(c[1].ref().spelling == "x");
}

TEST_CASE("macro-string reconstruction") {
  const char *bodies[] = {"abc", "/*$P*/ x = $a + $b;", "$x$y", "f($N) { return $n; }"};
  for (const char *body : bodies) {
    MacroString ms = read_macrostring(body, Location{});
    MacroString again = read_macrostring(ms.source_text(), Location{});
    CHECK(ms == again);
  }
}

TEST_CASE("read errors are positioned") {
  auto expect_error = [](const std::string &src, int line) {
    try {
      read_unit(src, "e.melt");
      FAIL("no error for " << src);
    } catch (const CompileError &e) {
      CHECK(e.phase() == Phase::read);
      CHECK(e.where().line == line);
    }
  };
  expect_error("(a b", 1);
  expect_error("\n)", 2);
  expect_error("\"abc", 1);
  expect_error("#{ abc", 1);
  expect_error("\n\n#{ $1 }#", 3);
}

} // TEST_SUITE
