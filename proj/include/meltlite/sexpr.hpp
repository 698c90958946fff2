#pragma once

#include "meltlite/location.hpp"
#include "meltlite/symbol.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace meltlite {

/// One piece of a macro-string: verbatim target text or a `$name` reference.
struct MacroChunk {
  struct Text {
    std::string text;
    friend bool operator==(const Text &, const Text &) = default;
  };
  struct Ref {
    SymbolId symbol;
    std::string spelling; // as written, case preserved
    friend bool operator==(const Ref &a, const Ref &b) { return a.symbol == b.symbol; }
  };

  std::variant<Text, Ref> part;

  bool is_text() const { return std::holds_alternative<Text>(part); }
  bool is_ref() const { return std::holds_alternative<Ref>(part); }
  const std::string &text() const { return std::get<Text>(part).text; }
  const Ref &ref() const { return std::get<Ref>(part); }

  friend bool operator==(const MacroChunk &, const MacroChunk &) = default;
};

struct MacroString {
  Location location;
  std::vector<MacroChunk> chunks;

  /// Re-renders the chunks as macro-string body text (`$NAME` for refs).
  std::string source_text() const;
  bool operator==(const MacroString &o) const { return chunks == o.chunks; }
};

struct SExpr;

namespace sx {
struct Symbol {
  SymbolId id;
};
struct Keyword {
  SymbolId id;
};
struct Long {
  std::int64_t value;
};
struct String {
  std::string value;
};
struct List {
  std::vector<SExpr> items;
};
} // namespace sx

struct SExpr {
  Location location;
  std::variant<sx::Symbol, sx::Keyword, sx::Long, sx::String, MacroString, sx::List> node;

  bool is_symbol() const { return std::holds_alternative<sx::Symbol>(node); }
  bool is_symbol(SymbolId s) const { return is_symbol() && symbol() == s; }
  bool is_keyword() const { return std::holds_alternative<sx::Keyword>(node); }
  bool is_keyword(SymbolId s) const { return is_keyword() && keyword() == s; }
  bool is_long() const { return std::holds_alternative<sx::Long>(node); }
  bool is_string() const { return std::holds_alternative<sx::String>(node); }
  bool is_macrostring() const { return std::holds_alternative<MacroString>(node); }
  bool is_list() const { return std::holds_alternative<sx::List>(node); }
  bool is_nil() const { return is_list() && items().empty(); }

  SymbolId symbol() const { return std::get<sx::Symbol>(node).id; }
  SymbolId keyword() const { return std::get<sx::Keyword>(node).id; }
  std::int64_t long_value() const { return std::get<sx::Long>(node).value; }
  const std::string &string_value() const { return std::get<sx::String>(node).value; }
  const MacroString &macrostring() const { return std::get<MacroString>(node); }
  const std::vector<SExpr> &items() const { return std::get<sx::List>(node).items; }

  /// Head symbol of a non-empty list whose first item is a symbol.
  bool has_head(SymbolId s) const {
    return is_list() && !items().empty() && items().front().is_symbol(s);
  }
};

/// Lisp-style printed form, used in diagnostics and tests.
std::string to_string(const SExpr &e);

} // namespace meltlite
