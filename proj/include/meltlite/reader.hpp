#pragma once

#include "meltlite/sexpr.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace meltlite {

/// Reads every top-level s-expression of a source unit. Throws CompileError
/// (Phase::read) with the position of the offending character.
std::vector<SExpr> read_unit(std::string_view source, const std::string &origin);

/// Splits the body of a `#{ ... }#` literal into text and `$name` chunks.
/// `at` is the location of the first body character.
MacroString read_macrostring(std::string_view raw, const Location &at);

/// Reads a whole file; origin in diagnostics is the path as given.
std::vector<SExpr> read_file(const std::string &path);

} // namespace meltlite
