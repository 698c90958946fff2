#pragma once

#include "meltlite/matchc.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace meltlite {

/// Per-module emission state.
struct EmitCtx {
  std::string module_name = "module";
  std::map<SymbolId, int> state_counters;
  bool line_directives = true;
  int split_threshold = 64;
  std::string host_version = "1.0";
  std::map<std::string, int> predefined; // name -> slot, for diagnostics
  int max_frame_slots = 1024;
  std::vector<std::string> warnings;
  int match_counter = 0;

  /// Next occurrence number of a state symbol (1 on first use).
  int next_state(SymbolId s) { return ++state_counters[s]; }
};

struct StuffSlot {
  CType ctype;
  int index; // per c-type
};

struct FrameLayout {
  int value_slots = 0;
  std::vector<StuffSlot> stuff;
  std::string location; // "file:line"
};

/// Frame layout of a normalized routine: value locals first-come in the value
/// array, stuff locals numbered per c-type. Closed-over variables live in the
/// closure and take no slot.
FrameLayout compute_layout(const Routine &r);

struct EmittedUnit {
  std::string file_name;
  std::string text;
};

/// Emits the C99 units of a normalized, match-compiled module.
std::vector<EmittedUnit> emit_module(const ModuleUnit &unit, EmitCtx &ctx);

/// Substitutes a template. `state` is replaced by its uniquified spelling:
/// `NAME__n` when written in upper case, `name_n` otherwise; `n` is taken from
/// the context counter unless `occurrence` is given.
std::string expand_template(const MacroString &ms, const std::map<SymbolId, std::string> &subst,
                            SymbolId state, EmitCtx &ctx, int occurrence = 0);

/// `meltlite_start_<name>`
std::string entry_symbol(const std::string &module_name);

/// Non-alphanumerics replaced by `_`; case preserved.
std::string mangle(const std::string &name);

/// C string literal, with quotes.
std::string c_string_literal(const std::string &s);

} // namespace meltlite
