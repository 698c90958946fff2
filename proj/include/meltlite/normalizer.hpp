#pragma once

#include "meltlite/expander.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace meltlite {

/// A module after normalization: every routine body is in A-normal form and
/// every node carries its checked c-type.
struct ModuleUnit {
  ExpandedModule expanded;
  std::vector<RoutinePtr> routines; // start routine first, then nested ones in source order
  std::vector<std::string> warnings;
  std::vector<std::shared_ptr<const MatchGraph>> match_graphs; // source order, set by matchc
};

/// Normalizes every routine of an expanded module.
ModuleUnit normalize_module(ExpandedModule m);

/// Normalizes one expression owned by `routine`. New temporaries and locals are
/// appended to `routine.slots`. Throws CompileError (Phase::normalize).
AstPtr normalize(const AstPtr &ast, Routine &routine, std::optional<CType> expected = {});

/// Branch c-type unification: the common c-type, else `:void`.
CType unify_ctypes(const std::vector<CType> &branches);

} // namespace meltlite
