#pragma once

#include "meltlite/ast.hpp"

#include <functional>
#include <memory>
#include <set>
#include <unordered_map>
#include <vector>

namespace meltlite {

class Expander;

enum class BindingKind {
  value,
  macro,
  patmacro,
  primitive,
  citerator,
  cmatcher,
  funmatcher,
  klass,
  field,
  selector,
  instance,
  function,
  local,
  formal,
};

const char *binding_kind_name(BindingKind k);

/// Host-registered expanders; the translator is not bootstrapped so macro
/// bodies cannot be written in the DSL itself.
using MacroFn = std::function<AstPtr(const SExpr &form, Expander &ex)>;
using PatMacroFn = std::function<PatternPtr(const SExpr &form, Expander &ex)>;

struct Binding {
  SymbolId name;
  BindingKind kind = BindingKind::value;
  Location where;
  std::string module; // defining module

  // Runtime-valued bindings: the holder inside the defining module, and how
  // other modules fetch the value (predefined slot, else by name).
  VarPtr var;
  int predef_slot = -1;

  std::shared_ptr<const PrimitiveDef> primitive;
  std::shared_ptr<const CIteratorDef> citerator;
  std::shared_ptr<const CMatcherDef> cmatcher;
  std::shared_ptr<const FunMatcherDef> funmatcher;
  ClassPtr klass;     // klass bindings, and the class of an instance binding
  FieldPtr field;
  std::optional<SelectorInfo> selector;
  MacroFn macro;
  PatMacroFn patmacro;
  std::optional<FormalList> function_formals;
  std::optional<MacroString> doc;

  bool is_runtime_value() const;
};

/// A frame of bindings layered over an optional parent. Lookups fall through
/// to the parent; a name is bound at most once per frame.
class ModuleEnv {
public:
  explicit ModuleEnv(std::shared_ptr<const ModuleEnv> parent = nullptr, std::string name = "");

  BindingPtr lookup(SymbolId name) const;
  BindingPtr lookup_local(SymbolId name) const;

  /// Throws std::logic_error when `name` is already bound in this frame.
  void bind(SymbolId name, BindingPtr b);
  void mark_exported(SymbolId name);

  const std::shared_ptr<const ModuleEnv> &parent() const { return parent_; }
  const std::string &name() const { return name_; }
  const std::vector<SymbolId> &order() const { return order_; }
  const std::set<SymbolId> &exported() const { return exported_; }
  bool is_exported(SymbolId s) const { return exported_.count(s) != 0; }
  std::size_t size() const { return order_.size(); }

private:
  std::shared_ptr<const ModuleEnv> parent_;
  std::string name_;
  std::vector<SymbolId> order_;
  std::unordered_map<SymbolId, BindingPtr> bindings_;
  std::set<SymbolId> exported_;
};

using ModuleEnvPtr = std::shared_ptr<ModuleEnv>;
using ConstModuleEnvPtr = std::shared_ptr<const ModuleEnv>;

/// Process-wide registry of host macro and pattern-macro expanders, keyed by
/// name. `export_macro` / `export_patmacro` bind names against it.
class MacroRegistry {
public:
  static MacroRegistry &instance();
  void add_macro(const std::string &name, MacroFn fn);
  void add_patmacro(const std::string &name, PatMacroFn fn);
  const MacroFn *macro(SymbolId name) const;
  const PatMacroFn *patmacro(SymbolId name) const;

private:
  std::unordered_map<SymbolId, MacroFn> macros_;
  std::unordered_map<SymbolId, PatMacroFn> patmacros_;
};

} // namespace meltlite
