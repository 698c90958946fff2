#include "meltlite/env.hpp"

#include <stdexcept>

namespace meltlite {

const char *binding_kind_name(BindingKind k) {
  switch (k) {
  case BindingKind::value: return "value";
  case BindingKind::macro: return "macro";
  case BindingKind::patmacro: return "pattern macro";
  case BindingKind::primitive: return "primitive";
  case BindingKind::citerator: return "c-iterator";
  case BindingKind::cmatcher: return "c-matcher";
  case BindingKind::funmatcher: return "fun-matcher";
  case BindingKind::klass: return "class";
  case BindingKind::field: return "field";
  case BindingKind::selector: return "selector";
  case BindingKind::instance: return "instance";
  case BindingKind::function: return "function";
  case BindingKind::local: return "local";
  case BindingKind::formal: return "formal";
  }
  return "?";
}

bool Binding::is_runtime_value() const {
  switch (kind) {
  case BindingKind::value:
  case BindingKind::funmatcher:
  case BindingKind::klass:
  case BindingKind::selector:
  case BindingKind::instance:
  case BindingKind::function:
    return true;
  default:
    return false;
  }
}

ModuleEnv::ModuleEnv(std::shared_ptr<const ModuleEnv> parent, std::string name)
    : parent_(std::move(parent)), name_(std::move(name)) {}

BindingPtr ModuleEnv::lookup(SymbolId name) const {
  for (const ModuleEnv *e = this; e; e = e->parent_.get())
    if (auto b = e->lookup_local(name))
      return b;
  return nullptr;
}

BindingPtr ModuleEnv::lookup_local(SymbolId name) const {
  auto it = bindings_.find(name);
  return it == bindings_.end() ? nullptr : it->second;
}

void ModuleEnv::bind(SymbolId name, BindingPtr b) {
  if (!bindings_.emplace(name, std::move(b)).second)
    throw std::logic_error("duplicate binding of " + name.name());
  order_.push_back(name);
}

void ModuleEnv::mark_exported(SymbolId name) { exported_.insert(name); }

MacroRegistry &MacroRegistry::instance() {
  static MacroRegistry r;
  return r;
}

void MacroRegistry::add_macro(const std::string &name, MacroFn fn) {
  macros_[SymbolId::intern(name)] = std::move(fn);
}

void MacroRegistry::add_patmacro(const std::string &name, PatMacroFn fn) {
  patmacros_[SymbolId::intern(name)] = std::move(fn);
}

const MacroFn *MacroRegistry::macro(SymbolId name) const {
  auto it = macros_.find(name);
  return it == macros_.end() ? nullptr : &it->second;
}

const PatMacroFn *MacroRegistry::patmacro(SymbolId name) const {
  auto it = patmacros_.find(name);
  return it == patmacros_.end() ? nullptr : &it->second;
}

} // namespace meltlite
