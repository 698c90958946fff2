#pragma once

#include "meltlite/env.hpp"

#include <map>
#include <string>
#include <vector>

namespace meltlite {

struct ExpandOptions {
  std::string module_name = "module";
  std::string host_version = "1.0";
};

/// Result of expanding one source unit into a module.
struct ExpandedModule {
  std::string name;
  ModuleEnvPtr env;   // parent + exported names only
  ModuleEnvPtr scope; // every definition of the unit
  RoutinePtr start;   // start routine: top-level items in source order
  VarPtr parent_env;  // start routine formal: the parent environment
  VarPtr module_env;  // the environment being built
  VarPtr env_container;
  std::vector<VarPtr> imports;
  std::vector<BindingPtr> defined; // definitions in source order
  std::vector<std::string> warnings;
};

/// Expands s-expressions against the scope of a module under construction.
/// Also the API host macros use to expand their operands.
class Expander {
public:
  Expander(ConstModuleEnvPtr parent, ExpandOptions opts);

  ExpandedModule run(const std::vector<SExpr> &unit);

  AstPtr expand_expr(const SExpr &e);
  std::vector<AstPtr> expand_body(const std::vector<SExpr> &items, std::size_t from);
  PatternPtr expand_pattern(const SExpr &e);

  /// `lambda_like`: the first formal, if any, must be a value.
  FormalList parse_formals(const SExpr &list, bool lambda_like);

  BindingPtr resolve(SymbolId name) const;
  [[noreturn]] void error(const Location &at, const std::string &msg) const;

  /// Local scopes, for host macros that introduce bindings.
  void push_scope();
  void pop_scope();
  VarPtr bind_local(SymbolId name, CType t, const Location &at, VarRole role = VarRole::local);

  const ModuleEnvPtr &scope() const { return module_.scope; }

private:
  struct LocalScope {
    std::map<SymbolId, VarPtr> vars;
    std::map<SymbolId, LabelPtr> labels;
  };
  struct PatternScope {
    std::map<SymbolId, VarPtr> vars;
    std::vector<VarPtr> order;
  };

  ExpandOptions opts_;
  ExpandedModule module_;
  Routine *routine_ = nullptr;
  std::vector<LocalScope> scopes_;
  PatternScope *pattern_scope_ = nullptr;
  std::map<SymbolId, VarPtr> imports_;

  void expand_toplevel(const SExpr &e);
  void define(SymbolId name, std::shared_ptr<Binding> b, const Location &at);

  AstPtr expand_symbol(const SExpr &e);
  AstPtr expand_list(const SExpr &e);
  AstPtr expand_special(SymbolId head, const SExpr &e);
  AstPtr value_ref(const BindingPtr &b, const Location &at);
  AstPtr class_ref(const ClassInfo *cls, const Location &at);
  VarPtr import_var(const BindingPtr &b);

  AstPtr expand_let(const SExpr &e, bool rec);
  AstPtr expand_lambda(const SExpr &e);
  RoutinePtr make_routine(SymbolId name, const SExpr &formals, const std::vector<SExpr> &body,
                          std::size_t body_from, const Location &at);
  AstPtr expand_match(const SExpr &e);
  AstPtr expand_citer(const BindingPtr &b, const SExpr &e);
  AstPtr expand_field_access(const SExpr &e, bool unsafe);
  AstPtr expand_put_fields(const SExpr &e, bool unsafe);
  AstPtr expand_instance(const SExpr &e);
  AstPtr expand_code_chunk(const SExpr &e);
  std::vector<FieldInit> expand_field_inits(const ClassInfo *cls, const std::vector<SExpr> &items,
                                            std::size_t from, const Location &at);
  FieldPtr resolve_field(const SExpr &kw);

  PatternPtr expand_matcher_pattern(const BindingPtr &b, const SExpr &e);
  PatternPtr expand_instance_pattern(const SExpr &e);

  void def_function(const SExpr &e);
  void def_class(const SExpr &e);
  void def_instance(const SExpr &e);
  void def_selector(const SExpr &e);
  void def_primitive(const SExpr &e);
  void def_citerator(const SExpr &e);
  void def_cmatcher(const SExpr &e);
  void def_funmatcher(const SExpr &e);
  void export_names(const SExpr &e, ExportKind kind);
  void export_synonym(const SExpr &e);
  void export_macro(const SExpr &e, bool pattern);

  VarPtr new_module_var(SymbolId name, const Location &at);
};

/// Expands a unit against `parent` (the stdlib environment, or a root env).
ExpandedModule expand_unit(const std::vector<SExpr> &unit, ConstModuleEnvPtr parent,
                           const ExpandOptions &opts = {});

/// Parses a formal list outside any module context.
FormalList parse_formals(const SExpr &list, bool lambda_like = true);

} // namespace meltlite
