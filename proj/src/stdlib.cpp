#include "meltlite/stdlib.hpp"

#include "meltlite/reader.hpp"

#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <stdexcept>

#ifndef MELTLITE_STDLIB_DIR
#define MELTLITE_STDLIB_DIR "stdlib"
#endif

namespace meltlite {

namespace {

SExpr sym(const Location &at, const char *name) {
  return SExpr{at, sx::Symbol{SymbolId::intern(name)}};
}

SExpr list(const Location &at, std::vector<SExpr> items) {
  return SExpr{at, sx::List{std::move(items)}};
}

// (when c body...) => (if c (progn body...))
AstPtr expand_when(const SExpr &form, Expander &ex, bool negate) {
  const auto &items = form.items();
  if (items.size() < 3)
    ex.error(form.location, std::string(negate ? "unless" : "when") +
                                " expects a condition and a body");
  std::vector<SExpr> body{sym(form.location, "progn")};
  body.insert(body.end(), items.begin() + 2, items.end());
  std::vector<SExpr> out{sym(form.location, "if"), items[1]};
  if (negate)
    out.push_back(list(form.location, {}));
  out.push_back(list(form.location, std::move(body)));
  return ex.expand_expr(list(form.location, std::move(out)));
}

// ?(cstring_any_of "a" "b") => ?(or ?(cstring_same "a") ?(cstring_same "b"))
PatternPtr expand_cstring_any_of(const SExpr &x, Expander &ex) {
  const auto &items = x.items();
  if (items.size() < 2)
    ex.error(x.location, "cstring_any_of expects at least one string");
  std::vector<SExpr> alts{sym(x.location, "or")};
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (!items[i].is_string())
      ex.error(items[i].location, "cstring_any_of expects string literals");
    alts.push_back(list(items[i].location,
                        {sym(items[i].location, "question"),
                         list(items[i].location, {sym(items[i].location, "cstring_same"), items[i]})}));
  }
  return ex.expand_pattern(
      list(x.location, {sym(x.location, "question"), list(x.location, std::move(alts))}));
}

} // namespace

const StdlibManifest &stdlib_manifest() {
  static const StdlibManifest m = [] {
    StdlibManifest s;
    s.ctypes.assign(all_ctypes.begin(), all_ctypes.end());
    s.classes = {
        {"class_root", "", {}, 1},
        {"class_named", "class_root", {"named_name"}, 2},
        {"class_discriminant", "class_named", {"disc_methodict", "disc_super"}, 3},
        {"class_class", "class_discriminant", {"class_ancestors", "class_fields"}, 4},
        {"class_symbol", "class_named", {"symb_data"}, 5},
        {"class_keyword", "class_symbol", {}, 6},
        {"class_sexpr", "class_root", {"sexp_contents", "sexp_location"}, 7},
        {"class_container", "class_root", {"container_value"}, 8},
        {"class_environment", "class_root", {"env_bind", "env_prev"}, 9},
        {"class_selector", "class_named", {"sel_signature", "sel_data"}, 10},
    };
    const char *discrs[] = {"discr_any_receiver", "discr_null_receiver", "discr_integer",
                            "discr_constant_integer", "discr_string", "discr_multiple",
                            "discr_class_sequence", "discr_list", "discr_pair", "discr_closure",
                            "discr_map_objects", "discr_map_strings", "discr_map_hnodes",
                            "discr_mixed_location"};
    int slot = 11;
    for (const char *d : discrs)
      s.discriminants.push_back({d, slot++});
    s.sources = {"core.melt", "values.melt", "hostir.melt", "matchers.melt", "lib.melt"};
    return s;
  }();
  return m;
}

std::map<std::string, int> predefined_map() {
  std::map<std::string, int> out;
  for (const auto &c : stdlib_manifest().classes)
    out[c.name] = c.predef_slot;
  for (const auto &d : stdlib_manifest().discriminants)
    out[d.name] = d.predef_slot;
  return out;
}

std::string default_stdlib_dir() {
  if (const char *e = std::getenv("MELTLITE_STDLIB_DIR"); e && *e)
    return e;
  return MELTLITE_STDLIB_DIR;
}

void register_stdlib_macros() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto &reg = MacroRegistry::instance();
    reg.add_macro("when", [](const SExpr &f, Expander &ex) { return expand_when(f, ex, false); });
    reg.add_macro("unless", [](const SExpr &f, Expander &ex) { return expand_when(f, ex, true); });
    reg.add_patmacro("cstring_any_of", expand_cstring_any_of);
  });
}

ModuleEnvPtr manifest_env(ConstModuleEnvPtr root) {
  const StdlibManifest &m = stdlib_manifest();
  auto env = std::make_shared<ModuleEnv>(std::move(root), "meltlite_predef");
  Location at{std::make_shared<const std::string>("<predefined>"), 0, 0};
  auto bind = [&](const std::string &name, std::shared_ptr<Binding> b) {
    SymbolId id = SymbolId::intern(name);
    b->name = id;
    b->where = at;
    b->module = "meltlite_predef";
    if (env->lookup_local(id))
      throw std::logic_error("duplicate stdlib manifest name " + name);
    env->bind(id, b);
    env->mark_exported(id);
  };
  for (const ManifestClass &c : m.classes) {
    auto cls = std::make_shared<ClassInfo>();
    cls->name = SymbolId::intern(c.name);
    cls->where = at;
    if (!c.super.empty()) {
      BindingPtr sb = env->lookup_local(SymbolId::intern(c.super));
      if (!sb || !sb->klass)
        throw std::logic_error("stdlib manifest class " + c.name + " precedes its superclass");
      cls->super = sb->klass;
      cls->all_fields = sb->klass->all_fields;
    }
    for (const std::string &f : c.fields) {
      auto fi = std::make_shared<FieldInfo>();
      fi->name = SymbolId::intern(f);
      fi->owner = cls.get();
      fi->index = static_cast<int>(cls->all_fields.size());
      cls->own_fields.push_back(fi);
      cls->all_fields.push_back(fi);
    }
    auto b = std::make_shared<Binding>();
    b->kind = BindingKind::klass;
    b->klass = cls;
    b->predef_slot = c.predef_slot;
    bind(c.name, b);
    for (const FieldPtr &f : cls->own_fields) {
      auto fb = std::make_shared<Binding>();
      fb->kind = BindingKind::field;
      fb->field = f;
      bind(f->name.name(), fb);
    }
  }
  for (const ManifestDiscr &d : m.discriminants) {
    auto b = std::make_shared<Binding>();
    b->kind = BindingKind::value;
    b->predef_slot = d.predef_slot;
    bind(d.name, b);
  }
  return env;
}

std::vector<SExpr> read_stdlib_sources(const std::string &dir) {
  std::vector<SExpr> unit;
  for (const std::string &f : stdlib_manifest().sources) {
    std::filesystem::path p = std::filesystem::path(dir) / f;
    if (!std::filesystem::exists(p))
      throw CompileError(Phase::read, Location{std::make_shared<const std::string>(p.string()), 0, 0}, "missing stdlib source");
    std::vector<SExpr> part = read_file(p.string());
    unit.insert(unit.end(), std::make_move_iterator(part.begin()),
                std::make_move_iterator(part.end()));
  }
  return unit;
}

ExpandedModule expand_stdlib(const std::string &dir, ConstModuleEnvPtr root,
                             const ExpandOptions &opts) {
  register_stdlib_macros();
  ExpandOptions o = opts;
  o.module_name = stdlib_module_name;
  return expand_unit(read_stdlib_sources(dir), manifest_env(std::move(root)), o);
}

ConstModuleEnvPtr load_stdlib(ConstModuleEnvPtr root, const std::string &dir) {
  if (root)
    return expand_stdlib(dir, std::move(root)).env;
  static std::mutex mu;
  static std::map<std::string, ConstModuleEnvPtr> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto &slot = cache[dir];
  if (!slot)
    slot = expand_stdlib(dir).env;
  return slot;
}

} // namespace meltlite
