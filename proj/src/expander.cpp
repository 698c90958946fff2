#include "meltlite/expander.hpp"

#include <algorithm>
#include <set>

namespace meltlite {

namespace {

struct Syms {
  SymbolId quote = SymbolId::intern("quote");
  SymbolId question = SymbolId::intern("question");
  SymbolId backquote = SymbolId::intern("backquote");
  SymbolId comma = SymbolId::intern("comma");
  SymbolId let = SymbolId::intern("let");
  SymbolId letrec = SymbolId::intern("letrec");
  SymbolId lambda = SymbolId::intern("lambda");
  SymbolId if_ = SymbolId::intern("if");
  SymbolId cond = SymbolId::intern("cond");
  SymbolId and_ = SymbolId::intern("and");
  SymbolId or_ = SymbolId::intern("or");
  SymbolId progn = SymbolId::intern("progn");
  SymbolId forever = SymbolId::intern("forever");
  SymbolId exit = SymbolId::intern("exit");
  SymbolId return_ = SymbolId::intern("return");
  SymbolId multicall = SymbolId::intern("multicall");
  SymbolId match = SymbolId::intern("match");
  SymbolId setq = SymbolId::intern("setq");
  SymbolId get_field = SymbolId::intern("get_field");
  SymbolId unsafe_get_field = SymbolId::intern("unsafe_get_field");
  SymbolId put_fields = SymbolId::intern("put_fields");
  SymbolId unsafe_put_fields = SymbolId::intern("unsafe_put_fields");
  SymbolId instance = SymbolId::intern("instance");
  SymbolId tuple = SymbolId::intern("tuple");
  SymbolId list = SymbolId::intern("list");
  SymbolId code_chunk = SymbolId::intern("code_chunk");
  SymbolId debug_msg = SymbolId::intern("debug_msg");
  SymbolId assert_msg = SymbolId::intern("assert_msg");
  SymbolId compile_warning = SymbolId::intern("compile_warning");
  SymbolId cppif = SymbolId::intern("cppif");
  SymbolId gccif = SymbolId::intern("gccif");
  SymbolId hostif = SymbolId::intern("hostif");
  SymbolId cur_env = SymbolId::intern("current_module_environment_container");
  SymbolId parent_env = SymbolId::intern("parent_module_environment");

  SymbolId defun = SymbolId::intern("defun");
  SymbolId defclass = SymbolId::intern("defclass");
  SymbolId definstance = SymbolId::intern("definstance");
  SymbolId defselector = SymbolId::intern("defselector");
  SymbolId defprimitive = SymbolId::intern("defprimitive");
  SymbolId defciterator = SymbolId::intern("defciterator");
  SymbolId defcmatcher = SymbolId::intern("defcmatcher");
  SymbolId defunmatcher = SymbolId::intern("defunmatcher");
  SymbolId export_values = SymbolId::intern("export_values");
  SymbolId export_value = SymbolId::intern("export_value");
  SymbolId export_macro = SymbolId::intern("export_macro");
  SymbolId export_patmacro = SymbolId::intern("export_patmacro");
  SymbolId export_class = SymbolId::intern("export_class");
  SymbolId export_synonym = SymbolId::intern("export_synonym");

  SymbolId kw_doc = SymbolId::intern("doc");
  SymbolId kw_super = SymbolId::intern("super");
  SymbolId kw_fields = SymbolId::intern("fields");
  SymbolId kw_formals = SymbolId::intern("formals");
  SymbolId kw_else = SymbolId::intern("else");
  SymbolId underscore = SymbolId::intern("_");

  std::set<SymbolId> special;
  std::set<SymbolId> toplevel_only;

  Syms() {
    special = {quote, question, backquote, comma, let, letrec, lambda, if_, cond, and_, or_,
               progn, forever, exit, return_, multicall, match, setq, get_field,
               unsafe_get_field, put_fields, unsafe_put_fields, instance, tuple, list,
               code_chunk, debug_msg, assert_msg, compile_warning, cppif, gccif, hostif,
               cur_env, parent_env};
    toplevel_only = {defun, defclass, definstance, defselector, defprimitive, defciterator,
                     defcmatcher, defunmatcher, export_values, export_value, export_macro,
                     export_patmacro, export_class, export_synonym};
  }
};

const Syms &S() {
  static const Syms s;
  return s;
}

[[noreturn]] void fail(const Location &at, const std::string &msg) {
  throw CompileError(Phase::expand, at, msg);
}

/// Removes a `:doc #{...}#` pair from items[from..] and returns the doc.
std::optional<MacroString> take_doc(std::vector<SExpr> &items, std::size_t from) {
  for (std::size_t i = from; i + 1 < items.size(); ++i) {
    if (items[i].is_keyword(S().kw_doc)) {
      if (!items[i + 1].is_macrostring() && !items[i + 1].is_string())
        fail(items[i + 1].location, ":doc must be followed by a macro-string");
      MacroString doc;
      if (items[i + 1].is_macrostring()) {
        doc = items[i + 1].macrostring();
      } else {
        doc.location = items[i + 1].location;
        doc.chunks.push_back(MacroChunk{MacroChunk::Text{items[i + 1].string_value()}});
      }
      items.erase(items.begin() + static_cast<long>(i), items.begin() + static_cast<long>(i) + 2);
      return doc;
    }
  }
  return std::nullopt;
}

const SExpr &require_symbol(const SExpr &e, const char *what) {
  if (!e.is_symbol())
    fail(e.location, std::string("expected a symbol for ") + what + ", got " + to_string(e));
  return e;
}

const MacroString &require_macrostring(const SExpr &e, const char *what) {
  if (!e.is_macrostring())
    fail(e.location, std::string("expected a macro-string #{...}# for ") + what);
  return e.macrostring();
}

void require_arity(const SExpr &e, std::size_t min, std::size_t max, const char *form) {
  std::size_t n = e.items().size() - 1;
  if (n < min || n > max) {
    std::string range = min == max ? std::to_string(min)
                        : max == std::size_t(-1)
                            ? "at least " + std::to_string(min)
                            : std::to_string(min) + " to " + std::to_string(max);
    fail(e.location, std::string(form) + " expects " + range + " operand(s), got " +
                         std::to_string(n));
  }
}

std::string upcase(std::string s) {
  for (char &c : s)
    if (c >= 'a' && c <= 'z')
      c = static_cast<char>(c - 'a' + 'A');
  return s;
}

void collect_pattern_vars(const Pattern &p, std::set<std::uint32_t> &out) {
  std::visit(
      [&](const auto &n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, pat::Var>)
          out.insert(n.var->uid);
        else if constexpr (std::is_same_v<T, pat::Matcher>) {
          for (auto &s : n.subs)
            collect_pattern_vars(*s, out);
        } else if constexpr (std::is_same_v<T, pat::Instance>) {
          for (auto &f : n.fields)
            collect_pattern_vars(*f.sub, out);
        } else if constexpr (std::is_same_v<T, pat::And>) {
          for (auto &s : n.conjuncts)
            collect_pattern_vars(*s, out);
        } else if constexpr (std::is_same_v<T, pat::Or>) {
          for (auto &s : n.disjuncts)
            collect_pattern_vars(*s, out);
        }
      },
      p.node);
}

FormalList parse_formal_list(const SExpr &list, bool lambda_like) {
  if (!list.is_list())
    fail(list.location, "formal argument list expected, got " + to_string(list));
  FormalList out;
  CType current = CType::value;
  std::set<SymbolId> seen;
  for (const SExpr &item : list.items()) {
    if (item.is_keyword()) {
      auto t = ctype_from_keyword(item.keyword());
      if (!t)
        fail(item.location, "unknown c-type keyword :" + item.keyword().name());
      if (*t == CType::void_)
        fail(item.location, ":void cannot qualify a formal");
      current = *t;
    } else if (item.is_symbol()) {
      if (!seen.insert(item.symbol()).second)
        fail(item.location, "duplicate formal " + item.symbol().name());
      out.push_back(Formal{item.symbol(), current});
    } else {
      fail(item.location, "formal list may only contain symbols and c-type keywords");
    }
  }
  if (lambda_like && !out.empty() && out.front().ctype != CType::value)
    fail(list.location, "the first formal must be a value, not :" +
                            std::string(keyword_name(out.front().ctype)));
  return out;
}

bool is_constructive(const Ast &a) {
  return a.is<form::Lambda>() || a.is<form::Instance>() || a.is<form::Tuple>() ||
         a.is<form::ListCtor>();
}

} // namespace

FormalList parse_formals(const SExpr &list, bool lambda_like) {
  return parse_formal_list(list, lambda_like);
}

Expander::Expander(ConstModuleEnvPtr parent, ExpandOptions opts) : opts_(std::move(opts)) {
  module_.name = opts_.module_name;
  module_.scope = std::make_shared<ModuleEnv>(std::move(parent), opts_.module_name);
  module_.start = std::make_shared<Routine>();
  module_.start->is_start = true;
  module_.start->name = SymbolId::intern(opts_.module_name);
  routine_ = module_.start.get();

  auto mk = [&](const char *n, VarRole role) {
    auto v = std::make_shared<Var>();
    v->name = SymbolId::intern(n);
    v->ctype = CType::value;
    v->role = role;
    v->owner = routine_;
    return v;
  };
  module_.parent_env = mk("parent_env", VarRole::formal);
  module_.module_env = mk("module_env", VarRole::module);
  module_.env_container = mk("env_container", VarRole::module);
  module_.start->formals.push_back(module_.parent_env);
}

void Expander::error(const Location &at, const std::string &msg) const { fail(at, msg); }

void Expander::push_scope() { scopes_.emplace_back(); }
void Expander::pop_scope() { scopes_.pop_back(); }

VarPtr Expander::bind_local(SymbolId name, CType t, const Location &at, VarRole role) {
  if (t == CType::void_)
    fail(at, "variable " + name.name() + " cannot have c-type :void");
  auto v = std::make_shared<Var>();
  v->name = name;
  v->ctype = t;
  v->role = role;
  v->where = at;
  v->owner = routine_;
  if (scopes_.empty())
    push_scope();
  scopes_.back().vars[name] = v;
  return v;
}

BindingPtr Expander::resolve(SymbolId name) const { return module_.scope->lookup(name); }

FormalList Expander::parse_formals(const SExpr &list, bool lambda_like) {
  return parse_formal_list(list, lambda_like);
}

VarPtr Expander::new_module_var(SymbolId name, const Location &at) {
  auto v = std::make_shared<Var>();
  v->name = name;
  v->ctype = CType::value;
  v->role = VarRole::module;
  v->where = at;
  v->owner = module_.start.get();
  return v;
}

void Expander::define(SymbolId name, std::shared_ptr<Binding> b, const Location &at) {
  if (module_.scope->lookup_local(name))
    fail(at, "duplicate definition of " + name.name() + " in module " + module_.name);
  if (S().special.count(name) || S().toplevel_only.count(name))
    fail(at, "cannot redefine the special form " + name.name());
  b->name = name;
  b->where = at;
  b->module = module_.name;
  module_.scope->bind(name, b);
  module_.defined.push_back(b);
}

VarPtr Expander::import_var(const BindingPtr &b) {
  SymbolId key = b->name;
  if (auto it = imports_.find(key); it != imports_.end())
    return it->second;
  auto v = std::make_shared<Var>();
  v->name = key;
  v->ctype = CType::value;
  v->role = VarRole::import;
  v->owner = module_.start.get();
  v->import_name = key.name();
  v->predef_slot = b->predef_slot;
  imports_[key] = v;
  module_.imports.push_back(v);
  return v;
}

AstPtr Expander::value_ref(const BindingPtr &b, const Location &at) {
  if (b->var && b->var->owner == module_.start.get())
    return make_ast(at, form::VarRef{b->var});
  return make_ast(at, form::VarRef{import_var(b)});
}

AstPtr Expander::class_ref(const ClassInfo *cls, const Location &at) {
  BindingPtr b = resolve(cls->name);
  if (!b || b->kind != BindingKind::klass || b->klass.get() != cls)
    fail(at, "class " + cls->name.name() + " is not visible here");
  return value_ref(b, at);
}

// ---------------------------------------------------------------- top level

ExpandedModule Expander::run(const std::vector<SExpr> &unit) {
  if (!unit.empty()) {
    module_.start->where = unit.front().location;
    module_.start->where.line = 1;
    module_.start->where.column = 1;
  }
  for (const SExpr &e : unit)
    expand_toplevel(e);

  module_.env = std::make_shared<ModuleEnv>(module_.scope->parent(), module_.name);
  for (SymbolId s : module_.scope->order()) {
    if (!module_.scope->is_exported(s))
      continue;
    module_.env->bind(s, module_.scope->lookup_local(s));
    module_.env->mark_exported(s);
  }
  return module_;
}

void Expander::expand_toplevel(const SExpr &e) {
  if (e.is_list() && !e.items().empty() && e.items()[0].is_symbol()) {
    SymbolId h = e.items()[0].symbol();
    const Syms &s = S();
    if (h == s.defun) return def_function(e);
    if (h == s.defclass) return def_class(e);
    if (h == s.definstance) return def_instance(e);
    if (h == s.defselector) return def_selector(e);
    if (h == s.defprimitive) return def_primitive(e);
    if (h == s.defciterator) return def_citerator(e);
    if (h == s.defcmatcher) return def_cmatcher(e);
    if (h == s.defunmatcher) return def_funmatcher(e);
    if (h == s.export_values || h == s.export_value) return export_names(e, ExportKind::values);
    if (h == s.export_class) return export_names(e, ExportKind::klass);
    if (h == s.export_synonym) return export_synonym(e);
    if (h == s.export_macro) return export_macro(e, false);
    if (h == s.export_patmacro) return export_macro(e, true);
  }
  module_.start->body.push_back(expand_expr(e));
}

void Expander::def_function(const SExpr &e) {
  std::vector<SExpr> items = e.items();
  auto doc = take_doc(items, 3);
  if (items.size() < 3)
    fail(e.location, "defun expects a name and a formal list");
  SymbolId name = require_symbol(items[1], "defun name").symbol();
  auto b = std::make_shared<Binding>();
  b->kind = BindingKind::function;
  b->var = new_module_var(name, e.location);
  b->function_formals = parse_formals(items[2], true);
  b->doc = doc;
  define(name, b, e.location);
  RoutinePtr r = make_routine(name, items[2], items, 3, e.location);
  r->doc = doc;
  module_.start->body.push_back(make_ast(e.location, form::DefFunction{b->var, r}));
}

void Expander::def_class(const SExpr &e) {
  std::vector<SExpr> items = e.items();
  auto doc = take_doc(items, 2);
  if (items.size() < 2)
    fail(e.location, "defclass expects a class name");
  SymbolId name = require_symbol(items[1], "class name").symbol();
  std::optional<SExpr> super_sx;
  std::optional<SExpr> fields_sx;
  for (std::size_t i = 2; i < items.size(); i += 2) {
    if (i + 1 >= items.size())
      fail(items[i].location, "defclass keyword without a value");
    if (items[i].is_keyword(S().kw_super))
      super_sx = items[i + 1];
    else if (items[i].is_keyword(S().kw_fields))
      fields_sx = items[i + 1];
    else
      fail(items[i].location, "unexpected item in defclass: " + to_string(items[i]));
  }
  if (!super_sx)
    fail(e.location, "defclass " + name.name() + " needs a :super class");
  BindingPtr sb = resolve(require_symbol(*super_sx, "superclass").symbol());
  if (!sb || sb->kind != BindingKind::klass)
    fail(super_sx->location, to_string(*super_sx) + " is not a class");

  auto cls = std::make_shared<ClassInfo>();
  cls->name = name;
  cls->where = e.location;
  cls->super = sb->klass;
  cls->doc = doc;
  cls->all_fields = sb->klass->all_fields;
  std::set<SymbolId> own;
  if (fields_sx) {
    if (!fields_sx->is_list())
      fail(fields_sx->location, ":fields expects a list of field names");
    for (const SExpr &f : fields_sx->items()) {
      SymbolId fname = require_symbol(f, "field name").symbol();
      if (!own.insert(fname).second)
        fail(f.location, "duplicate field " + fname.name() + " in class " + name.name());
      if (BindingPtr prev = resolve(fname); prev && prev->kind == BindingKind::field)
        fail(f.location, "field names must be globally unique: " + fname.name() +
                             " is already a field of " + prev->field->owner->name.name());
      auto fi = std::make_shared<FieldInfo>();
      fi->name = fname;
      fi->owner = cls.get();
      fi->index = static_cast<int>(cls->all_fields.size());
      cls->own_fields.push_back(fi);
      cls->all_fields.push_back(fi);
    }
  }

  auto b = std::make_shared<Binding>();
  b->kind = BindingKind::klass;
  b->klass = cls;
  b->var = new_module_var(name, e.location);
  b->doc = doc;
  define(name, b, e.location);
  for (const FieldPtr &f : cls->own_fields) {
    auto fb = std::make_shared<Binding>();
    fb->kind = BindingKind::field;
    fb->field = f;
    define(f->name, fb, e.location);
  }
  AstPtr super_ref = value_ref(sb, super_sx->location);
  module_.start->body.push_back(make_ast(e.location, form::DefClass{b->var, cls, super_ref}));
}

void Expander::def_instance(const SExpr &e) {
  std::vector<SExpr> items = e.items();
  auto doc = take_doc(items, 3);
  if (items.size() < 3)
    fail(e.location, "definstance expects a name and a class");
  SymbolId name = require_symbol(items[1], "instance name").symbol();
  BindingPtr cb = resolve(require_symbol(items[2], "instance class").symbol());
  if (!cb || cb->kind != BindingKind::klass)
    fail(items[2].location, to_string(items[2]) + " is not a class");
  auto fields = expand_field_inits(cb->klass.get(), items, 3, e.location);
  auto b = std::make_shared<Binding>();
  b->kind = BindingKind::instance;
  b->klass = cb->klass;
  b->var = new_module_var(name, e.location);
  b->doc = doc;
  define(name, b, e.location);
  module_.start->body.push_back(make_ast(
      e.location, form::DefInstance{b->var, cb->klass, value_ref(cb, items[2].location), fields}));
}

void Expander::def_selector(const SExpr &e) {
  std::vector<SExpr> items = e.items();
  auto doc = take_doc(items, 3);
  if (items.size() < 3)
    fail(e.location, "defselector expects a name and a class");
  SymbolId name = require_symbol(items[1], "selector name").symbol();
  BindingPtr cb = resolve(require_symbol(items[2], "selector class").symbol());
  if (!cb || cb->kind != BindingKind::klass)
    fail(items[2].location, to_string(items[2]) + " is not a class");
  SelectorInfo info{name, std::nullopt};
  std::size_t from = 3;
  if (items.size() > 4 && items[3].is_keyword(S().kw_formals)) {
    info.formals = parse_formals(items[4], true);
    from = 5;
  }
  auto fields = expand_field_inits(cb->klass.get(), items, from, e.location);
  auto b = std::make_shared<Binding>();
  b->kind = BindingKind::selector;
  b->selector = info;
  b->klass = cb->klass;
  b->var = new_module_var(name, e.location);
  b->doc = doc;
  define(name, b, e.location);
  module_.start->body.push_back(make_ast(
      e.location, form::DefSelector{b->var, info, value_ref(cb, items[2].location), fields}));
}

namespace {

void check_template_refs(const MacroString &ms, const std::set<SymbolId> &allowed,
                         const std::string &owner) {
  for (const MacroChunk &c : ms.chunks)
    if (c.is_ref() && !allowed.count(c.ref().symbol))
      fail(ms.location, "template of " + owner + " references $" + c.ref().spelling +
                            ", which is neither a formal nor its state symbol");
}

std::set<SymbolId> names_of(std::initializer_list<const FormalList *> lists) {
  std::set<SymbolId> out;
  for (const FormalList *l : lists)
    for (const Formal &f : *l)
      out.insert(f.name);
  return out;
}

} // namespace

void Expander::def_primitive(const SExpr &e) {
  std::vector<SExpr> items = e.items();
  auto doc = take_doc(items, 3);
  if (items.size() != 5)
    fail(e.location, "defprimitive expects: name formals :result-ctype expansion");
  auto def = std::make_shared<PrimitiveDef>();
  def->name = require_symbol(items[1], "primitive name").symbol();
  def->where = e.location;
  def->formals = parse_formals(items[2], false);
  if (!items[3].is_keyword())
    fail(items[3].location, "defprimitive expects a result c-type keyword");
  auto rt = ctype_from_keyword(items[3].keyword());
  if (!rt)
    fail(items[3].location, "unknown c-type keyword " + to_string(items[3]));
  def->result = *rt;
  def->expansion = require_macrostring(items[4], "primitive expansion");
  def->doc = doc;
  check_template_refs(def->expansion, names_of({&def->formals}), "primitive " + def->name.name());
  auto b = std::make_shared<Binding>();
  b->kind = BindingKind::primitive;
  b->primitive = def;
  b->doc = doc;
  define(def->name, b, e.location);
  module_.start->body.push_back(make_ast(e.location, form::DefTemplate{b}));
}

void Expander::def_citerator(const SExpr &e) {
  std::vector<SExpr> items = e.items();
  auto doc = take_doc(items, 5);
  if (items.size() != 7)
    fail(e.location,
         "defciterator expects: name input-formals state local-formals before after");
  auto def = std::make_shared<CIteratorDef>();
  def->name = require_symbol(items[1], "c-iterator name").symbol();
  def->where = e.location;
  def->inputs = parse_formals(items[2], false);
  def->state = require_symbol(items[3], "c-iterator state").symbol();
  def->locals = parse_formals(items[4], false);
  def->before = require_macrostring(items[5], "c-iterator before-expansion");
  def->after = require_macrostring(items[6], "c-iterator after-expansion");
  def->doc = doc;
  auto allowed = names_of({&def->inputs, &def->locals});
  allowed.insert(def->state);
  check_template_refs(def->before, allowed, "c-iterator " + def->name.name());
  check_template_refs(def->after, allowed, "c-iterator " + def->name.name());
  auto b = std::make_shared<Binding>();
  b->kind = BindingKind::citerator;
  b->citerator = def;
  b->doc = doc;
  define(def->name, b, e.location);
  module_.start->body.push_back(make_ast(e.location, form::DefTemplate{b}));
}

void Expander::def_cmatcher(const SExpr &e) {
  std::vector<SExpr> items = e.items();
  auto doc = take_doc(items, 5);
  if (items.size() != 6 && items.size() != 7)
    fail(e.location, "defcmatcher expects: name input-formals output-formals state test [fill]");
  auto def = std::make_shared<CMatcherDef>();
  def->name = require_symbol(items[1], "c-matcher name").symbol();
  def->where = e.location;
  def->inputs = parse_formals(items[2], false);
  if (def->inputs.empty())
    fail(items[2].location, "a c-matcher needs at least the matched thing as input");
  def->outputs = parse_formals(items[3], false);
  def->state = require_symbol(items[4], "c-matcher state").symbol();
  def->test = require_macrostring(items[5], "c-matcher test expansion");
  if (items.size() == 7)
    def->fill = require_macrostring(items[6], "c-matcher fill expansion");
  if (!def->outputs.empty() && !def->fill)
    fail(e.location, "c-matcher " + def->name.name() + " has outputs but no fill expansion");
  def->doc = doc;
  auto allowed = names_of({&def->inputs, &def->outputs});
  allowed.insert(def->state);
  check_template_refs(def->test, allowed, "c-matcher " + def->name.name());
  if (def->fill)
    check_template_refs(*def->fill, allowed, "c-matcher " + def->name.name());
  auto b = std::make_shared<Binding>();
  b->kind = BindingKind::cmatcher;
  b->cmatcher = def;
  b->doc = doc;
  define(def->name, b, e.location);
  module_.start->body.push_back(make_ast(e.location, form::DefTemplate{b}));
}

void Expander::def_funmatcher(const SExpr &e) {
  std::vector<SExpr> items = e.items();
  auto doc = take_doc(items, 4);
  if (items.size() != 5)
    fail(e.location, "defunmatcher expects: name input-formals output-formals function");
  auto def = std::make_shared<FunMatcherDef>();
  def->name = require_symbol(items[1], "fun-matcher name").symbol();
  def->where = e.location;
  def->inputs = parse_formals(items[2], false);
  if (def->inputs.empty())
    fail(items[2].location, "a fun-matcher needs at least the matched thing as input");
  def->outputs = parse_formals(items[3], false);
  def->doc = doc;
  AstPtr fn = expand_expr(items[4]);
  auto b = std::make_shared<Binding>();
  b->kind = BindingKind::funmatcher;
  b->funmatcher = def;
  b->var = new_module_var(def->name, e.location);
  b->doc = doc;
  define(def->name, b, e.location);
  module_.start->body.push_back(
      make_ast(e.location, form::DefFunMatcher{b->var, def, std::move(fn)}));
}

void Expander::export_names(const SExpr &e, ExportKind kind) {
  form::Export ex{kind, {}};
  for (std::size_t i = 1; i < e.items().size(); ++i) {
    const SExpr &item = require_symbol(e.items()[i], "exported name");
    SymbolId name = item.symbol();
    BindingPtr b = resolve(name);
    if (!b)
      fail(item.location, "cannot export unbound name " + name.name());
    if (kind == ExportKind::klass && b->kind != BindingKind::klass)
      fail(item.location, name.name() + " is a " + binding_kind_name(b->kind) + ", not a class");
    if (!module_.scope->lookup_local(name))
      module_.scope->bind(name, b); // re-export of an inherited binding
    module_.scope->mark_exported(name);
    ex.entries.push_back(
        ExportEntry{name, b->is_runtime_value() ? value_ref(b, item.location)->as<form::VarRef>().var
                                                : nullptr});
    if (kind == ExportKind::klass) {
      for (const FieldPtr &f : b->klass->own_fields) {
        if (!module_.scope->lookup_local(f->name))
          module_.scope->bind(f->name, resolve(f->name));
        module_.scope->mark_exported(f->name);
        ex.entries.push_back(ExportEntry{f->name, nullptr});
      }
    }
  }
  module_.start->body.push_back(make_ast(e.location, std::move(ex)));
}

void Expander::export_synonym(const SExpr &e) {
  require_arity(e, 2, 2, "export_synonym");
  SymbolId fresh = require_symbol(e.items()[1], "synonym").symbol();
  const SExpr &old_sx = require_symbol(e.items()[2], "synonym target");
  BindingPtr b = resolve(old_sx.symbol());
  if (!b)
    fail(old_sx.location, "cannot export unbound name " + old_sx.symbol().name());
  if (module_.scope->lookup_local(fresh))
    fail(e.location, "duplicate definition of " + fresh.name() + " in module " + module_.name);
  module_.scope->bind(fresh, b);
  module_.scope->mark_exported(fresh);
  VarPtr v = b->is_runtime_value() ? value_ref(b, old_sx.location)->as<form::VarRef>().var : nullptr;
  module_.start->body.push_back(
      make_ast(e.location, form::Export{ExportKind::synonym, {ExportEntry{fresh, v}}}));
}

void Expander::export_macro(const SExpr &e, bool pattern) {
  const char *what = pattern ? "export_patmacro" : "export_macro";
  require_arity(e, 1, 2, what);
  SymbolId name = require_symbol(e.items()[1], "macro name").symbol();
  SymbolId host = e.items().size() > 2 ? require_symbol(e.items()[2], "macro expander").symbol()
                                       : name;
  auto b = std::make_shared<Binding>();
  if (pattern) {
    const PatMacroFn *fn = MacroRegistry::instance().patmacro(host);
    if (!fn)
      fail(e.location, "no host pattern-macro expander registered as " + host.name());
    b->kind = BindingKind::patmacro;
    b->patmacro = *fn;
  } else {
    const MacroFn *fn = MacroRegistry::instance().macro(host);
    if (!fn)
      fail(e.location, "no host macro expander registered as " + host.name());
    b->kind = BindingKind::macro;
    b->macro = *fn;
  }
  define(name, b, e.location);
  module_.scope->mark_exported(name);
  module_.start->body.push_back(make_ast(
      e.location, form::Export{pattern ? ExportKind::patmacro : ExportKind::macro,
                               {ExportEntry{name, nullptr}}}));
}

// -------------------------------------------------------------- expressions

AstPtr Expander::expand_expr(const SExpr &e) {
  return std::visit(
      [&](const auto &n) -> AstPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, sx::Symbol>)
          return expand_symbol(e);
        else if constexpr (std::is_same_v<T, sx::Keyword>)
          return make_ast(e.location,
                          form::Quote{QuotedConst{QuotedConst::Kind::keyword, n.id, 0, {}}});
        else if constexpr (std::is_same_v<T, sx::Long>)
          return make_ast(e.location, form::LongLit{n.value});
        else if constexpr (std::is_same_v<T, sx::String>)
          return make_ast(e.location, form::StringLit{n.value});
        else if constexpr (std::is_same_v<T, MacroString>)
          fail(e.location, "a macro-string is not an expression");
        else
          return expand_list(e);
      },
      e.node);
}

std::vector<AstPtr> Expander::expand_body(const std::vector<SExpr> &items, std::size_t from) {
  std::vector<AstPtr> out;
  for (std::size_t i = from; i < items.size(); ++i)
    out.push_back(expand_expr(items[i]));
  return out;
}

AstPtr Expander::expand_symbol(const SExpr &e) {
  SymbolId s = e.symbol();
  for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
    if (auto v = it->vars.find(s); v != it->vars.end())
      return make_ast(e.location, form::VarRef{v->second});
  BindingPtr b = resolve(s);
  if (!b)
    fail(e.location, "unbound variable " + s.name());
  if (!b->is_runtime_value())
    fail(e.location, std::string(binding_kind_name(b->kind)) + " " + s.name() +
                         " cannot be used as a value");
  return value_ref(b, e.location);
}

AstPtr Expander::expand_list(const SExpr &e) {
  const auto &items = e.items();
  if (items.empty())
    return make_ast(e.location, form::Nil{});
  const SExpr &head = items[0];
  if (!head.is_symbol()) {
    AstPtr fn = expand_expr(head);
    return make_ast(e.location, form::Apply{fn, expand_body(items, 1)});
  }
  SymbolId h = head.symbol();
  if (S().special.count(h))
    return expand_special(h, e);
  if (S().toplevel_only.count(h))
    fail(e.location, h.name() + " is supposed to appear only at the top-level");
  for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
    if (auto v = it->vars.find(h); v != it->vars.end())
      return make_ast(e.location, form::Apply{make_ast(head.location, form::VarRef{v->second}),
                                              expand_body(items, 1)});
  BindingPtr b = resolve(h);
  if (!b)
    fail(head.location, "unbound function or operator " + h.name());
  switch (b->kind) {
  case BindingKind::macro: {
    AstPtr out = b->macro(e, *this);
    if (!out)
      fail(e.location, "macro " + h.name() + " produced no abstract syntax");
    return out;
  }
  case BindingKind::patmacro:
    fail(e.location, "pattern macro " + h.name() + " used outside of a pattern");
  case BindingKind::primitive: {
    const PrimitiveDef &p = *b->primitive;
    if (items.size() - 1 != p.formals.size())
      fail(e.location, "primitive " + h.name() + " expects " + std::to_string(p.formals.size()) +
                           " argument(s), got " + std::to_string(items.size() - 1));
    return make_ast(e.location, form::PrimitiveCall{b->primitive, expand_body(items, 1)});
  }
  case BindingKind::citerator:
    return expand_citer(b, e);
  case BindingKind::selector: {
    if (items.size() < 2)
      fail(e.location, "sending selector " + h.name() + " needs a receiver");
    AstPtr sel = value_ref(b, head.location);
    AstPtr recv = expand_expr(items[1]);
    return make_ast(e.location, form::Send{sel, recv, expand_body(items, 2)});
  }
  case BindingKind::cmatcher:
  case BindingKind::funmatcher:
    fail(e.location, std::string(binding_kind_name(b->kind)) + " " + h.name() +
                         " may only be used inside a pattern");
  case BindingKind::field:
    fail(e.location, "field " + h.name() + " is not a function");
  default:
    return make_ast(e.location, form::Apply{value_ref(b, head.location), expand_body(items, 1)});
  }
}

AstPtr Expander::expand_special(SymbolId h, const SExpr &e) {
  const Syms &s = S();
  const auto &items = e.items();
  const Location &at = e.location;

  if (h == s.quote) {
    require_arity(e, 1, 1, "quote");
    const SExpr &q = items[1];
    QuotedConst c;
    if (q.is_symbol()) {
      c.kind = QuotedConst::Kind::symbol;
      c.symbol = q.symbol();
    } else if (q.is_keyword()) {
      c.kind = QuotedConst::Kind::keyword;
      c.symbol = q.keyword();
    } else if (q.is_long()) {
      c.kind = QuotedConst::Kind::integer;
      c.integer = q.long_value();
    } else if (q.is_string()) {
      c.kind = QuotedConst::Kind::string;
      c.text = q.string_value();
    } else if (q.is_nil()) {
      return make_ast(at, form::Nil{});
    } else {
      fail(q.location, "cannot quote " + to_string(q));
    }
    return make_ast(at, form::Quote{std::move(c)});
  }
  if (h == s.question)
    fail(at, "pattern " + to_string(e) + " used outside of a match pattern");
  if (h == s.backquote || h == s.comma)
    fail(at, "backquote and comma have no meaning in this dialect");
  if (h == s.let)
    return expand_let(e, false);
  if (h == s.letrec)
    return expand_let(e, true);
  if (h == s.lambda)
    return expand_lambda(e);
  if (h == s.if_) {
    require_arity(e, 2, 3, "if");
    AstPtr test = expand_expr(items[1]);
    AstPtr then = expand_expr(items[2]);
    AstPtr otherwise = items.size() > 3 ? expand_expr(items[3]) : nullptr;
    return make_ast(at, form::If{test, then, otherwise});
  }
  if (h == s.cond) {
    form::Cond c;
    for (std::size_t i = 1; i < items.size(); ++i) {
      const SExpr &cl = items[i];
      if (!cl.is_list() || cl.items().empty())
        fail(cl.location, "cond clause must be a non-empty list");
      form::CondClause cc;
      if (cl.items()[0].is_keyword(s.kw_else)) {
        if (i + 1 != items.size())
          fail(cl.location, ":else must be the last cond clause");
      } else {
        cc.test = expand_expr(cl.items()[0]);
      }
      cc.body = expand_body(cl.items(), 1);
      c.clauses.push_back(std::move(cc));
    }
    return make_ast(at, std::move(c));
  }
  if (h == s.and_ || h == s.or_) {
    require_arity(e, 1, std::size_t(-1), h == s.and_ ? "and" : "or");
    if (h == s.and_)
      return make_ast(at, form::And{expand_body(items, 1)});
    return make_ast(at, form::Or{expand_body(items, 1)});
  }
  if (h == s.progn)
    return make_ast(at, form::Progn{expand_body(items, 1)});
  if (h == s.forever) {
    require_arity(e, 1, std::size_t(-1), "forever");
    auto label = std::make_shared<Label>();
    label->name = require_symbol(items[1], "loop label").symbol();
    label->where = at;
    push_scope();
    scopes_.back().labels[label->name] = label;
    auto body = expand_body(items, 2);
    pop_scope();
    return make_ast(at, form::Forever{label, std::move(body)});
  }
  if (h == s.exit) {
    require_arity(e, 1, std::size_t(-1), "exit");
    SymbolId name = require_symbol(items[1], "loop label").symbol();
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (auto l = it->labels.find(name); l != it->labels.end())
        return make_ast(at, form::Exit{l->second, expand_body(items, 2)});
    fail(at, "exit label " + name.name() + " is not lexically enclosed by a matching forever");
  }
  if (h == s.return_)
    return make_ast(at, form::Return{expand_body(items, 1)});
  if (h == s.multicall) {
    require_arity(e, 2, std::size_t(-1), "multicall");
    FormalList fl = parse_formals(items[1], true);
    if (fl.empty())
      fail(items[1].location, "multicall needs at least one formal for the primary result");
    AstPtr call = expand_expr(items[2]);
    if (!call->is<form::Apply>() && !call->is<form::Send>())
      fail(items[2].location, "multicall expects an application or a send");
    push_scope();
    std::vector<VarPtr> formals;
    for (const Formal &f : fl)
      formals.push_back(bind_local(f.name, f.ctype, items[1].location));
    auto body = expand_body(items, 3);
    pop_scope();
    return make_ast(at, form::Multicall{std::move(formals), call, std::move(body)});
  }
  if (h == s.match)
    return expand_match(e);
  if (h == s.setq) {
    require_arity(e, 2, 2, "setq");
    SymbolId name = require_symbol(items[1], "assigned variable").symbol();
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (auto v = it->vars.find(name); v != it->vars.end())
        return make_ast(at, form::Setq{v->second, expand_expr(items[2])});
    BindingPtr b = resolve(name);
    if (!b)
      fail(items[1].location, "unbound variable " + name.name());
    fail(items[1].location, "cannot assign to " + std::string(binding_kind_name(b->kind)) + " " +
                                name.name());
  }
  if (h == s.get_field || h == s.unsafe_get_field)
    return expand_field_access(e, h == s.unsafe_get_field);
  if (h == s.put_fields || h == s.unsafe_put_fields)
    return expand_put_fields(e, h == s.unsafe_put_fields);
  if (h == s.instance)
    return expand_instance(e);
  if (h == s.tuple)
    return make_ast(at, form::Tuple{expand_body(items, 1)});
  if (h == s.list)
    return make_ast(at, form::ListCtor{expand_body(items, 1)});
  if (h == s.code_chunk)
    return expand_code_chunk(e);
  if (h == s.debug_msg) {
    require_arity(e, 2, 2, "debug_msg");
    if (!items[2].is_string())
      fail(items[2].location, "debug_msg expects a message string");
    return make_ast(at, form::DebugMsg{expand_expr(items[1]), items[2].string_value()});
  }
  if (h == s.assert_msg) {
    require_arity(e, 2, 2, "assert_msg");
    if (!items[1].is_string())
      fail(items[1].location, "assert_msg expects a message string");
    return make_ast(at, form::AssertMsg{items[1].string_value(), expand_expr(items[2])});
  }
  if (h == s.compile_warning) {
    require_arity(e, 2, 2, "compile_warning");
    if (!items[1].is_string())
      fail(items[1].location, "compile_warning expects a message string");
    return make_ast(at, form::CompileWarning{items[1].string_value(), expand_expr(items[2])});
  }
  if (h == s.cppif) {
    require_arity(e, 2, 3, "cppif");
    std::string sym;
    if (items[1].is_symbol())
      sym = upcase(items[1].symbol().name());
    else if (items[1].is_string())
      sym = items[1].string_value();
    else
      fail(items[1].location, "cppif expects a preprocessor symbol");
    AstPtr then = expand_expr(items[2]);
    AstPtr otherwise = items.size() > 3 ? expand_expr(items[3]) : nullptr;
    return make_ast(at, form::CppIf{sym, then, otherwise});
  }
  if (h == s.gccif || h == s.hostif) {
    require_arity(e, 1, std::size_t(-1), "hostif");
    if (!items[1].is_string())
      fail(items[1].location, "hostif expects a version prefix string");
    const std::string &prefix = items[1].string_value();
    bool selected = opts_.host_version.compare(0, prefix.size(), prefix) == 0;
    form::HostIf hi{prefix, selected, {}};
    if (selected)
      hi.body = expand_body(items, 2);
    return make_ast(at, std::move(hi));
  }
  if (h == s.cur_env) {
    require_arity(e, 0, 0, "current_module_environment_container");
    return make_ast(at, form::CurrentEnvContainer{});
  }
  if (h == s.parent_env) {
    require_arity(e, 0, 0, "parent_module_environment");
    return make_ast(at, form::ParentEnv{});
  }
  fail(at, "unhandled special form " + h.name());
}

AstPtr Expander::expand_let(const SExpr &e, bool rec) {
  const char *what = rec ? "letrec" : "let";
  require_arity(e, 1, std::size_t(-1), what);
  const SExpr &bl = e.items()[1];
  if (!bl.is_list())
    fail(bl.location, std::string(what) + " expects a list of bindings");

  struct Parsed {
    SymbolId name;
    CType ctype;
    const SExpr *init;
    Location where;
    bool declared;
  };
  std::vector<Parsed> parsed;
  for (const SExpr &b : bl.items()) {
    if (!b.is_list() || b.items().size() < 2 || b.items().size() > 3)
      fail(b.location, std::string("malformed ") + what + " binding " + to_string(b));
    const auto &bi = b.items();
    CType t = CType::value;
    std::size_t k = 0;
    if (bi.size() == 3) {
      if (!bi[0].is_keyword())
        fail(bi[0].location, "binding c-type must be a keyword");
      auto ct = ctype_from_keyword(bi[0].keyword());
      if (!ct)
        fail(bi[0].location, "unknown c-type keyword " + to_string(bi[0]));
      t = *ct;
      k = 1;
    }
    if (t == CType::void_)
      fail(bi[0].location, "a local cannot have c-type :void");
    parsed.push_back(
        {require_symbol(bi[k], "bound variable").symbol(), t, &bi[k + 1], b.location, k == 1});
  }

  push_scope();
  std::vector<LetBinding> bindings;
  if (rec) {
    for (const Parsed &p : parsed)
      bindings.push_back({bind_local(p.name, p.ctype, p.where), nullptr});
    for (std::size_t i = 0; i < parsed.size(); ++i)
      bindings[i].var->ctype_declared = parsed[i].declared;
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      bindings[i].init = expand_expr(*parsed[i].init);
      if (!is_constructive(*bindings[i].init))
        fail(parsed[i].init->location,
             "letrec bindings should have only constructive expressions (lambda, instance, "
             "tuple, list)");
    }
  } else {
    for (const Parsed &p : parsed) {
      AstPtr init = expand_expr(*p.init);
      bindings.push_back({bind_local(p.name, p.ctype, p.where), init});
      bindings.back().var->ctype_declared = p.declared;
    }
  }
  auto body = expand_body(e.items(), 2);
  pop_scope();
  if (rec)
    return make_ast(e.location, form::Letrec{std::move(bindings), std::move(body)});
  return make_ast(e.location, form::Let{std::move(bindings), std::move(body)});
}

RoutinePtr Expander::make_routine(SymbolId name, const SExpr &formals,
                                  const std::vector<SExpr> &body, std::size_t body_from,
                                  const Location &at) {
  auto r = std::make_shared<Routine>();
  r->name = name;
  r->where = at;
  r->parent = routine_;
  Routine *saved = routine_;
  PatternScope *saved_pat = pattern_scope_;
  pattern_scope_ = nullptr;
  routine_ = r.get();
  push_scope();
  for (const Formal &f : parse_formals(formals, true))
    r->formals.push_back(bind_local(f.name, f.ctype, formals.location, VarRole::formal));
  r->body = expand_body(body, body_from);
  pop_scope();
  routine_ = saved;
  pattern_scope_ = saved_pat;
  return r;
}

AstPtr Expander::expand_lambda(const SExpr &e) {
  require_arity(e, 1, std::size_t(-1), "lambda");
  return make_ast(e.location, form::Lambda{make_routine(SymbolId(), e.items()[1], e.items(), 2,
                                                        e.location)});
}

AstPtr Expander::expand_match(const SExpr &e) {
  require_arity(e, 1, std::size_t(-1), "match");
  form::Match m;
  m.subject = expand_expr(e.items()[1]);
  for (std::size_t i = 2; i < e.items().size(); ++i) {
    const SExpr &cl = e.items()[i];
    if (!cl.is_list() || cl.items().empty())
      fail(cl.location, "match clause must be a list starting with a pattern");
    PatternScope ps;
    PatternScope *saved = pattern_scope_;
    pattern_scope_ = &ps;
    PatternPtr p = expand_pattern(cl.items()[0]);
    pattern_scope_ = saved;
    push_scope();
    for (auto &[name, v] : ps.vars)
      scopes_.back().vars[name] = v;
    auto body = expand_body(cl.items(), 1);
    pop_scope();
    m.clauses.push_back(MatchClause{cl.location, p, ps.order, std::move(body)});
  }
  return make_ast(e.location, std::move(m));
}

PatternPtr Expander::expand_pattern(const SExpr &e) {
  if (!pattern_scope_)
    fail(e.location, "pattern used outside of a match clause");
  if (!e.has_head(S().question))
    return make_pattern(e.location, pat::Const{expand_expr(e)});
  if (e.items().size() != 2)
    fail(e.location, "malformed pattern " + to_string(e));
  const SExpr &x = e.items()[1];
  if (x.is_symbol()) {
    if (x.symbol() == S().underscore)
      return make_pattern(e.location, pat::Wildcard{});
    auto &vars = pattern_scope_->vars;
    auto it = vars.find(x.symbol());
    if (it == vars.end()) {
      auto v = std::make_shared<Var>();
      v->name = x.symbol();
      v->role = VarRole::pattern;
      v->where = x.location;
      v->owner = routine_;
      v->ctype_inferred = false;
      it = vars.emplace(x.symbol(), v).first;
      pattern_scope_->order.push_back(v);
    }
    return make_pattern(e.location, pat::Var{it->second});
  }
  if (!x.is_list() || x.items().empty() || !x.items()[0].is_symbol())
    fail(x.location, "invalid pattern " + to_string(e));
  SymbolId h = x.items()[0].symbol();
  if (h == S().and_ || h == S().or_) {
    if (x.items().size() < 2)
      fail(x.location, "empty pattern conjunction or disjunction");
    std::vector<PatternPtr> subs;
    for (std::size_t i = 1; i < x.items().size(); ++i)
      subs.push_back(expand_pattern(x.items()[i]));
    if (h == S().and_)
      return make_pattern(e.location, pat::And{std::move(subs)});
    std::set<std::uint32_t> first;
    collect_pattern_vars(*subs[0], first);
    for (std::size_t i = 1; i < subs.size(); ++i) {
      std::set<std::uint32_t> other;
      collect_pattern_vars(*subs[i], other);
      if (other != first)
        fail(subs[i]->where,
             "every branch of a disjunctive pattern must bind the same pattern variables");
    }
    return make_pattern(e.location, pat::Or{std::move(subs)});
  }
  if (h == S().instance)
    return expand_instance_pattern(x);
  BindingPtr b = resolve(h);
  if (!b)
    fail(x.location, "unbound matcher " + h.name());
  if (b->kind == BindingKind::cmatcher || b->kind == BindingKind::funmatcher)
    return expand_matcher_pattern(b, x);
  if (b->kind == BindingKind::patmacro) {
    PatternPtr out = b->patmacro(x, *this);
    if (!out)
      fail(x.location, "pattern macro " + h.name() + " produced no pattern");
    return out;
  }
  fail(x.location, h.name() + " is a " + binding_kind_name(b->kind) + ", not a matcher");
}

PatternPtr Expander::expand_matcher_pattern(const BindingPtr &b, const SExpr &x) {
  const FormalList &in = b->cmatcher ? b->cmatcher->inputs : b->funmatcher->inputs;
  const FormalList &out = b->cmatcher ? b->cmatcher->outputs : b->funmatcher->outputs;
  std::size_t nin = in.size() - 1;
  std::size_t nargs = x.items().size() - 1;
  if (nargs != nin + out.size())
    fail(x.location, "matcher " + b->name.name() + " expects " + std::to_string(nin) +
                         " input(s) and " + std::to_string(out.size()) + " sub-pattern(s), got " +
                         std::to_string(nargs) + " argument(s)");
  pat::Matcher m;
  m.matcher = b;
  if (b->kind == BindingKind::funmatcher)
    m.funmatcher_ref = value_ref(b, x.location);
  PatternScope *ps = pattern_scope_;
  pattern_scope_ = nullptr;
  for (std::size_t i = 0; i < nin; ++i)
    m.inputs.push_back(expand_expr(x.items()[1 + i]));
  pattern_scope_ = ps;
  for (std::size_t j = 0; j < out.size(); ++j)
    m.subs.push_back(expand_pattern(x.items()[1 + nin + j]));
  return make_pattern(x.location, std::move(m));
}

PatternPtr Expander::expand_instance_pattern(const SExpr &x) {
  if (x.items().size() < 2)
    fail(x.location, "instance pattern needs a class");
  BindingPtr cb = resolve(require_symbol(x.items()[1], "instance pattern class").symbol());
  if (!cb || cb->kind != BindingKind::klass)
    fail(x.items()[1].location, to_string(x.items()[1]) + " is not a class");
  pat::Instance ip;
  ip.klass = cb->klass;
  ip.class_ref = value_ref(cb, x.items()[1].location);
  std::set<SymbolId> seen;
  for (std::size_t i = 2; i < x.items().size(); i += 2) {
    if (i + 1 >= x.items().size())
      fail(x.items()[i].location, "field keyword without a sub-pattern");
    FieldPtr f = resolve_field(x.items()[i]);
    if (!cb->klass->is_subclass_of(f->owner))
      fail(x.items()[i].location, "field " + f->name.name() + " does not belong to class " +
                                      cb->klass->name.name());
    if (!seen.insert(f->name).second)
      fail(x.items()[i].location, "duplicate field " + f->name.name());
    ip.fields.push_back(pat::FieldPat{f, expand_pattern(x.items()[i + 1])});
  }
  return make_pattern(x.location, std::move(ip));
}

AstPtr Expander::expand_citer(const BindingPtr &b, const SExpr &e) {
  const CIteratorDef &def = *b->citerator;
  const auto &items = e.items();
  if (items.size() < 3)
    fail(e.location, "c-iterator " + def.name.name() +
                         " expects an input list and a local formal list");
  if (!items[1].is_list())
    fail(items[1].location, "c-iterator inputs must be a list");
  if (items[1].items().size() != def.inputs.size())
    fail(items[1].location, "c-iterator " + def.name.name() + " expects " +
                                std::to_string(def.inputs.size()) + " input(s), got " +
                                std::to_string(items[1].items().size()));
  form::CIterInvoke ci;
  ci.iter = b->citerator;
  ci.inputs = expand_body(items[1].items(), 0);
  FormalList locals = parse_formals(items[2], false);
  if (locals.size() != def.locals.size())
    fail(items[2].location, "c-iterator " + def.name.name() + " binds " +
                                std::to_string(def.locals.size()) + " local(s), got " +
                                std::to_string(locals.size()));
  for (std::size_t i = 0; i < locals.size(); ++i)
    if (locals[i].ctype != def.locals[i].ctype)
      fail(items[2].location, "c-iterator local " + locals[i].name.name() + " must be :" +
                                  std::string(keyword_name(def.locals[i].ctype)));
  push_scope();
  for (const Formal &f : locals)
    ci.locals.push_back(bind_local(f.name, f.ctype, items[2].location));
  ci.body = expand_body(items, 3);
  pop_scope();
  return make_ast(e.location, std::move(ci));
}

FieldPtr Expander::resolve_field(const SExpr &kw) {
  if (!kw.is_keyword())
    fail(kw.location, "field keyword expected, got " + to_string(kw));
  BindingPtr b = resolve(kw.keyword());
  if (!b || b->kind != BindingKind::field)
    fail(kw.location, "unknown field :" + kw.keyword().name());
  return b->field;
}

AstPtr Expander::expand_field_access(const SExpr &e, bool unsafe) {
  require_arity(e, 2, 2, unsafe ? "unsafe_get_field" : "get_field");
  FieldPtr f = resolve_field(e.items()[1]);
  AstPtr obj = expand_expr(e.items()[2]);
  return make_ast(e.location,
                  form::GetField{f, obj, class_ref(f->owner, e.items()[1].location), unsafe});
}

AstPtr Expander::expand_put_fields(const SExpr &e, bool unsafe) {
  require_arity(e, 1, std::size_t(-1), unsafe ? "unsafe_put_fields" : "put_fields");
  form::PutFields pf;
  pf.unsafe = unsafe;
  pf.object = expand_expr(e.items()[1]);
  const auto &items = e.items();
  for (std::size_t i = 2; i < items.size(); i += 2) {
    if (i + 1 >= items.size())
      fail(items[i].location, "field keyword without a value");
    FieldPtr f = resolve_field(items[i]);
    pf.fields.push_back(FieldInit{f, expand_expr(items[i + 1])});
    pf.class_refs.push_back(class_ref(f->owner, items[i].location));
  }
  return make_ast(e.location, std::move(pf));
}

AstPtr Expander::expand_instance(const SExpr &e) {
  require_arity(e, 1, std::size_t(-1), "instance");
  BindingPtr cb = resolve(require_symbol(e.items()[1], "instance class").symbol());
  if (!cb || cb->kind != BindingKind::klass)
    fail(e.items()[1].location, to_string(e.items()[1]) + " is not a class");
  auto fields = expand_field_inits(cb->klass.get(), e.items(), 2, e.location);
  return make_ast(e.location, form::Instance{cb->klass, value_ref(cb, e.items()[1].location),
                                             std::move(fields)});
}

std::vector<FieldInit> Expander::expand_field_inits(const ClassInfo *cls,
                                                    const std::vector<SExpr> &items,
                                                    std::size_t from, const Location &at) {
  std::vector<FieldInit> out;
  std::set<SymbolId> seen;
  for (std::size_t i = from; i < items.size(); i += 2) {
    if (i + 1 >= items.size())
      fail(items[i].location, "field keyword without a value");
    FieldPtr f = resolve_field(items[i]);
    if (!cls->is_subclass_of(f->owner))
      fail(items[i].location,
           "field " + f->name.name() + " does not belong to class " + cls->name.name());
    if (!seen.insert(f->name).second)
      fail(items[i].location, "duplicate field " + f->name.name());
    out.push_back(FieldInit{f, expand_expr(items[i + 1])});
  }
  (void)at;
  return out;
}

AstPtr Expander::expand_code_chunk(const SExpr &e) {
  require_arity(e, 2, 2, "code_chunk");
  SymbolId state = require_symbol(e.items()[1], "code_chunk state").symbol();
  const MacroString &ms = require_macrostring(e.items()[2], "code_chunk body");
  form::CodeChunk cc{state, ms, {}};
  std::set<SymbolId> seen;
  for (const MacroChunk &c : ms.chunks) {
    if (!c.is_ref() || c.ref().symbol == state || !seen.insert(c.ref().symbol).second)
      continue;
    SymbolId name = c.ref().symbol;
    AstPtr value;
    for (auto it = scopes_.rbegin(); it != scopes_.rend() && !value; ++it)
      if (auto v = it->vars.find(name); v != it->vars.end())
        value = make_ast(e.location, form::VarRef{v->second});
    if (!value)
      if (BindingPtr b = resolve(name); b && b->is_runtime_value())
        value = value_ref(b, e.location);
    cc.refs.push_back(form::ChunkRef{name, value});
  }
  return make_ast(e.location, std::move(cc));
}

ExpandedModule expand_unit(const std::vector<SExpr> &unit, ConstModuleEnvPtr parent,
                           const ExpandOptions &opts) {
  return Expander(std::move(parent), opts).run(unit);
}

} // namespace meltlite
