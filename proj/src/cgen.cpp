#include "meltlite/cgen.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>

namespace meltlite {

namespace {

[[noreturn]] void fail(const Location &at, const std::string &msg) {
  throw CompileError(Phase::emit, at, msg);
}

bool written_upper(const std::string &spelling) {
  bool letter = false;
  for (char c : spelling) {
    if (std::islower(static_cast<unsigned char>(c)))
      return false;
    letter = letter || std::isupper(static_cast<unsigned char>(c));
  }
  return letter;
}

std::string upper(std::string s) {
  for (char &c : s)
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string comment_safe(std::string s) {
  for (std::size_t p; (p = s.find("*/")) != std::string::npos;)
    s.replace(p, 2, "* /");
  return s;
}

std::string long_literal(std::int64_t v) {
  if (v == LLONG_MIN)
    return "(-9223372036854775807L-1)";
  return std::to_string(v) + "L";
}

std::string loc_string(const Location &at) {
  return at.file_name() + ":" + std::to_string(at.line);
}

std::string predef_enum(const std::string &name) { return "MLT_PREDEF_" + upper(mangle(name)); }

/// Where an expression's result goes. An empty lhs discards it.
struct Dest {
  std::string lhs;
  CType ctype = CType::void_;
  bool in_frame = false; // lhs is a frame slot, visible to the collector

  bool none() const { return lhs.empty(); }
};

struct RoutineNames {
  std::unordered_map<const Routine *, std::string> c_name;
  std::unordered_map<const Routine *, int> index;
};

/// Template text as a C statement: adds the final `;` unless already there.
std::string as_statement(std::string text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.pop_back();
  if (text.empty() || (text.back() != ';' && text.back() != '}'))
    text += ';';
  return text;
}

/// Removes `name: ;` lines no goto refers to.
std::string drop_unused_labels(const std::string &text) {
  std::set<std::string> targets;
  for (std::size_t p = text.find("goto "); p != std::string::npos; p = text.find("goto ", p + 5)) {
    std::size_t e = text.find(';', p);
    if (e != std::string::npos)
      targets.insert(text.substr(p + 5, e - p - 5));
  }
  std::string out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    if (l.size() > 3 && l.compare(l.size() - 3, 3, ": ;") == 0) {
      std::string name = l.substr(0, l.size() - 3);
      bool ident = std::all_of(name.begin(), name.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_';
      });
      if (ident && !targets.count(name))
        continue;
    }
    out += l;
    out += '\n';
  }
  return out;
}

class RoutineEmitter {
public:
  RoutineEmitter(const ModuleUnit &unit, const Routine &r, EmitCtx &ctx, const RoutineNames &names)
      : unit_(unit), r_(r), ctx_(ctx), names_(names) {}

  std::string run();

private:
  const ModuleUnit &unit_;
  const Routine &r_;
  EmitCtx &ctx_;
  const RoutineNames &names_;

  FrameLayout layout_;
  std::unordered_map<std::uint32_t, std::string> access_;
  std::unordered_map<std::uint32_t, int> closed_;
  std::vector<std::string> value_comments_;
  std::vector<std::string> stuff_decls_;
  std::vector<bool> scratch_busy_;
  std::unordered_map<std::uint32_t, int> label_ordinal_;

  std::ostringstream out_;
  int indent_ = 1;
  std::string last_line_;

  void line(const std::string &s) {
    out_ << std::string(2 * indent_, ' ') << s << '\n';
  }
  void raw(const std::string &s) { out_ << s << '\n'; }
  void label(const std::string &l) { out_ << l << ": ;\n"; }

  void line_directive(const Location &at) {
    if (!ctx_.line_directives || !at.file)
      return;
    std::string key = at.file_name() + ":" + std::to_string(at.line);
    if (key == last_line_)
      return;
    last_line_ = key;
    raw("#ifdef MELTLITE_WITH_LINE");
    raw("#line " + std::to_string(at.line) + " " + c_string_literal(at.file_name()));
    raw("#endif");
  }

  void build_layout();
  std::string var(const VarPtr &v, const Location &at) const;
  std::string slot_of(const VarPtr &v, const Location &at) const;
  bool has_slot(const VarPtr &v) const { return access_.count(v->uid) != 0; }
  std::string atom(const Ast &a) const;
  std::string quote(const QuotedConst &q) const;

  int acquire_scratch();
  void release_scratch(int i) { scratch_busy_[i] = false; }
  std::string scratch_text(int i) const {
    return "meltfram__.mcfr_varptr[" + std::to_string(layout_.value_slots + i) + "]";
  }

  struct Marshal {
    std::string descr;
    std::vector<std::string> sets;
    std::vector<int> scratch;
  };
  Marshal marshal_args(const std::vector<AstPtr> &args, std::size_t from, const std::string &tab);
  Marshal marshal_results(const std::vector<VarPtr> &vars, std::size_t from, const std::string &tab,
                          const Location &at);
  std::string call_text(const AstPtr &call, const Marshal &args, const Marshal &res,
                        const std::string &argtab, const std::string &restab);
  void emit_call(const AstPtr &call, const std::vector<VarPtr> &result_vars, const Dest &d);

  std::string closure_create(const Routine &r) const;
  void closure_fill(const Routine &r, const std::string &target, const Location &at);
  std::string routine_label(const LabelPtr &l, const char *suffix);

  void assign(const Dest &d, const std::string &rhs) {
    if (!d.none())
      line(d.lhs + " = " + rhs + ";");
  }
  void body(const std::vector<AstPtr> &items, const Dest &d);
  void stmt(const AstPtr &e, const Dest &d);
  void emit_match(const form::Match &m, const Dest &d);
  void emit_return(const form::Return &n, const Location &at);
  void clear_results();
  void prologue_args();
};

std::string RoutineEmitter::routine_label(const LabelPtr &l, const char *suffix) {
  auto [it, fresh] = label_ordinal_.emplace(l->uid, static_cast<int>(label_ordinal_.size()) + 1);
  (void)fresh;
  return "mltlab_" + std::to_string(it->second) + "_" + suffix;
}

void RoutineEmitter::build_layout() {
  layout_ = compute_layout(r_);
  int value = 0;
  std::map<CType, int> per_type;
  for (const VarPtr &v : r_.slots) {
    if (is_value(v->ctype)) {
      access_[v->uid] = "meltfram__.mcfr_varptr[" + std::to_string(value++) + "]";
      value_comments_.push_back(v->display_name());
    } else {
      const CTypeDesc &d = describe(v->ctype);
      std::string member = std::string(d.slot_prefix) + "_" + std::to_string(per_type[v->ctype]++);
      access_[v->uid] = "meltfram__." + member;
      stuff_decls_.push_back(std::string(d.c_type) + " " + member + "; /* " +
                             comment_safe(v->display_name()) + " */");
    }
  }
  for (std::size_t i = 0; i < r_.closed.size(); ++i)
    closed_[r_.closed[i]->uid] = static_cast<int>(i);
}

std::string RoutineEmitter::var(const VarPtr &v, const Location &at) const {
  if (auto it = access_.find(v->uid); it != access_.end())
    return it->second;
  if (auto it = closed_.find(v->uid); it != closed_.end())
    return "mlt_closure_ref(meltfram__.mcfr_clos, " + std::to_string(it->second) + ")";
  fail(at, "variable " + v->display_name() + " is not accessible from this function");
}

std::string RoutineEmitter::slot_of(const VarPtr &v, const Location &at) const {
  if (auto it = access_.find(v->uid); it != access_.end())
    return it->second;
  fail(at, "variable " + v->display_name() + " has no frame slot in this function");
}

std::string RoutineEmitter::atom(const Ast &a) const {
  if (a.is<form::VarRef>())
    return var(a.as<form::VarRef>().var, a.where);
  if (a.is<form::LongLit>())
    return long_literal(a.as<form::LongLit>().value);
  if (a.is<form::StringLit>())
    return c_string_literal(a.as<form::StringLit>().value);
  if (a.is<form::Nil>())
    return "((mlt_val)0)";
  fail(a.where, "internal: operand " + to_string(a) + " is not atomic");
}

std::string RoutineEmitter::quote(const QuotedConst &q) const {
  switch (q.kind) {
  case QuotedConst::Kind::symbol:
    return "mlt_intern_symbol(mltctx, " + c_string_literal(q.symbol.name()) + ")";
  case QuotedConst::Kind::keyword:
    return "mlt_intern_keyword(mltctx, " + c_string_literal(q.symbol.name()) + ")";
  case QuotedConst::Kind::integer:
    return "mlt_box_long(mltctx, mlt_predef(mltctx, MLT_PREDEF_DISCR_CONSTANT_INTEGER), " +
           long_literal(q.integer) + ")";
  case QuotedConst::Kind::string:
    return "mlt_make_string(mltctx, mlt_predef(mltctx, MLT_PREDEF_DISCR_STRING), " +
           c_string_literal(q.text) + ")";
  }
  return "((mlt_val)0)";
}

int RoutineEmitter::acquire_scratch() {
  for (std::size_t i = 0; i < scratch_busy_.size(); ++i)
    if (!scratch_busy_[i]) {
      scratch_busy_[i] = true;
      return static_cast<int>(i);
    }
  scratch_busy_.push_back(true);
  return static_cast<int>(scratch_busy_.size()) - 1;
}

RoutineEmitter::Marshal RoutineEmitter::marshal_args(const std::vector<AstPtr> &args,
                                                     std::size_t from, const std::string &tab) {
  Marshal m;
  for (std::size_t i = from; i < args.size(); ++i) {
    const Ast &a = *args[i];
    const CTypeDesc &d = describe(a.ctype);
    std::string elt = tab + "[" + std::to_string(i - from) + "]." + std::string(d.param_member);
    m.descr += d.descriptor;
    if (is_value(a.ctype)) {
      std::string addr;
      if (a.is<form::VarRef>() && has_slot(a.as<form::VarRef>().var)) {
        addr = "&" + slot_of(a.as<form::VarRef>().var, a.where);
      } else {
        int s = acquire_scratch();
        m.scratch.push_back(s);
        m.sets.push_back(scratch_text(s) + " = " + atom(a) + ";");
        addr = "&" + scratch_text(s);
      }
      m.sets.push_back(elt + " = " + addr + ";");
    } else {
      m.sets.push_back(elt + " = " + atom(a) + ";");
    }
  }
  return m;
}

RoutineEmitter::Marshal RoutineEmitter::marshal_results(const std::vector<VarPtr> &vars,
                                                        std::size_t from, const std::string &tab,
                                                        const Location &at) {
  Marshal m;
  for (std::size_t i = from; i < vars.size(); ++i) {
    const CTypeDesc &d = describe(vars[i]->ctype);
    m.descr += d.descriptor;
    m.sets.push_back(tab + "[" + std::to_string(i - from) + "]." + std::string(d.result_member) +
                     " = &" + slot_of(vars[i], at) + ";");
  }
  return m;
}

std::string RoutineEmitter::call_text(const AstPtr &call, const Marshal &args, const Marshal &res,
                                      const std::string &argtab, const std::string &restab) {
  std::string a = args.descr.empty() ? "\"\", (union mlt_param *)0"
                                     : c_string_literal(args.descr) + ", " + argtab;
  std::string r = res.descr.empty() ? "\"\", (union mlt_param *)0"
                                    : c_string_literal(res.descr) + ", " + restab;
  if (call->is<form::Apply>()) {
    const auto &n = call->as<form::Apply>();
    std::string first = n.args.empty() ? "((mlt_val)0)" : atom(*n.args[0]);
    return "mlt_apply(mltctx, " + atom(*n.fn) + ", " + first + ", " + a + ", " + r + ")";
  }
  const auto &n = call->as<form::Send>();
  return "mlt_send(mltctx, " + atom(*n.selector) + ", " + atom(*n.receiver) + ", " + a + ", " + r +
         ")";
}

void RoutineEmitter::emit_call(const AstPtr &call, const std::vector<VarPtr> &result_vars,
                               const Dest &d) {
  const std::vector<AstPtr> &args =
      call->is<form::Apply>() ? call->as<form::Apply>().args : call->as<form::Send>().args;
  std::size_t from = call->is<form::Apply>() ? 1 : 0;
  Marshal am = marshal_args(args, from, "mltargs");
  Marshal rm = marshal_results(result_vars, 1, "mltres", call->where);
  bool block = !am.descr.empty() || !rm.descr.empty();
  if (block) {
    line("{");
    ++indent_;
    if (!am.descr.empty())
      line("union mlt_param mltargs[" + std::to_string(am.descr.size()) + "];");
    if (!rm.descr.empty())
      line("union mlt_param mltres[" + std::to_string(rm.descr.size()) + "];");
    for (const std::string &s : am.sets)
      line(s);
    for (const std::string &s : rm.sets)
      line(s);
  }
  std::string text = call_text(call, am, rm, "mltargs", "mltres");
  if (!result_vars.empty())
    line(slot_of(result_vars[0], call->where) + " = " + text + ";");
  else if (d.none())
    line("(void) " + text + ";");
  else
    assign(d, text);
  for (int s : am.scratch)
    release_scratch(s);
  if (block) {
    --indent_;
    line("}");
  }
}

std::string RoutineEmitter::closure_create(const Routine &r) const {
  std::string name = r.name.valid() ? r.name.name() : "lambda";
  return "mlt_make_closure(mltctx, " + names_.c_name.at(&r) + ", " + c_string_literal(name) +
         ", " + std::to_string(r.closed.size()) + ")";
}

void RoutineEmitter::closure_fill(const Routine &r, const std::string &target,
                                  const Location &at) {
  for (std::size_t i = 0; i < r.closed.size(); ++i)
    line("mlt_closure_put(mltctx, " + target + ", " + std::to_string(i) + ", " +
         var(r.closed[i], at) + ");");
}

void RoutineEmitter::body(const std::vector<AstPtr> &items, const Dest &d) {
  for (std::size_t i = 0; i < items.size(); ++i)
    stmt(items[i], i + 1 == items.size() ? d : Dest{});
  if (items.empty() && !d.none())
    assign(d, std::string(cleared_literal(d.ctype)));
}

void RoutineEmitter::stmt(const AstPtr &e, const Dest &dest_in) {
  Dest d = dest_in;
  if (e->ctype == CType::void_ || (!d.none() && d.ctype != e->ctype))
    d = Dest{};
  const Location &at = e->where;
  bool emits_nothing = e->is<form::DefTemplate>();
  if (e->is<form::Export>()) {
    const auto &ents = e->as<form::Export>().entries;
    emits_nothing = std::none_of(ents.begin(), ents.end(),
                                 [](const ExportEntry &x) { return x.value != nullptr; });
  }
  if (!e->is<form::Let>() && !e->is<form::Progn>() && !emits_nothing)
    line_directive(at);

  std::visit(
      [&](const auto &n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, form::VarRef> || std::is_same_v<T, form::LongLit> ||
                      std::is_same_v<T, form::StringLit> || std::is_same_v<T, form::Nil>) {
          assign(d, atom(*e));
        } else if constexpr (std::is_same_v<T, form::Quote>) {
          assign(d, quote(n.constant));
        } else if constexpr (std::is_same_v<T, form::Apply> || std::is_same_v<T, form::Send>) {
          emit_call(e, {}, d);
        } else if constexpr (std::is_same_v<T, form::Setq>) {
          std::string s = slot_of(n.var, at);
          stmt(n.value, Dest{s, n.var->ctype, true});
          assign(d, s);
        } else if constexpr (std::is_same_v<T, form::Let>) {
          for (const LetBinding &b : n.bindings)
            stmt(b.init, Dest{slot_of(b.var, at), b.var->ctype, true});
          body(n.body, d);
        } else if constexpr (std::is_same_v<T, form::Letrec>) {
          for (const LetBinding &b : n.bindings) {
            std::string s = slot_of(b.var, at);
            const Ast &init = *b.init;
            if (init.is<form::Lambda>())
              line(s + " = " + closure_create(*init.as<form::Lambda>().routine) + ";");
            else if (init.is<form::Instance>())
              line(s + " = mlt_make_object(mltctx, " + atom(*init.as<form::Instance>().class_ref) +
                   ", " + std::to_string(init.as<form::Instance>().klass->field_count()) + ");");
            else if (init.is<form::Tuple>())
              line(s + " = mlt_make_tuple(mltctx, " +
                   std::to_string(init.as<form::Tuple>().elements.size()) + ");");
            else if (init.is<form::ListCtor>())
              line(s + " = mlt_make_list(mltctx);");
            else
              fail(init.where, "letrec binds only constructive expressions");
          }
          for (const LetBinding &b : n.bindings) {
            std::string s = slot_of(b.var, at);
            const Ast &init = *b.init;
            if (init.is<form::Lambda>()) {
              closure_fill(*init.as<form::Lambda>().routine, s, init.where);
            } else if (init.is<form::Instance>()) {
              for (const FieldInit &f : init.as<form::Instance>().fields)
                line("mlt_unsafe_put_field(mltctx, " + s + ", " + std::to_string(f.field->index) +
                     ", " + atom(*f.value) + ");");
            } else if (init.is<form::Tuple>()) {
              const auto &el = init.as<form::Tuple>().elements;
              for (std::size_t i = 0; i < el.size(); ++i)
                line("mlt_tuple_put(mltctx, " + s + ", " + std::to_string(i) + ", " + atom(*el[i]) +
                     ");");
            } else {
              for (const AstPtr &x : init.as<form::ListCtor>().elements)
                line("mlt_list_append(mltctx, " + s + ", " + atom(*x) + ");");
            }
          }
          body(n.body, d);
        } else if constexpr (std::is_same_v<T, form::Lambda>) {
          if (d.none())
            return;
          line(d.lhs + " = " + closure_create(*n.routine) + ";");
          closure_fill(*n.routine, d.lhs, at);
        } else if constexpr (std::is_same_v<T, form::If>) {
          line("if (" + atom(*n.test) + ") {");
          ++indent_;
          stmt(n.then, d);
          --indent_;
          if (n.otherwise || !d.none()) {
            line("} else {");
            ++indent_;
            if (n.otherwise)
              stmt(n.otherwise, d);
            else
              assign(d, std::string(cleared_literal(d.ctype)));
            --indent_;
          }
          line("}");
        } else if constexpr (std::is_same_v<T, form::Progn>) {
          body(n.body, d);
        } else if constexpr (std::is_same_v<T, form::Forever>) {
          std::string loop = routine_label(n.label, "loop");
          std::string exit = routine_label(n.label, "exit");
          line("/* forever " + comment_safe(n.label->name.name()) + " */");
          label(loop);
          body(n.body, Dest{});
          line("goto " + loop + ";");
          label(exit);
          if (n.label->result)
            assign(d, slot_of(n.label->result, at));
        } else if constexpr (std::is_same_v<T, form::Exit>) {
          Dest to;
          if (n.label->result && n.label->ctype != CType::void_)
            to = Dest{slot_of(n.label->result, at), n.label->ctype, true};
          body(n.body, to);
          line("goto " + routine_label(n.label, "exit") + ";");
        } else if constexpr (std::is_same_v<T, form::Return>) {
          emit_return(n, at);
        } else if constexpr (std::is_same_v<T, form::Multicall>) {
          emit_call(n.call, n.formals, Dest{});
          body(n.body, d);
        } else if constexpr (std::is_same_v<T, form::Match>) {
          emit_match(n, d);
        } else if constexpr (std::is_same_v<T, form::GetField>) {
          if (d.none())
            return;
          if (n.unsafe)
            assign(d, "mlt_unsafe_get_field(" + atom(*n.object) + ", " +
                          std::to_string(n.field->index) + ")");
          else
            assign(d, "mlt_get_field(mltctx, " + atom(*n.object) + ", " + atom(*n.class_ref) +
                          ", " + std::to_string(n.field->index) + ")");
        } else if constexpr (std::is_same_v<T, form::PutFields>) {
          for (std::size_t i = 0; i < n.fields.size(); ++i) {
            const FieldInit &f = n.fields[i];
            if (n.unsafe)
              line("mlt_unsafe_put_field(mltctx, " + atom(*n.object) + ", " +
                   std::to_string(f.field->index) + ", " + atom(*f.value) + ");");
            else
              line("mlt_put_field(mltctx, " + atom(*n.object) + ", " + atom(*n.class_refs[i]) +
                   ", " + std::to_string(f.field->index) + ", " + atom(*f.value) + ");");
          }
        } else if constexpr (std::is_same_v<T, form::Instance>) {
          if (d.none())
            return;
          line(d.lhs + " = mlt_make_object(mltctx, " + atom(*n.class_ref) + ", " +
               std::to_string(n.klass->field_count()) + ");");
          for (const FieldInit &f : n.fields)
            line("mlt_unsafe_put_field(mltctx, " + d.lhs + ", " + std::to_string(f.field->index) +
                 ", " + atom(*f.value) + ");");
        } else if constexpr (std::is_same_v<T, form::Tuple>) {
          if (d.none())
            return;
          line(d.lhs + " = mlt_make_tuple(mltctx, " + std::to_string(n.elements.size()) + ");");
          for (std::size_t i = 0; i < n.elements.size(); ++i)
            line("mlt_tuple_put(mltctx, " + d.lhs + ", " + std::to_string(i) + ", " +
                 atom(*n.elements[i]) + ");");
        } else if constexpr (std::is_same_v<T, form::ListCtor>) {
          if (d.none())
            return;
          // appending allocates, so the list under construction must stay in the frame
          int s = d.in_frame ? -1 : acquire_scratch();
          std::string target = s < 0 ? d.lhs : scratch_text(s);
          line(target + " = mlt_make_list(mltctx);");
          for (const AstPtr &x : n.elements)
            line("mlt_list_append(mltctx, " + target + ", " + atom(*x) + ");");
          if (s >= 0) {
            assign(d, target);
            release_scratch(s);
          }
        } else if constexpr (std::is_same_v<T, form::CodeChunk>) {
          std::map<SymbolId, std::string> subst;
          for (const form::ChunkRef &r : n.refs)
            if (r.value)
              subst[r.name] = atom(*r.value);
          std::string text = expand_template(n.body, subst, n.state, ctx_);
          line("/*code_chunk " + comment_safe(n.state.name()) + "*/");
          line("{");
          line(text + ";");
          line("}");
        } else if constexpr (std::is_same_v<T, form::PrimitiveCall>) {
          const PrimitiveDef &p = *n.prim;
          std::map<SymbolId, std::string> subst;
          for (std::size_t i = 0; i < p.formals.size(); ++i)
            subst[p.formals[i].name] = atom(*n.args[i]);
          std::string text = expand_template(p.expansion, subst, SymbolId(), ctx_);
          if (p.result == CType::void_)
            line(text + ";");
          else if (d.none())
            line("(void) (" + text + ");");
          else
            assign(d, text);
        } else if constexpr (std::is_same_v<T, form::CIterInvoke>) {
          const CIteratorDef &it = *n.iter;
          std::map<SymbolId, std::string> subst;
          for (std::size_t i = 0; i < it.inputs.size(); ++i)
            subst[it.inputs[i].name] = atom(*n.inputs[i]);
          for (std::size_t i = 0; i < it.locals.size(); ++i)
            subst[it.locals[i].name] = slot_of(n.locals[i], at);
          int occ = ctx_.next_state(it.state);
          std::string before = expand_template(it.before, subst, it.state, ctx_, occ);
          std::string after = expand_template(it.after, subst, it.state, ctx_, occ);
          line("/*citerator " + comment_safe(it.name.name()) + "*/");
          line("{");
          line(before);
          ++indent_;
          body(n.body, Dest{});
          --indent_;
          line(after);
          line("}");
        } else if constexpr (std::is_same_v<T, form::DebugMsg>) {
          std::string loc = c_string_literal(loc_string(at));
          std::string msg = c_string_literal(n.message);
          std::string v = atom(*n.value);
          switch (n.value->ctype) {
          case CType::value:
            line("mlt_debug_value(mltctx, " + loc + ", " + msg + ", " + v + ");");
            break;
          case CType::long_:
            line("mlt_debug_long(mltctx, " + loc + ", " + msg + ", " + v + ");");
            break;
          case CType::cstring:
            line("mlt_debug_cstring(mltctx, " + loc + ", " + msg + ", " + v + ");");
            break;
          default:
            line("mlt_debug_stuff(mltctx, " + loc + ", " + msg + ", " +
                 c_string_literal(std::string(keyword_name(n.value->ctype))) + ", (const void *)" +
                 v + ");");
            break;
          }
        } else if constexpr (std::is_same_v<T, form::AssertMsg>) {
          line("if (!(" + atom(*n.test) + "))");
          line("  mlt_assert_fail(mltctx, " + c_string_literal(n.message) + ", " +
               c_string_literal(loc_string(at)) + ");");
        } else if constexpr (std::is_same_v<T, form::CompileWarning>) {
          ctx_.warnings.push_back(at.str() + ": warning: " + n.message);
          stmt(n.expr, d);
        } else if constexpr (std::is_same_v<T, form::CppIf>) {
          raw("#if " + n.symbol);
          stmt(n.then, d);
          raw("#else");
          if (n.otherwise)
            stmt(n.otherwise, d);
          else
            assign(d, std::string(cleared_literal(d.ctype)));
          raw("#endif /*" + comment_safe(n.symbol) + "*/");
          last_line_.clear();
        } else if constexpr (std::is_same_v<T, form::HostIf>) {
          bool now = ctx_.host_version.compare(0, n.prefix.size(), n.prefix) == 0;
          if (now != n.selected)
            fail(at, "hostif " + c_string_literal(n.prefix) +
                         " was expanded for a different host version than " +
                         c_string_literal(ctx_.host_version));
          body(n.body, d);
        } else if constexpr (std::is_same_v<T, form::CurrentEnvContainer> ||
                             std::is_same_v<T, form::ParentEnv> ||
                             std::is_same_v<T, form::Cond> || std::is_same_v<T, form::And> ||
                             std::is_same_v<T, form::Or>) {
          fail(at, "internal: " + to_string(*e) + " left after normalization");
        } else if constexpr (std::is_same_v<T, form::DefFunction>) {
          std::string s = slot_of(n.var, at);
          line(s + " = " + closure_create(*n.routine) + ";");
          closure_fill(*n.routine, s, at);
        } else if constexpr (std::is_same_v<T, form::DefClass>) {
          std::string fields;
          for (const FieldPtr &f : n.klass->all_fields)
            fields += (fields.empty() ? "" : " ") + f->name.name();
          line(slot_of(n.var, at) + " = mlt_make_class(mltctx, " +
               c_string_literal(n.klass->name.name()) + ", " + atom(*n.super_ref) + ", " +
               std::to_string(n.klass->field_count()) + ", " + c_string_literal(fields) + ");");
        } else if constexpr (std::is_same_v<T, form::DefInstance>) {
          std::string s = slot_of(n.var, at);
          line(s + " = mlt_make_object(mltctx, " + atom(*n.class_ref) + ", " +
               std::to_string(n.klass->field_count()) + ");");
          for (const FieldInit &f : n.fields)
            line("mlt_unsafe_put_field(mltctx, " + s + ", " + std::to_string(f.field->index) + ", " +
                 atom(*f.value) + ");");
        } else if constexpr (std::is_same_v<T, form::DefSelector>) {
          std::string s = slot_of(n.var, at);
          line(s + " = mlt_make_named(mltctx, " + atom(*n.class_ref) + ", 0, " +
               c_string_literal(n.info.name.name()) + ");");
          for (const FieldInit &f : n.fields)
            line("mlt_unsafe_put_field(mltctx, " + s + ", " + std::to_string(f.field->index) + ", " +
                 atom(*f.value) + ");");
        } else if constexpr (std::is_same_v<T, form::DefFunMatcher>) {
          line(slot_of(n.var, at) + " = " + atom(*n.function) + ";");
        } else if constexpr (std::is_same_v<T, form::DefTemplate>) {
          // compile-time only
        } else {
          static_assert(std::is_same_v<T, form::Export>);
          const VarPtr &env = unit_.expanded.module_env;
          for (const ExportEntry &x : n.entries)
            if (x.value)
              line("mlt_env_put(mltctx, " + var(env, at) + ", " + c_string_literal(x.name.name()) +
                   ", " + var(x.value, at) + ");");
        }
      },
      e->form);
}

void RoutineEmitter::emit_return(const form::Return &n, const Location &at) {
  if (!r_.is_start) {
    line("mltretval = " + (n.values.empty() ? std::string("((mlt_val)0)") : atom(*n.values[0])) +
         ";");
    if (!r_.results.empty()) {
      line("if (mltxresdescr) {");
      ++indent_;
      int opened = 0;
      for (std::size_t i = 0; i < r_.results.size(); ++i) {
        const CTypeDesc &d = describe(r_.results[i]);
        std::string value = i + 1 < n.values.size() ? atom(*n.values[i + 1])
                                                    : std::string(d.cleared);
        line("if (mltxresdescr[" + std::to_string(i) + "] == '" + std::string(1, d.descriptor) +
             "') {");
        ++indent_;
        ++opened;
        line("*(mltxrestab[" + std::to_string(i) + "]." + std::string(d.result_member) +
             ") = " + value + ";");
      }
      for (int i = 0; i < opened; ++i) {
        --indent_;
        line("}");
      }
      --indent_;
      line("}");
    }
  }
  (void)at;
  line("goto mltlab_return;");
}

void RoutineEmitter::clear_results() {
  if (r_.is_start || r_.results.empty())
    return;
  // falling off the end: clear every declared secondary result
  line("if (mltxresdescr) {");
  ++indent_;
  int opened = 0;
  for (std::size_t i = 0; i < r_.results.size(); ++i) {
    const CTypeDesc &d = describe(r_.results[i]);
    line("if (mltxresdescr[" + std::to_string(i) + "] == '" + std::string(1, d.descriptor) +
         "') {");
    ++indent_;
    ++opened;
    line("*(mltxrestab[" + std::to_string(i) + "]." + std::string(d.result_member) +
         ") = " + std::string(d.cleared) + ";");
  }
  for (int i = 0; i < opened; ++i) {
    --indent_;
    line("}");
  }
  --indent_;
  line("}");
}

void RoutineEmitter::prologue_args() {
  if (r_.formals.empty())
    return;
  line(slot_of(r_.formals[0], r_.where) + " = mltfirst;");
  if (r_.formals.size() == 1)
    return;
  line("if (!mltxargdescr)");
  line("  goto mltlab_args;");
  for (std::size_t i = 1; i < r_.formals.size(); ++i) {
    const VarPtr &f = r_.formals[i];
    const CTypeDesc &d = describe(f->ctype);
    std::string idx = std::to_string(i - 1);
    line("if (mltxargdescr[" + idx + "] != '" + std::string(1, d.descriptor) + "')");
    line("  goto mltlab_args;");
    std::string src = "mltxargtab[" + idx + "]." + std::string(d.param_member);
    line(slot_of(f, r_.where) + " = " + (is_value(f->ctype) ? "*(" + src + ")" : src) + ";");
  }
  label("mltlab_args");
}

void RoutineEmitter::emit_match(const form::Match &m, const Dest &d) {
  if (!m.graph)
    fail(m.subject->where, "internal: match was not compiled");
  const MatchGraph &g = *m.graph;
  int id = ++ctx_.match_counter;
  auto step_label = [&](int s) { return "mltmatch_" + std::to_string(id) + "_s" + std::to_string(s); };
  std::string end = "mltmatch_" + std::to_string(id) + "_end";

  std::map<std::string, int> data_by_key;
  for (const MatchData &md : g.data)
    data_by_key[md.key] = md.id;
  auto data = [&](int i) -> std::string {
    if (g.data[i].role == DataRole::root)
      return atom(*m.subject);
    return slot_of(g.data[i].var, m.subject->where);
  };
  auto value_addr = [&](int i, std::vector<std::string> &pre, std::vector<int> &scratch) {
    if (g.data[i].role != DataRole::root)
      return "&" + data(i);
    const Ast &a = *m.subject;
    if (a.is<form::VarRef>() && has_slot(a.as<form::VarRef>().var))
      return "&" + slot_of(a.as<form::VarRef>().var, a.where);
    int s = acquire_scratch();
    scratch.push_back(s);
    pre.push_back(scratch_text(s) + " = " + atom(a) + ";");
    return "&" + scratch_text(s);
  };
  // one state occurrence shared by the test and fill of a c-matcher use
  std::map<std::string, int> occurrence;
  auto base_of = [](const std::string &key) { return key.substr(key.find(':') + 1); };
  auto cmatcher_subst = [&](const MatchStep &s) {
    const CMatcherDef &cm = *s.matcher->cmatcher;
    std::map<SymbolId, std::string> subst;
    subst[cm.inputs[0].name] = data(s.subject);
    for (std::size_t i = 1; i < cm.inputs.size(); ++i)
      subst[cm.inputs[i].name] = atom(*s.inputs[i - 1]);
    std::string base = base_of(s.key);
    for (std::size_t j = 0; j < cm.outputs.size(); ++j)
      if (auto it = data_by_key.find("out" + std::to_string(j) + ":" + base);
          it != data_by_key.end())
        subst[cm.outputs[j].name] = data(it->second);
    return subst;
  };
  auto occurrence_of = [&](const MatchStep &s) {
    std::string base = base_of(s.key);
    auto it = occurrence.find(base);
    if (it != occurrence.end())
      return it->second;
    return occurrence[base] = ctx_.next_state(s.matcher->cmatcher->state);
  };

  line("/* match #" + std::to_string(id) + ": " + std::to_string(g.steps.size()) + " steps */");
  for (const auto &vars : g.clause_vars)
    for (const VarPtr &v : vars)
      line(slot_of(v, m.subject->where) + " = " + std::string(cleared_literal(v->ctype)) + ";");
  line("goto " + step_label(g.entry) + ";");
  for (const MatchStep &s : g.steps) {
    label(step_label(s.id));
    switch (s.kind) {
    case StepKind::test: {
      std::string cond;
      std::vector<std::string> pre;
      std::vector<int> scratch;
      switch (s.test) {
      case TestKind::matcher:
        if (s.matcher->cmatcher) {
          const CMatcherDef &cm = *s.matcher->cmatcher;
          cond = expand_template(cm.test, cmatcher_subst(s), cm.state, ctx_, occurrence_of(s));
        } else {
          const FunMatcherDef &fm = *s.matcher->funmatcher;
          std::string descr(1, descriptor_char(fm.inputs[0].ctype));
          const CTypeDesc &sd = describe(fm.inputs[0].ctype);
          pre.push_back("mltargs[0]." + std::string(sd.param_member) + " = " +
                        (is_value(fm.inputs[0].ctype) ? value_addr(s.subject, pre, scratch)
                                                      : data(s.subject)) +
                        ";");
          for (std::size_t i = 0; i < s.inputs.size(); ++i) {
            const Ast &a = *s.inputs[i];
            const CTypeDesc &ad = describe(a.ctype);
            descr += ad.descriptor;
            std::string v;
            if (is_value(a.ctype)) {
              if (a.is<form::VarRef>() && has_slot(a.as<form::VarRef>().var)) {
                v = "&" + slot_of(a.as<form::VarRef>().var, a.where);
              } else {
                int sc = acquire_scratch();
                scratch.push_back(sc);
                pre.push_back(scratch_text(sc) + " = " + atom(a) + ";");
                v = "&" + scratch_text(sc);
              }
            } else {
              v = atom(a);
            }
            pre.push_back("mltargs[" + std::to_string(i + 1) + "]." +
                          std::string(ad.param_member) + " = " + v + ";");
          }
          std::string rdescr;
          for (std::size_t j = 0; j < s.outputs.size(); ++j) {
            const CTypeDesc &od = describe(g.data[s.outputs[j]].ctype);
            rdescr += od.descriptor;
            pre.push_back("mltres[" + std::to_string(j) + "]." + std::string(od.result_member) +
                          " = &" + data(s.outputs[j]) + ";");
          }
          std::string fn = atom(*s.funmatcher_ref);
          cond = "mlt_apply(mltctx, " + fn + ", " + fn + ", " + c_string_literal(descr) +
                 ", mltargs, " +
                 (rdescr.empty() ? std::string("\"\", (union mlt_param *)0")
                                 : c_string_literal(rdescr) + ", mltres") +
                 ") != (mlt_val)0";
          line("{");
          ++indent_;
          line("union mlt_param mltargs[" + std::to_string(descr.size()) + "];");
          if (!rdescr.empty())
            line("union mlt_param mltres[" + std::to_string(rdescr.size()) + "];");
        }
        break;
      case TestKind::instance:
        cond = "mlt_is_a(mltctx, " + data(s.subject) + ", " + atom(*s.class_ref) + ")";
        break;
      case TestKind::constant:
        cond = "(" + data(s.subject) + ") == (" + atom(*s.constant) + ")";
        break;
      case TestKind::identity:
        cond = "(" + data(s.subject) + ") == (" + slot_of(s.var, m.subject->where) + ")";
        break;
      }
      bool fun = s.test == TestKind::matcher && !s.matcher->cmatcher;
      for (const std::string &p : pre)
        line(p);
      line("if (" + cond + ")");
      line("  goto " + step_label(s.then_step) + ";");
      line("else");
      line("  goto " + step_label(s.else_step) + ";");
      for (int sc : scratch)
        release_scratch(sc);
      if (fun) {
        --indent_;
        line("}");
      }
      break;
    }
    case StepKind::fill:
      switch (s.fill) {
      case FillKind::matcher: {
        const CMatcherDef &cm = *s.matcher->cmatcher;
        if (cm.fill)
          line(as_statement(
              expand_template(*cm.fill, cmatcher_subst(s), cm.state, ctx_, occurrence_of(s))));
        break;
      }
      case FillKind::funmatcher:
        for (std::size_t j = 0; j < s.outputs.size(); ++j)
          line(data(s.outputs[j]) + " = " + data(s.sources[j]) + ";");
        break;
      case FillKind::field:
        line(data(s.outputs[0]) + " = mlt_unsafe_get_field(" + data(s.subject) + ", " +
             std::to_string(s.field->index) + ");");
        break;
      case FillKind::bind:
        line(slot_of(s.var, m.subject->where) + " = " + data(s.subject) + ";");
        break;
      }
      line("goto " + step_label(s.next) + ";");
      break;
    case StepKind::set_flag:
      line(data(s.flag) + " = 1L;");
      line("goto " + step_label(s.next) + ";");
      break;
    case StepKind::flag_conj: {
      std::string all;
      for (int f : s.flags)
        all += (all.empty() ? "" : " && ") + data(f);
      line(data(s.flag) + " = (" + (all.empty() ? std::string("1") : all) + ") ? 1L : 0L;");
      line("goto " + step_label(s.next) + ";");
      break;
    }
    case StepKind::success:
      line("/* clause " + std::to_string(s.clause) + " */");
      body(m.clauses[s.clause].body, d);
      line("goto " + end + ";");
      break;
    case StepKind::fail:
      line("/* no clause matched */");
      assign(d, std::string(cleared_literal(d.ctype)));
      line("goto " + end + ";");
      break;
    }
  }
  label(end);
  last_line_.clear();
}

std::string RoutineEmitter::run() {
  build_layout();

  // body first: it may need scratch slots
  std::ostringstream saved;
  saved.swap(out_);
  if (r_.is_start) {
    const ExpandedModule &m = unit_.expanded;
    std::string penv = slot_of(m.parent_env, r_.where);
    std::string menv = slot_of(m.module_env, r_.where);
    line(penv + " = parentenv;");
    line(menv + " = mlt_make_env(mltctx, " + penv + ");");
    line(slot_of(m.env_container, r_.where) + " = mlt_make_env_container(mltctx, " + menv + ");");
    for (const VarPtr &v : m.imports) {
      if (v->predef_slot >= 0) {
        if (v->predef_slot >= 128)
          fail(v->where, "predefined slot of " + v->import_name + " is out of range");
        if (!ctx_.predefined.empty()) {
          auto it = ctx_.predefined.find(v->import_name);
          if (it == ctx_.predefined.end() || it->second != v->predef_slot)
            fail(v->where, "unresolved predefined name " + v->import_name);
        }
        line(slot_of(v, r_.where) + " = mlt_predef(mltctx, " + predef_enum(v->import_name) +
             ");");
      } else {
        line(slot_of(v, r_.where) + " = mlt_env_get(mltctx, " + penv + ", " +
             c_string_literal(v->import_name) + ");");
      }
    }
    body(r_.body, Dest{});
    line("mltretval = " + menv + ";");
  } else {
    prologue_args();
    body(r_.body, Dest{"mltretval", CType::value, false});
    clear_results();
  }
  std::string body_text = out_.str();
  out_.swap(saved);

  int value_slots = layout_.value_slots + static_cast<int>(scratch_busy_.size());
  int total = value_slots + static_cast<int>(layout_.stuff.size());
  if (total > ctx_.max_frame_slots)
    fail(r_.where, "frame of " + (r_.name.valid() ? r_.name.name() : std::string("lambda")) +
                       " needs " + std::to_string(total) + " slots, more than the maximum " +
                       std::to_string(ctx_.max_frame_slots));

  const std::string &fname = names_.c_name.at(&r_);
  std::string dslname = r_.is_start ? "start of module " + unit_.expanded.name
                                    : (r_.name.valid() ? r_.name.name() : std::string("lambda"));
  out_ << "/* " << comment_safe(dslname) << " */\n";
  if (r_.is_start)
    out_ << "mlt_val " << fname << "(mlt_ctx *mltctx, mlt_val parentenv)\n{\n";
  else
    out_ << "mlt_val " << fname
         << "(mlt_ctx *mltctx, mlt_val mltclos, mlt_val mltfirst,\n"
            "    const char *mltxargdescr, union mlt_param *mltxargtab,\n"
            "    const char *mltxresdescr, union mlt_param *mltxrestab)\n{\n";
  line("struct {");
  ++indent_;
  line("int mcfr_nbvar;");
  line("const char *mcfr_flocs;");
  line("mlt_val mcfr_clos;");
  line("struct mlt_callframe *mcfr_prev;");
  if (value_slots > 0) {
    std::string names;
    for (const std::string &n : value_comments_)
      names += (names.empty() ? "" : " ") + n;
    if (!scratch_busy_.empty())
      names += (names.empty() ? "" : " ") + std::string("+") +
               std::to_string(scratch_busy_.size()) + " scratch";
    line("mlt_val mcfr_varptr[" + std::to_string(value_slots) + "]; /* " + comment_safe(names) +
         " */");
  }
  for (const std::string &s : stuff_decls_)
    line(s);
  --indent_;
  line("} meltfram__;");
  line("mlt_val mltretval = (mlt_val)0;");
  if (!r_.is_start)
    line("(void) mltfirst; (void) mltxargdescr; (void) mltxargtab; (void) mltxresdescr; (void) mltxrestab;");
  line("memset(&meltfram__, 0, sizeof(meltfram__));");
  line("meltfram__.mcfr_nbvar = (" + std::to_string(value_slots) + ");");
  line("meltfram__.mcfr_flocs = " + c_string_literal(layout_.location) + ";");
  line("meltfram__.mcfr_prev = mlt_topframe(mltctx);");
  line(std::string("meltfram__.mcfr_clos = ") + (r_.is_start ? "((mlt_val)0)" : "mltclos") + ";");
  line("mlt_set_topframe(mltctx, (struct mlt_callframe *)&meltfram__);");
  out_ << body_text;
  label("mltlab_return");
  line("mlt_set_topframe(mltctx, meltfram__.mcfr_prev);");
  line("return mltretval;");
  out_ << "}\n";
  return drop_unused_labels(out_.str());
}

std::string prototype(const Routine &r, const std::string &name) {
  if (r.is_start)
    return "mlt_val " + name + "(mlt_ctx *mltctx, mlt_val parentenv);";
  return "mlt_val " + name +
         "(mlt_ctx *, mlt_val, mlt_val, const char *, union mlt_param *, const char *, "
         "union mlt_param *);";
}

} // namespace

std::string mangle(const std::string &name) {
  std::string out;
  for (char c : name)
    out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0])))
    out = "_" + out;
  return out;
}

std::string entry_symbol(const std::string &module_name) {
  return "meltlite_start_" + mangle(module_name);
}

std::string c_string_literal(const std::string &s) {
  std::string out = "\"";
  char prev = 0;
  for (char ch : s) {
    unsigned char c = static_cast<unsigned char>(ch);
    switch (ch) {
    case '"': out += "\\\""; break;
    case '\\': out += "\\\\"; break;
    case '\n': out += "\\n"; break;
    case '\t': out += "\\t"; break;
    case '?': out += prev == '?' ? "\\?" : "?"; break;
    default:
      if (c < 0x20 || c == 0x7f) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "\\%03o", c);
        out += buf;
      } else {
        out += ch;
      }
    }
    prev = ch;
  }
  return out + "\"";
}

std::string expand_template(const MacroString &ms, const std::map<SymbolId, std::string> &subst,
                            SymbolId state, EmitCtx &ctx, int occurrence) {
  int n = occurrence;
  if (state.valid() && n == 0)
    n = ctx.next_state(state);
  std::string out;
  for (const MacroChunk &c : ms.chunks) {
    if (c.is_text()) {
      out += c.text();
      continue;
    }
    const MacroChunk::Ref &r = c.ref();
    if (state.valid() && r.symbol == state) {
      out += r.spelling + (written_upper(r.spelling) ? "__" : "_") + std::to_string(n);
    } else if (auto it = subst.find(r.symbol); it != subst.end()) {
      out += it->second;
    } else {
      fail(ms.location, "template references unknown variable $" + r.spelling);
    }
  }
  return out;
}

FrameLayout compute_layout(const Routine &r) {
  FrameLayout l;
  std::map<CType, int> per_type;
  for (const VarPtr &v : r.slots) {
    if (is_value(v->ctype))
      ++l.value_slots;
    else
      l.stuff.push_back({v->ctype, per_type[v->ctype]++});
  }
  l.location = loc_string(r.where);
  return l;
}

std::vector<EmittedUnit> emit_module(const ModuleUnit &unit, EmitCtx &ctx) {
  if (ctx.split_threshold < 1)
    throw CompileError(Phase::emit, unit.expanded.start->where, "split threshold must be positive");
  RoutineNames names;
  std::string mod = upper(mangle(unit.expanded.name));
  for (std::size_t i = 0; i < unit.routines.size(); ++i) {
    const Routine *r = unit.routines[i].get();
    names.index[r] = static_cast<int>(i);
    if (r->is_start)
      names.c_name[r] = entry_symbol(unit.expanded.name);
    else
      names.c_name[r] = "meltrout_" + std::to_string(i) + "_" + mod + "_" +
                        (r->name.valid() ? upper(mangle(r->name.name())) : std::string("LAMBDA"));
  }

  std::vector<const Routine *> others;
  const Routine *start = nullptr;
  for (const RoutinePtr &r : unit.routines) {
    if (r->is_start)
      start = r.get();
    else
      others.push_back(r.get());
  }
  if (!start)
    throw CompileError(Phase::emit, Location{}, "module has no start routine");

  std::size_t nunits = std::max<std::size_t>(
      1, (others.size() + ctx.split_threshold - 1) / static_cast<std::size_t>(ctx.split_threshold));

  std::string protos;
  for (const RoutinePtr &r : unit.routines)
    protos += prototype(*r, names.c_name.at(r.get())) + "\n";

  std::string source = start->where.file ? start->where.file_name() : unit.expanded.name;
  std::vector<EmittedUnit> units;
  for (std::size_t u = 0; u < nunits; ++u) {
    char num[24];
    std::snprintf(num, sizeof num, "%02zu", u);
    EmittedUnit eu;
    eu.file_name = unit.expanded.name + "+" + num + ".c";
    std::ostringstream os;
    os << "/* " << comment_safe(eu.file_name) << ": module " << comment_safe(unit.expanded.name)
       << " translated from " << comment_safe(source) << " by meltlite; do not edit */\n";
    os << "#include \"meltlite_runtime.h\"\n";
    os << "#include \"meltlite_hostir.h\"\n\n";
    os << protos << "\n";
    if (u == 0)
      os << RoutineEmitter(unit, *start, ctx, names).run() << "\n";
    std::size_t lo = u * ctx.split_threshold;
    std::size_t hi = std::min(others.size(), lo + ctx.split_threshold);
    for (std::size_t i = lo; i < hi; ++i)
      os << RoutineEmitter(unit, *others[i], ctx, names).run() << "\n";
    os << "/* end of " << comment_safe(eu.file_name) << " */\n";
    eu.text = os.str();
    units.push_back(std::move(eu));
  }
  return units;
}

} // namespace meltlite
