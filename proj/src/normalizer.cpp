#include "meltlite/normalizer.hpp"

#include <unordered_map>
#include <unordered_set>

namespace meltlite {

CType unify_ctypes(const std::vector<CType> &branches) {
  if (branches.empty())
    return CType::void_;
  for (CType t : branches)
    if (t != branches.front())
      return CType::void_;
  return branches.front();
}

namespace {

[[noreturn]] void fail(const Location &at, const std::string &msg) {
  throw CompileError(Phase::normalize, at, msg);
}

std::string kw(CType t) { return ":" + std::string(keyword_name(t)); }

AstPtr typed(AstPtr a, CType t) {
  a->ctype = t;
  a->typed = true;
  return a;
}

struct Flat {
  std::vector<LetBinding> pre;
  AstPtr expr;
};

class Normalizer {
public:
  explicit Normalizer(ExpandedModule *module) : module_(module) {}

  std::vector<RoutinePtr> routines;

  void enter(Routine *r) { r_ = r; }

  void normalize_routine(const RoutinePtr &r);
  AstPtr norm(const AstPtr &e);

private:
  ExpandedModule *module_;
  Routine *r_ = nullptr;
  std::unordered_map<const Routine *, std::unordered_set<std::uint32_t>> declared_;
  std::unordered_map<const Routine *, std::vector<std::vector<CType>>> returns_;
  struct LabelInfo {
    Routine *routine;
    std::vector<CType> exits;
  };
  std::unordered_map<std::uint32_t, LabelInfo> labels_;

  void declare(const VarPtr &v) {
    auto &set = declared_[r_];
    if (set.empty())
      for (const VarPtr &s : r_->slots)
        set.insert(s->uid);
    if (set.insert(v->uid).second)
      r_->slots.push_back(v);
  }

  void use(const VarPtr &v, const Location &at) {
    if (!v->owner || v->owner == r_)
      return;
    if (!is_value(v->ctype))
      fail(at, "variable " + v->display_name() + " of c-type " + kw(v->ctype) +
                   " cannot be closed over; only values can");
    for (Routine *r = r_; r && r != v->owner; r = r->parent) {
      bool present = false;
      for (const VarPtr &c : r->closed)
        present = present || c == v;
      if (!present)
        r->closed.push_back(v);
    }
  }

  VarPtr new_temp(CType t, const Location &at) {
    auto v = std::make_shared<Var>();
    v->role = VarRole::temp;
    v->ctype = t;
    v->where = at;
    v->owner = r_;
    v->temp_index = r_->temp_count++;
    declare(v);
    return v;
  }

  AstPtr ref(const VarPtr &v, const Location &at) {
    use(v, at);
    return typed(make_ast(at, form::VarRef{v}), v->ctype);
  }

  AstPtr wrap(Flat f, const Location &at) {
    if (f.pre.empty())
      return f.expr;
    CType t = f.expr->ctype;
    return typed(make_ast(at, form::Let{std::move(f.pre), {f.expr}}), t);
  }

  std::vector<AstPtr> norm_body(const std::vector<AstPtr> &body) {
    std::vector<AstPtr> out;
    out.reserve(body.size());
    for (const AstPtr &e : body)
      out.push_back(norm(e));
    return out;
  }

  static CType body_ctype(const std::vector<AstPtr> &body) {
    return body.empty() ? CType::void_ : body.back()->ctype;
  }

  AstPtr atomize(const AstPtr &e, std::vector<LetBinding> &pre) {
    Flat f = flatten(e, true);
    for (LetBinding &b : f.pre)
      pre.push_back(std::move(b));
    if (is_atom(*f.expr))
      return f.expr;
    if (f.expr->ctype == CType::void_)
      fail(e->where, "expression " + to_string(*e) + " has no result (:void) but is used as an operand");
    VarPtr t = new_temp(f.expr->ctype, e->where);
    pre.push_back({t, f.expr});
    return ref(t, e->where);
  }

  AstPtr atomize_as(const AstPtr &e, CType expected, std::vector<LetBinding> &pre,
                    const std::string &what) {
    AstPtr a = atomize(e, pre);
    if (a->ctype != expected)
      fail(e->where, "c-type mismatch: " + what + " expects " + kw(expected) + " but " +
                         to_string(*e) + " is " + kw(a->ctype));
    return a;
  }

  std::vector<AstPtr> atomize_values(const std::vector<AstPtr> &v, std::vector<LetBinding> &pre,
                                     const std::string &what) {
    std::vector<AstPtr> out;
    for (const AstPtr &e : v)
      out.push_back(atomize_as(e, CType::value, pre, what));
    return out;
  }

  std::vector<FieldInit> atomize_fields(const std::vector<FieldInit> &fs,
                                        std::vector<LetBinding> &pre) {
    std::vector<FieldInit> out;
    for (const FieldInit &f : fs)
      out.push_back({f.field, atomize_as(f.value, CType::value, pre,
                                         "field " + f.field->name.name())});
    return out;
  }

  void check_bound_ctype(const VarPtr &v, const AstPtr &init, const Location &at) {
    if (init->ctype == CType::void_)
      fail(at, "cannot bind " + v->display_name() + " to an expression without result (:void)");
    if (!v->ctype_declared) {
      v->ctype = init->ctype;
      return;
    }
    if (v->ctype != init->ctype)
      fail(at, "c-type mismatch: " + v->display_name() + " is " + kw(v->ctype) +
                   " but is bound to " + kw(init->ctype));
  }

  Flat flatten(const AstPtr &e, bool as_init);
  PatternPtr norm_pattern(const PatternPtr &p, CType at, std::vector<LetBinding> &pre);

  template <class F> Flat simple(const AstPtr &e, F f, CType t, std::vector<LetBinding> pre = {}) {
    return {std::move(pre), typed(make_ast(e->where, std::move(f)), t)};
  }
};

void Normalizer::normalize_routine(const RoutinePtr &r) {
  Routine *saved = r_;
  routines.push_back(r);
  r_ = r.get();
  r->slots.clear();
  r->closed.clear();
  r->results.clear();
  declared_.erase(r.get());
  returns_.erase(r.get());
  for (const VarPtr &f : r->formals)
    declare(f);
  if (r->is_start && module_) {
    declare(module_->module_env);
    declare(module_->env_container);
    for (const VarPtr &v : module_->imports)
      declare(v);
  }
  r->body = norm_body(r->body);

  for (const auto &ret : returns_[r.get()]) {
    for (std::size_t i = 0; i < ret.size(); ++i) {
      if (i < r->results.size()) {
        if (r->results[i] != ret[i])
          fail(r->where, "inconsistent c-types for secondary result " + std::to_string(i + 1) +
                             ": " + kw(r->results[i]) + " and " + kw(ret[i]));
      } else {
        r->results.push_back(ret[i]);
      }
    }
  }
  r_ = saved;
}

AstPtr Normalizer::norm(const AstPtr &e) { return wrap(flatten(e, false), e->where); }

Flat Normalizer::flatten(const AstPtr &e, bool as_init) {
  const Location &at = e->where;
  return std::visit(
      [&](const auto &n) -> Flat {
        using T = std::decay_t<decltype(n)>;
        std::vector<LetBinding> pre;

        if constexpr (std::is_same_v<T, form::VarRef>) {
          return {{}, ref(n.var, at)};
        } else if constexpr (std::is_same_v<T, form::LongLit>) {
          return simple(e, n, CType::long_);
        } else if constexpr (std::is_same_v<T, form::StringLit>) {
          return simple(e, n, CType::cstring);
        } else if constexpr (std::is_same_v<T, form::Nil>) {
          return simple(e, n, CType::value);
        } else if constexpr (std::is_same_v<T, form::Quote>) {
          return simple(e, n, CType::value);
        } else if constexpr (std::is_same_v<T, form::Apply>) {
          AstPtr fn = atomize_as(n.fn, CType::value, pre, "application");
          std::vector<AstPtr> args;
          for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i == 0)
              args.push_back(atomize_as(n.args[i], CType::value, pre, "the first argument"));
            else
              args.push_back(atomize(n.args[i], pre));
          }
          return simple(e, form::Apply{fn, std::move(args)}, CType::value, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::Send>) {
          AstPtr sel = atomize_as(n.selector, CType::value, pre, "message send");
          AstPtr recv = atomize_as(n.receiver, CType::value, pre, "the message receiver");
          std::vector<AstPtr> args;
          for (const AstPtr &a : n.args)
            args.push_back(atomize(a, pre));
          return simple(e, form::Send{sel, recv, std::move(args)}, CType::value, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::Setq>) {
          if (n.var->owner && n.var->owner != r_)
            fail(at, "cannot assign " + n.var->display_name() +
                         ", which is closed over from an enclosing function");
          Flat v = flatten(n.value, true);
          if (v.expr->ctype != n.var->ctype)
            fail(at, "c-type mismatch: " + n.var->display_name() + " is " + kw(n.var->ctype) +
                         " but is assigned " + kw(v.expr->ctype));
          return simple(e, form::Setq{n.var, v.expr}, n.var->ctype, std::move(v.pre));
        } else if constexpr (std::is_same_v<T, form::Let>) {
          std::vector<LetBinding> bindings;
          for (const LetBinding &b : n.bindings) {
            Flat f = flatten(b.init, true);
            for (LetBinding &p : f.pre)
              bindings.push_back(std::move(p));
            check_bound_ctype(b.var, f.expr, b.init->where);
            declare(b.var);
            bindings.push_back({b.var, f.expr});
          }
          auto body = norm_body(n.body);
          CType t = body_ctype(body);
          return simple(e, form::Let{std::move(bindings), std::move(body)}, t);
        } else if constexpr (std::is_same_v<T, form::Letrec>) {
          for (const LetBinding &b : n.bindings) {
            if (!is_value(b.var->ctype))
              fail(b.var->where, "letrec binds values only");
            declare(b.var);
          }
          std::vector<LetBinding> bindings;
          for (const LetBinding &b : n.bindings) {
            Flat f = flatten(b.init, true);
            for (LetBinding &p : f.pre)
              pre.push_back(std::move(p));
            bindings.push_back({b.var, f.expr});
          }
          auto body = norm_body(n.body);
          CType t = body_ctype(body);
          return simple(e, form::Letrec{std::move(bindings), std::move(body)}, t, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::Lambda>) {
          normalize_routine(n.routine);
          for (const VarPtr &c : n.routine->closed)
            use(c, at);
          return simple(e, n, CType::value);
        } else if constexpr (std::is_same_v<T, form::If>) {
          AstPtr test = atomize(n.test, pre);
          AstPtr then = norm(n.then);
          AstPtr otherwise = n.otherwise ? norm(n.otherwise) : nullptr;
          CType t = otherwise ? unify_ctypes({then->ctype, otherwise->ctype}) : then->ctype;
          return simple(e, form::If{test, then, otherwise}, t, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::Cond>) {
          AstPtr lowered;
          for (auto it = n.clauses.rbegin(); it != n.clauses.rend(); ++it) {
            const form::CondClause &c = *it;
            AstPtr body = make_ast(at, form::Progn{c.body});
            if (!c.test) {
              lowered = body;
            } else if (c.body.empty()) {
              std::vector<AstPtr> ops{c.test};
              if (lowered)
                ops.push_back(lowered);
              lowered = make_ast(at, form::Or{std::move(ops)});
            } else {
              lowered = make_ast(at, form::If{c.test, body, lowered});
            }
          }
          if (!lowered)
            return simple(e, form::Nil{}, CType::value);
          return flatten(lowered, as_init);
        } else if constexpr (std::is_same_v<T, form::And>) {
          if (n.operands.size() == 1)
            return flatten(n.operands[0], as_init);
          std::vector<AstPtr> rest(n.operands.begin() + 1, n.operands.end());
          return flatten(make_ast(at, form::If{n.operands[0], make_ast(at, form::And{rest}), nullptr}),
                         as_init);
        } else if constexpr (std::is_same_v<T, form::Or>) {
          if (n.operands.size() == 1)
            return flatten(n.operands[0], as_init);
          AstPtr first = atomize(n.operands[0], pre);
          std::vector<AstPtr> rest(n.operands.begin() + 1, n.operands.end());
          AstPtr other = norm(make_ast(at, form::Or{rest}));
          AstPtr then = typed(make_ast(at, first->form), first->ctype);
          CType t = unify_ctypes({first->ctype, other->ctype});
          return simple(e, form::If{first, then, other}, t, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::Progn>) {
          auto body = norm_body(n.body);
          CType t = body_ctype(body);
          return simple(e, form::Progn{std::move(body)}, t);
        } else if constexpr (std::is_same_v<T, form::Forever>) {
          labels_[n.label->uid] = {r_, {}};
          auto body = norm_body(n.body);
          const auto &exits = labels_[n.label->uid].exits;
          CType t = unify_ctypes(exits);
          labels_.erase(n.label->uid);
          n.label->ctype = t;
          if (t != CType::void_) {
            if (!n.label->result || n.label->result->ctype != t)
              n.label->result = new_temp(t, at);
            else
              declare(n.label->result);
          }
          return simple(e, form::Forever{n.label, std::move(body)}, t);
        } else if constexpr (std::is_same_v<T, form::Exit>) {
          auto it = labels_.find(n.label->uid);
          if (it == labels_.end())
            fail(at, "exit " + n.label->name.name() +
                         " is not lexically enclosed by a matching forever");
          if (it->second.routine != r_)
            fail(at, "exit " + n.label->name.name() + " would leave the enclosing function");
          auto body = norm_body(n.body);
          labels_[n.label->uid].exits.push_back(body_ctype(body));
          return simple(e, form::Exit{n.label, std::move(body)}, CType::void_);
        } else if constexpr (std::is_same_v<T, form::Return>) {
          std::vector<AstPtr> values;
          std::vector<CType> secondary;
          for (std::size_t i = 0; i < n.values.size(); ++i) {
            if (i == 0) {
              values.push_back(atomize_as(n.values[i], CType::value, pre, "the primary result"));
            } else {
              values.push_back(atomize(n.values[i], pre));
              secondary.push_back(values.back()->ctype);
            }
          }
          returns_[r_].push_back(std::move(secondary));
          return simple(e, form::Return{std::move(values)}, CType::void_, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::Multicall>) {
          Flat call = flatten(n.call, true);
          for (const VarPtr &f : n.formals)
            declare(f);
          auto body = norm_body(n.body);
          CType t = body_ctype(body);
          return simple(e, form::Multicall{n.formals, call.expr, std::move(body)}, t,
                        std::move(call.pre));
        } else if constexpr (std::is_same_v<T, form::Match>) {
          AstPtr subject = atomize(n.subject, pre);
          std::vector<MatchClause> clauses;
          std::vector<CType> ctypes;
          for (const MatchClause &c : n.clauses) {
            for (const VarPtr &v : c.vars) {
              v->ctype_inferred = false;
              declare(v);
            }
            PatternPtr p = norm_pattern(c.pattern, subject->ctype, pre);
            auto body = norm_body(c.body);
            ctypes.push_back(body_ctype(body));
            clauses.push_back(MatchClause{c.where, p, c.vars, std::move(body)});
          }
          CType t = unify_ctypes(ctypes);
          return simple(e, form::Match{subject, std::move(clauses), nullptr}, t, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::GetField>) {
          AstPtr obj = atomize_as(n.object, CType::value, pre, "get_field");
          AstPtr cls = atomize(n.class_ref, pre);
          return simple(e, form::GetField{n.field, obj, cls, n.unsafe}, CType::value,
                        std::move(pre));
        } else if constexpr (std::is_same_v<T, form::PutFields>) {
          AstPtr obj = atomize_as(n.object, CType::value, pre, "put_fields");
          auto fields = atomize_fields(n.fields, pre);
          std::vector<AstPtr> classes;
          for (const AstPtr &c : n.class_refs)
            classes.push_back(atomize(c, pre));
          return simple(e, form::PutFields{obj, std::move(fields), std::move(classes), n.unsafe},
                        CType::void_, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::Instance>) {
          AstPtr cls = atomize(n.class_ref, pre);
          auto fields = atomize_fields(n.fields, pre);
          return simple(e, form::Instance{n.klass, cls, std::move(fields)}, CType::value,
                        std::move(pre));
        } else if constexpr (std::is_same_v<T, form::Tuple>) {
          auto el = atomize_values(n.elements, pre, "tuple");
          return simple(e, form::Tuple{std::move(el)}, CType::value, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::ListCtor>) {
          auto el = atomize_values(n.elements, pre, "list");
          return simple(e, form::ListCtor{std::move(el)}, CType::value, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::CodeChunk>) {
          form::CodeChunk cc = n;
          for (form::ChunkRef &r : cc.refs)
            if (r.value)
              r.value = atomize(r.value, pre);
          return simple(e, std::move(cc), CType::void_, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::PrimitiveCall>) {
          const PrimitiveDef &p = *n.prim;
          if (n.args.size() != p.formals.size())
            fail(at, "primitive " + p.name.name() + " expects " + std::to_string(p.formals.size()) +
                         " argument(s)");
          std::vector<AstPtr> args;
          for (std::size_t i = 0; i < n.args.size(); ++i)
            args.push_back(atomize_as(n.args[i], p.formals[i].ctype, pre,
                                      "argument " + p.formals[i].name.name() + " of primitive " +
                                          p.name.name()));
          AstPtr call = typed(make_ast(at, form::PrimitiveCall{n.prim, std::move(args)}), p.result);
          if (as_init || p.result == CType::void_)
            return {std::move(pre), call};
          VarPtr t = new_temp(p.result, at);
          pre.push_back({t, call});
          return {std::move(pre), ref(t, at)};
        } else if constexpr (std::is_same_v<T, form::CIterInvoke>) {
          const CIteratorDef &d = *n.iter;
          std::vector<AstPtr> inputs;
          for (std::size_t i = 0; i < n.inputs.size(); ++i)
            inputs.push_back(atomize_as(n.inputs[i], d.inputs[i].ctype, pre,
                                        "input " + d.inputs[i].name.name() + " of c-iterator " +
                                            d.name.name()));
          for (const VarPtr &l : n.locals)
            declare(l);
          auto body = norm_body(n.body);
          return simple(e, form::CIterInvoke{n.iter, std::move(inputs), n.locals, std::move(body)},
                        CType::void_, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::DebugMsg>) {
          AstPtr v = atomize(n.value, pre);
          return simple(e, form::DebugMsg{v, n.message}, CType::void_, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::AssertMsg>) {
          AstPtr t = atomize(n.test, pre);
          return simple(e, form::AssertMsg{n.message, t}, CType::void_, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::CompileWarning>) {
          Flat f = flatten(n.expr, as_init);
          CType t = f.expr->ctype;
          return simple(e, form::CompileWarning{n.message, f.expr}, t, std::move(f.pre));
        } else if constexpr (std::is_same_v<T, form::CppIf>) {
          AstPtr then = norm(n.then);
          AstPtr otherwise = n.otherwise ? norm(n.otherwise) : nullptr;
          CType t = otherwise ? unify_ctypes({then->ctype, otherwise->ctype}) : then->ctype;
          return simple(e, form::CppIf{n.symbol, then, otherwise}, t);
        } else if constexpr (std::is_same_v<T, form::HostIf>) {
          form::HostIf hi{n.prefix, n.selected, {}};
          if (n.selected)
            hi.body = norm_body(n.body);
          CType t = body_ctype(hi.body);
          return simple(e, std::move(hi), t);
        } else if constexpr (std::is_same_v<T, form::CurrentEnvContainer> ||
                             std::is_same_v<T, form::ParentEnv>) {
          if (!module_)
            fail(at, "module environment forms are only valid inside a module");
          if constexpr (std::is_same_v<T, form::CurrentEnvContainer>)
            return {{}, ref(module_->env_container, at)};
          else
            return {{}, ref(module_->parent_env, at)};
        } else if constexpr (std::is_same_v<T, form::DefFunction>) {
          declare(n.var);
          normalize_routine(n.routine);
          for (const VarPtr &c : n.routine->closed)
            use(c, at);
          return simple(e, n, CType::void_);
        } else if constexpr (std::is_same_v<T, form::DefClass>) {
          AstPtr super = atomize(n.super_ref, pre);
          declare(n.var);
          return simple(e, form::DefClass{n.var, n.klass, super}, CType::void_, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::DefInstance>) {
          AstPtr cls = atomize(n.class_ref, pre);
          auto fields = atomize_fields(n.fields, pre);
          declare(n.var);
          return simple(e, form::DefInstance{n.var, n.klass, cls, std::move(fields)}, CType::void_,
                        std::move(pre));
        } else if constexpr (std::is_same_v<T, form::DefSelector>) {
          AstPtr cls = atomize(n.class_ref, pre);
          auto fields = atomize_fields(n.fields, pre);
          declare(n.var);
          return simple(e, form::DefSelector{n.var, n.info, cls, std::move(fields)}, CType::void_,
                        std::move(pre));
        } else if constexpr (std::is_same_v<T, form::DefFunMatcher>) {
          AstPtr fn = atomize_as(n.function, CType::value, pre, "defunmatcher");
          declare(n.var);
          return simple(e, form::DefFunMatcher{n.var, n.def, fn}, CType::void_, std::move(pre));
        } else if constexpr (std::is_same_v<T, form::DefTemplate>) {
          return simple(e, n, CType::void_);
        } else {
          static_assert(std::is_same_v<T, form::Export>);
          for (const ExportEntry &x : n.entries)
            if (x.value)
              use(x.value, at);
          return simple(e, n, CType::void_);
        }
      },
      e->form);
}

PatternPtr Normalizer::norm_pattern(const PatternPtr &p, CType at, std::vector<LetBinding> &pre) {
  auto out = std::make_shared<Pattern>();
  out->where = p->where;
  out->ctype = at;
  if (at == CType::void_)
    fail(p->where, "cannot match a :void thing");
  std::visit(
      [&](const auto &n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, pat::Wildcard>) {
          out->node = n;
        } else if constexpr (std::is_same_v<T, pat::Var>) {
          if (!n.var->ctype_inferred) {
            n.var->ctype = at;
            n.var->ctype_inferred = true;
          } else if (n.var->ctype != at) {
            fail(p->where, "pattern variable " + n.var->display_name() + " occurs at " +
                               kw(n.var->ctype) + " and " + kw(at) + " positions");
          }
          out->node = n;
        } else if constexpr (std::is_same_v<T, pat::Const>) {
          AstPtr c = atomize(n.expr, pre);
          if (c->ctype != at)
            fail(p->where, "c-type mismatch: constant pattern " + to_string(*n.expr) + " is " +
                               kw(c->ctype) + " but the matched thing is " + kw(at));
          out->node = pat::Const{c};
        } else if constexpr (std::is_same_v<T, pat::Matcher>) {
          const Binding &b = *n.matcher;
          const FormalList &in = b.cmatcher ? b.cmatcher->inputs : b.funmatcher->inputs;
          const FormalList &outs = b.cmatcher ? b.cmatcher->outputs : b.funmatcher->outputs;
          if (in.front().ctype != at)
            fail(p->where, "matcher " + b.name.name() + " matches " + kw(in.front().ctype) +
                               " things but the matched thing is " + kw(at));
          if (n.inputs.size() + 1 != in.size() || n.subs.size() != outs.size())
            fail(p->where, "matcher " + b.name.name() + " arity mismatch");
          pat::Matcher m;
          m.matcher = n.matcher;
          if (n.funmatcher_ref)
            m.funmatcher_ref = atomize(n.funmatcher_ref, pre);
          for (std::size_t i = 0; i < n.inputs.size(); ++i)
            m.inputs.push_back(atomize_as(n.inputs[i], in[i + 1].ctype, pre,
                                          "input " + in[i + 1].name.name() + " of matcher " +
                                              b.name.name()));
          for (std::size_t j = 0; j < n.subs.size(); ++j)
            m.subs.push_back(norm_pattern(n.subs[j], outs[j].ctype, pre));
          out->node = std::move(m);
        } else if constexpr (std::is_same_v<T, pat::Instance>) {
          if (!is_value(at))
            fail(p->where, "instance pattern on a " + kw(at) + " thing; objects are values");
          pat::Instance ip;
          ip.klass = n.klass;
          ip.class_ref = atomize(n.class_ref, pre);
          for (const pat::FieldPat &f : n.fields)
            ip.fields.push_back({f.field, norm_pattern(f.sub, CType::value, pre)});
          out->node = std::move(ip);
        } else if constexpr (std::is_same_v<T, pat::And>) {
          pat::And a;
          for (const PatternPtr &s : n.conjuncts)
            a.conjuncts.push_back(norm_pattern(s, at, pre));
          out->node = std::move(a);
        } else {
          pat::Or o;
          for (const PatternPtr &s : n.disjuncts)
            o.disjuncts.push_back(norm_pattern(s, at, pre));
          out->node = std::move(o);
        }
      },
      p->node);
  return out;
}

} // namespace

ModuleUnit normalize_module(ExpandedModule m) {
  ModuleUnit unit;
  unit.expanded = std::move(m);
  Normalizer n(&unit.expanded);
  n.normalize_routine(unit.expanded.start);
  unit.routines = std::move(n.routines);
  unit.warnings = unit.expanded.warnings;
  return unit;
}

AstPtr normalize(const AstPtr &ast, Routine &routine, std::optional<CType> expected) {
  Normalizer n(nullptr);
  n.enter(&routine);
  AstPtr out = n.norm(ast);
  if (expected && out->ctype != *expected)
    throw CompileError(Phase::normalize, ast->where,
                       "c-type mismatch: expected " + kw(*expected) + " but got " +
                           kw(out->ctype));
  return out;
}

} // namespace meltlite
