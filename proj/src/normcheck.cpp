#include "meltlite/normcheck.hpp"

#include "meltlite/reader.hpp"
#include "meltlite/stdlib.hpp"

#include <functional>
#include <sstream>
#include <stdexcept>

namespace meltlite {

// ---------------------------------------------------------------------------
// oracle

namespace {

using Bound = std::map<std::uint32_t, Thing>;
using Cont = std::function<bool(Bound &)>;

struct Oracle {
  MatchSemantics &sem;

  std::vector<Thing> eval_all(const std::vector<AstPtr> &in) {
    std::vector<Thing> out;
    for (const AstPtr &a : in)
      out.push_back(sem.eval(*a));
    return out;
  }

  // Matches the sub-patterns `subs[i..]` against `things[i..]`, then runs k.
  bool seq(const std::vector<PatternPtr> &subs, const std::vector<Thing> &things, std::size_t i,
           Bound &b, const Cont &k) {
    if (i == subs.size())
      return k(b);
    return walk(*subs[i], things[i], b, [&](Bound &b2) { return seq(subs, things, i + 1, b2, k); });
  }

  bool walk(const Pattern &p, const Thing &t, Bound &b, const Cont &k) {
    return std::visit(
        [&](const auto &n) -> bool {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, pat::Wildcard>) {
            return k(b);
          } else if constexpr (std::is_same_v<T, pat::Var>) {
            auto it = b.find(n.var->uid);
            if (it != b.end())
              return it->second == t && k(b);
            b[n.var->uid] = t;
            if (k(b))
              return true;
            b.erase(n.var->uid);
            return false;
          } else if constexpr (std::is_same_v<T, pat::Const>) {
            return sem.eval(*n.expr) == t && k(b);
          } else if constexpr (std::is_same_v<T, pat::Matcher>) {
            std::vector<Thing> inputs = eval_all(n.inputs);
            std::vector<Thing> results;
            if (!sem.test(*n.matcher, t, inputs, results))
              return false;
            std::vector<Thing> outs;
            if (n.matcher->kind == BindingKind::funmatcher)
              outs = results;
            else if (!n.subs.empty())
              outs = sem.fill(*n.matcher, t, inputs);
            const FormalList &of =
                n.matcher->cmatcher ? n.matcher->cmatcher->outputs : n.matcher->funmatcher->outputs;
            outs.resize(n.subs.size());
            for (std::size_t j = 0; j < n.subs.size(); ++j)
              if (!outs[j].ref && outs[j].num == 0)
                outs[j].ctype = j < of.size() ? of[j].ctype : CType::value;
            return seq(n.subs, outs, 0, b, k);
          } else if constexpr (std::is_same_v<T, pat::Instance>) {
            if (!sem.is_a(t, *n.klass))
              return false;
            std::vector<PatternPtr> subs;
            std::vector<Thing> things;
            for (const pat::FieldPat &f : n.fields) {
              subs.push_back(f.sub);
              things.push_back(sem.get_field(t, *f.field));
            }
            return seq(subs, things, 0, b, k);
          } else if constexpr (std::is_same_v<T, pat::And>) {
            std::vector<Thing> same(n.conjuncts.size(), t);
            return seq(n.conjuncts, same, 0, b, k);
          } else {
            for (const PatternPtr &d : n.disjuncts)
              if (walk(*d, t, b, k))
                return true;
            return false;
          }
        },
        p.node);
  }
};

} // namespace

OracleResult oracle_match(const std::vector<MatchClause> &clauses, const Thing &subject,
                          MatchSemantics &sem) {
  Oracle o{sem};
  OracleResult out;
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    const MatchClause &c = clauses[i];
    Bound found;
    bool ok = o.walk(*c.pattern, subject, found, [&](Bound &b) {
      found = b;
      return true;
    });
    if (!ok)
      continue;
    out.clause = static_cast<int>(i);
    for (const VarPtr &v : c.vars) {
      auto it = found.find(v->uid);
      out.bindings[v->name] = it != found.end() ? it->second : Thing{v->ctype, 0, nullptr};
    }
    return out;
  }
  return out;
}

// ---------------------------------------------------------------------------
// things

namespace things {

namespace {
Thing make(CType ct, ThingRec rec) {
  return Thing{ct, 0, std::make_shared<const ThingRec>(std::move(rec))};
}
} // namespace

Thing cleared(CType t) { return Thing{t, 0, nullptr}; }
Thing num(long n) { return Thing{CType::long_, n, nullptr}; }
Thing cstring(const std::string &text) { return make(CType::cstring, {"cstring", text, 0, {}}); }
Thing node(const std::string &tag, std::vector<Thing> children, long n) {
  return make(CType::hnode, {tag, "", n, std::move(children)});
}
Thing identifier(const std::string &text) {
  return make(CType::hnode, {"identifier", text, 0, {cstring(text)}});
}
Thing integer_cst(long n) { return node("integer_cst", {}, n); }
Thing stmt(const std::string &tag, std::vector<Thing> children) {
  return make(CType::hstmt, {tag, "", 0, std::move(children)});
}
Thing boxed_integer(long n) { return make(CType::value, {"integer", "", n, {}}); }
Thing boxed_string(const std::string &text) {
  return make(CType::value, {"string", text, 0, {cstring(text)}});
}
Thing object(const std::string &class_name, std::vector<Thing> fields) {
  return make(CType::value, {class_name, "", 0, std::move(fields)});
}
Thing value(const std::string &tag, std::vector<Thing> children) {
  return make(CType::value, {tag, "", 0, std::move(children)});
}

} // namespace things

// ---------------------------------------------------------------------------
// stdlib matcher semantics

namespace {

const std::vector<std::string> node_codes = {
    "",           "var_decl",     "record_type", "field_decl",   "identifier",
    "integer_cst", "array_type",  "integer_type", "array_ref",   "component_ref"};

bool has_tag(const Thing &t, const char *tag) { return t.ref && t.ref->tag == tag; }

Thing operand(const Thing &n, std::size_t i) {
  if (n.ref && i < n.ref->children.size())
    return n.ref->children[i];
  return things::cleared(CType::hnode);
}

Thing identifier_text(const Thing &n) {
  if (has_tag(n, "identifier") && !n.ref->children.empty())
    return n.ref->children[0];
  return things::cleared(CType::cstring);
}

bool is_decl(const Thing &n) { return has_tag(n, "var_decl") || has_tag(n, "field_decl"); }
Thing decl_name(const Thing &n) { return is_decl(n) ? operand(n, 0) : things::cleared(CType::hnode); }
Thing decl_type(const Thing &n) { return is_decl(n) ? operand(n, 1) : things::cleared(CType::hnode); }

Thing value_child(const Thing &v, std::size_t i) {
  if (v.ref && i < v.ref->children.size())
    return v.ref->children[i];
  return things::cleared(CType::value);
}

} // namespace

void StdlibMatchSemantics::add_class(ClassPtr cls) { classes_[cls->name.name()] = std::move(cls); }

bool StdlibMatchSemantics::test(const Binding &matcher, const Thing &s,
                                const std::vector<Thing> &in, std::vector<Thing> &results) {
  const std::string name = matcher.name.name();
  auto node_is = [&](const char *tag) { return has_tag(s, tag); };
  if (name == "cstring_same")
    return s.ref && in.at(0).ref && s.ref->text == in[0].ref->text;
  if (name == "assign_single")
    return node_is("assign_single");
  if (name == "node_var_decl")
    return node_is("var_decl");
  if (name == "node_record_type_with_fields")
    return node_is("record_type");
  if (name == "node_field_decl")
    return node_is("field_decl");
  if (name == "node_identifier")
    return node_is("identifier");
  if (name == "node_array_type")
    return node_is("array_type");
  if (name == "node_integer_type_bounded")
    return node_is("integer_type");
  if (name == "node_integer_cst")
    return node_is("integer_cst");
  if (name == "node_array_ref")
    return node_is("array_ref");
  if (name == "node_component_ref")
    return node_is("component_ref");
  if (name == "hnode_of_code") {
    if (!s.ref)
      return false;
    long code = 0;
    for (std::size_t i = 1; i < node_codes.size(); ++i)
      if (node_codes[i] == s.ref->tag)
        code = static_cast<long>(i);
    return code == in.at(0).num;
  }
  if (name == "integerbox_of")
    return node_is("integer") || node_is("constant_integer");
  if (name == "string_of")
    return node_is("string");
  if (name == "pair_of")
    return node_is("pair");
  if (name == "tuple2")
    return node_is("tuple") && s.ref->children.size() == 2;
  if (name == "nonnull")
    return s.ref != nullptr;
  if (name == "long_equal")
    return s.num == in.at(0).num;
  if (name == "long_between")
    return s.num >= in.at(0).num && s.num <= in.at(1).num;
  if (name == "long_positive")
    return s.num > 0;
  if (name == "isbiggereven") {
    if (s.num % 2 == 0 && s.num > in.at(0).num) {
      results = {things::num(s.num / 2)};
      return true;
    }
    return false;
  }
  if (name == "isdivisible") {
    long d = in.at(0).num;
    if (d != 0 && s.num % d == 0) {
      results = {things::num(s.num / d)};
      return true;
    }
    return false;
  }
  throw std::logic_error("no host semantics for matcher " + name);
}

std::vector<Thing> StdlibMatchSemantics::fill(const Binding &matcher, const Thing &s,
                                              const std::vector<Thing> &) {
  const std::string name = matcher.name.name();
  if (name == "assign_single")
    return {operand(s, 0), operand(s, 1)};
  if (name == "node_var_decl")
    return {decl_type(s), identifier_text(decl_name(s)), decl_name(s)};
  if (name == "node_record_type_with_fields")
    return {operand(s, 0), s};
  if (name == "node_field_decl")
    return {decl_name(s), decl_type(s)};
  if (name == "node_identifier")
    return {identifier_text(s)};
  if (name == "node_array_type" || name == "node_array_ref" || name == "node_component_ref")
    return {operand(s, 0), operand(s, 1)};
  if (name == "node_integer_type_bounded")
    return {s, operand(s, 0), operand(s, 1), operand(s, 2)};
  if (name == "node_integer_cst")
    return {things::num(has_tag(s, "integer_cst") ? s.ref->num : 0)};
  if (name == "integerbox_of")
    return {things::num(s.ref ? s.ref->num : 0)};
  if (name == "string_of")
    return {s.ref && !s.ref->children.empty() ? s.ref->children[0]
                                              : things::cleared(CType::cstring)};
  if (name == "pair_of" || name == "tuple2")
    return {value_child(s, 0), value_child(s, 1)};
  return {};
}

bool StdlibMatchSemantics::is_a(const Thing &s, const ClassInfo &cls) {
  if (!s.ref)
    return false;
  auto it = classes_.find(s.ref->tag);
  return it != classes_.end() && it->second->is_subclass_of(&cls);
}

Thing StdlibMatchSemantics::get_field(const Thing &object, const FieldInfo &field) {
  if (!field.owner || !is_a(object, *field.owner))
    return things::cleared(CType::value);
  return value_child(object, static_cast<std::size_t>(field.index));
}

Thing StdlibMatchSemantics::eval(const Ast &atom) {
  return std::visit(
      [&](const auto &n) -> Thing {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, form::LongLit>) {
          return things::num(static_cast<long>(n.value));
        } else if constexpr (std::is_same_v<T, form::StringLit>) {
          auto it = strings_.find(n.value);
          if (it == strings_.end())
            it = strings_.emplace(n.value, things::cstring(n.value)).first;
          return it->second;
        } else if constexpr (std::is_same_v<T, form::Nil>) {
          return things::cleared(CType::value);
        } else if constexpr (std::is_same_v<T, form::VarRef>) {
          auto it = env.find(n.var->uid);
          return it != env.end() ? it->second : things::cleared(n.var->ctype);
        } else {
          throw std::logic_error("cannot evaluate non-atomic pattern operand " + to_string(atom));
        }
      },
      atom.form);
}

// ---------------------------------------------------------------------------
// A-normal form scan

namespace {

struct AnfScan {
  std::vector<std::string> &out;

  void bad(const Ast &where, const std::string &what) {
    std::ostringstream os;
    os << where.where << ": " << what;
    out.push_back(os.str());
  }

  void atom(const Ast &parent, const AstPtr &a, const char *role) {
    if (!a)
      return;
    if (!is_atom(*a))
      bad(parent, std::string(role) + " is not atomic: " + to_string(*a));
    expr(a);
  }

  void atoms(const Ast &parent, const std::vector<AstPtr> &v, const char *role) {
    for (const AstPtr &a : v)
      atom(parent, a, role);
  }

  void fields(const Ast &parent, const std::vector<FieldInit> &fs) {
    for (const FieldInit &f : fs)
      atom(parent, f.value, "field value");
  }

  void body(const std::vector<AstPtr> &v) {
    for (const AstPtr &a : v)
      expr(a);
  }

  void pattern(const Ast &m, const Pattern &p) {
    std::visit(
        [&](const auto &n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, pat::Const>) {
            atom(m, n.expr, "pattern constant");
          } else if constexpr (std::is_same_v<T, pat::Matcher>) {
            atom(m, n.funmatcher_ref, "fun-matcher reference");
            atoms(m, n.inputs, "matcher input");
            for (const PatternPtr &s : n.subs)
              pattern(m, *s);
          } else if constexpr (std::is_same_v<T, pat::Instance>) {
            atom(m, n.class_ref, "instance pattern class");
            for (const pat::FieldPat &f : n.fields)
              pattern(m, *f.sub);
          } else if constexpr (std::is_same_v<T, pat::And>) {
            for (const PatternPtr &s : n.conjuncts)
              pattern(m, *s);
          } else if constexpr (std::is_same_v<T, pat::Or>) {
            for (const PatternPtr &s : n.disjuncts)
              pattern(m, *s);
          }
        },
        p.node);
  }

  void expr(const AstPtr &ap) {
    if (!ap)
      return;
    const Ast &a = *ap;
    if (!a.typed)
      bad(a, "untyped node " + to_string(a));
    std::visit(
        [&](const auto &n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, form::Apply>) {
            atom(a, n.fn, "applied function");
            atoms(a, n.args, "argument");
          } else if constexpr (std::is_same_v<T, form::Send>) {
            atom(a, n.selector, "selector");
            atom(a, n.receiver, "receiver");
            atoms(a, n.args, "argument");
          } else if constexpr (std::is_same_v<T, form::Setq>) {
            expr(n.value);
          } else if constexpr (std::is_same_v<T, form::Let> || std::is_same_v<T, form::Letrec>) {
            for (const LetBinding &b : n.bindings)
              expr(b.init);
            body(n.body);
          } else if constexpr (std::is_same_v<T, form::If>) {
            atom(a, n.test, "test");
            expr(n.then);
            expr(n.otherwise);
          } else if constexpr (std::is_same_v<T, form::Cond> || std::is_same_v<T, form::And> ||
                               std::is_same_v<T, form::Or>) {
            bad(a, "conditional left unlowered");
          } else if constexpr (std::is_same_v<T, form::Progn> || std::is_same_v<T, form::Forever> ||
                               std::is_same_v<T, form::Exit>) {
            body(n.body);
          } else if constexpr (std::is_same_v<T, form::Return>) {
            atoms(a, n.values, "returned value");
          } else if constexpr (std::is_same_v<T, form::Multicall>) {
            expr(n.call);
            body(n.body);
          } else if constexpr (std::is_same_v<T, form::Match>) {
            atom(a, n.subject, "match subject");
            for (const MatchClause &c : n.clauses) {
              pattern(a, *c.pattern);
              body(c.body);
            }
          } else if constexpr (std::is_same_v<T, form::GetField>) {
            atom(a, n.object, "object");
            atom(a, n.class_ref, "class");
          } else if constexpr (std::is_same_v<T, form::PutFields>) {
            atom(a, n.object, "object");
            fields(a, n.fields);
            atoms(a, n.class_refs, "class");
          } else if constexpr (std::is_same_v<T, form::Instance>) {
            atom(a, n.class_ref, "class");
            fields(a, n.fields);
          } else if constexpr (std::is_same_v<T, form::Tuple> || std::is_same_v<T, form::ListCtor>) {
            atoms(a, n.elements, "element");
          } else if constexpr (std::is_same_v<T, form::CodeChunk>) {
            for (const form::ChunkRef &r : n.refs)
              atom(a, r.value, "code chunk operand");
          } else if constexpr (std::is_same_v<T, form::PrimitiveCall>) {
            atoms(a, n.args, "primitive argument");
          } else if constexpr (std::is_same_v<T, form::CIterInvoke>) {
            atoms(a, n.inputs, "iterator input");
            body(n.body);
          } else if constexpr (std::is_same_v<T, form::DebugMsg>) {
            atom(a, n.value, "debugged value");
          } else if constexpr (std::is_same_v<T, form::AssertMsg>) {
            atom(a, n.test, "asserted test");
          } else if constexpr (std::is_same_v<T, form::CompileWarning>) {
            expr(n.expr);
          } else if constexpr (std::is_same_v<T, form::CppIf>) {
            expr(n.then);
            expr(n.otherwise);
          } else if constexpr (std::is_same_v<T, form::HostIf>) {
            body(n.body);
          } else if constexpr (std::is_same_v<T, form::DefClass>) {
            atom(a, n.super_ref, "superclass");
          } else if constexpr (std::is_same_v<T, form::DefInstance> ||
                               std::is_same_v<T, form::DefSelector>) {
            atom(a, n.class_ref, "class");
            fields(a, n.fields);
          } else if constexpr (std::is_same_v<T, form::DefFunMatcher>) {
            atom(a, n.function, "matching function");
          }
        },
        a.form);
  }
};

const form::Match *find_match(const AstPtr &a);

const form::Match *find_in(const std::vector<AstPtr> &v) {
  for (const AstPtr &a : v)
    if (const form::Match *m = find_match(a))
      return m;
  return nullptr;
}

const form::Match *find_match(const AstPtr &ap) {
  if (!ap)
    return nullptr;
  return std::visit(
      [&](const auto &n) -> const form::Match * {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, form::Match>) {
          return &n;
        } else if constexpr (std::is_same_v<T, form::Let> || std::is_same_v<T, form::Letrec>) {
          for (const LetBinding &b : n.bindings)
            if (const form::Match *m = find_match(b.init))
              return m;
          return find_in(n.body);
        } else if constexpr (std::is_same_v<T, form::If>) {
          if (const form::Match *m = find_match(n.then))
            return m;
          return find_match(n.otherwise);
        } else if constexpr (std::is_same_v<T, form::Progn> || std::is_same_v<T, form::Forever> ||
                             std::is_same_v<T, form::Exit>) {
          return find_in(n.body);
        } else if constexpr (std::is_same_v<T, form::Setq>) {
          return find_match(n.value);
        } else if constexpr (std::is_same_v<T, form::Multicall>) {
          if (const form::Match *m = find_match(n.call))
            return m;
          return find_in(n.body);
        } else {
          return nullptr;
        }
      },
      ap->form);
}

} // namespace

std::vector<std::string> anf_violations(const Ast &a) {
  std::vector<std::string> out;
  AnfScan scan{out};
  scan.expr(std::make_shared<Ast>(a));
  return out;
}

std::vector<std::string> anf_violations(const Routine &r) {
  std::vector<std::string> out;
  AnfScan scan{out};
  scan.body(r.body);
  return out;
}

// ---------------------------------------------------------------------------
// random match cases

namespace {

class CaseGen {
public:
  explicit CaseGen(std::mt19937_64 &rng) : rng_(rng) {}

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }

  // things --------------------------------------------------------------

  Thing hnode(int depth) {
    if (!pool_.empty() && chance(0.15))
      return pool_[pick(static_cast<int>(pool_.size()))];
    if (chance(0.05))
      return things::cleared(CType::hnode);
    Thing t;
    if (depth <= 0 || chance(0.3)) {
      t = chance(0.5) ? things::identifier(name()) : things::integer_cst(pick(11) - 2);
    } else {
      switch (pick(7)) {
      case 0:
        t = things::node("var_decl", {things::identifier(name()), hnode(depth - 1)});
        break;
      case 1: {
        std::vector<Thing> ch{things::identifier(name())};
        for (int i = pick(3); i > 0; --i)
          ch.push_back(things::node("field_decl", {things::identifier(name()), hnode(depth - 2)}));
        t = things::node("record_type", std::move(ch));
        break;
      }
      case 2:
        t = things::node("field_decl", {things::identifier(name()), hnode(depth - 1)});
        break;
      case 3:
        t = things::node("array_type", {hnode(depth - 1), hnode(depth - 1)});
        break;
      case 4:
        t = things::node("integer_type",
                         {things::integer_cst(pick(3) - 1), things::integer_cst(pick(9)),
                          things::integer_cst(chance(0.5) ? 4 : 8)});
        break;
      case 5:
        t = things::node("array_ref", {hnode(depth - 1), hnode(depth - 1)});
        break;
      default:
        t = things::node("component_ref", {hnode(depth - 1), hnode(depth - 1)});
        break;
      }
    }
    pool_.push_back(t);
    return t;
  }

  Thing value(int depth) {
    if (!vpool_.empty() && chance(0.15))
      return vpool_[pick(static_cast<int>(vpool_.size()))];
    if (chance(0.08))
      return things::cleared(CType::value);
    Thing t;
    if (depth <= 0 || chance(0.3)) {
      t = chance(0.5) ? things::boxed_integer(pick(11) - 2) : things::boxed_string(name());
    } else {
      switch (pick(6)) {
      case 0:
        t = things::value("pair", {value(depth - 1), value(depth - 1)});
        break;
      case 1: {
        std::vector<Thing> el;
        for (int i = chance(0.7) ? 2 : 3; i > 0; --i)
          el.push_back(value(depth - 1));
        t = things::value("tuple", std::move(el));
        break;
      }
      case 2:
        t = things::object("class_named", {value(depth - 1)});
        break;
      case 3:
        t = things::object(chance(0.5) ? "class_symbol" : "class_keyword",
                           {things::boxed_string(name()), value(depth - 1)});
        break;
      case 4:
        t = things::object("class_container", {value(depth - 1)});
        break;
      default:
        t = things::boxed_integer(pick(9));
        break;
      }
    }
    vpool_.push_back(t);
    return t;
  }

  std::string name() {
    static const char *names[] = {"a", "b", "len", "buf"};
    return names[pick(4)];
  }

  // patterns ------------------------------------------------------------

  std::string var(char prefix) {
    return std::string("?") + prefix + std::to_string(1 + pick(3));
  }

  std::string pattern(CType ct, const Thing &hint, int depth, bool vars) {
    int r = pick(100);
    if (r < 10)
      return "?_";
    if (r < 25 && vars)
      return var(prefix(ct));
    if (depth > 0 && r < 33) {
      std::string a = pattern(ct, hint, depth - 1, vars);
      std::string b = pattern(ct, hint, depth - 1, vars);
      return "?(and " + a + " " + b + ")";
    }
    if (depth > 0 && r < 43) {
      std::string a = pattern(ct, hint, depth - 1, false);
      std::string b = pattern(ct, random_like(ct), depth - 1, false);
      if (vars && chance(0.4)) {
        std::string v = var(prefix(ct));
        a = "?(and " + v + " " + a + ")";
        b = "?(and " + v + " " + b + ")";
      }
      return "?(or " + (chance(0.5) ? a + " " + b : b + " " + a) + ")";
    }
    switch (ct) {
    case CType::hnode:
      return hnode_pattern(hint, depth, vars);
    case CType::long_:
      return long_pattern(hint, depth, vars);
    case CType::cstring:
      return cstring_pattern(hint);
    default:
      return value_pattern(hint, depth, vars);
    }
  }

private:
  std::mt19937_64 &rng_;
  std::vector<Thing> pool_, vpool_;

  static char prefix(CType ct) {
    switch (ct) {
    case CType::hnode:
      return 'h';
    case CType::long_:
      return 'l';
    case CType::cstring:
      return 'c';
    default:
      return 'v';
    }
  }

  Thing random_like(CType ct) {
    switch (ct) {
    case CType::hnode:
      return hnode(1);
    case CType::long_:
      return things::num(pick(11) - 2);
    case CType::cstring:
      return things::cstring(name());
    default:
      return value(1);
    }
  }

  static Thing child(const Thing &t, std::size_t i, CType ct) {
    if (t.ref && i < t.ref->children.size())
      return t.ref->children[i];
    return things::cleared(ct);
  }

  std::string subs(const std::vector<std::pair<CType, Thing>> &outs, int depth, bool vars) {
    std::string s;
    for (const auto &[ct, h] : outs)
      s += " " + pattern(ct, h, depth - 1, vars);
    return s;
  }

  std::string hnode_pattern(const Thing &h, int depth, bool vars) {
    std::string tag = h.ref && chance(0.7) ? h.ref->tag : node_codes[1 + pick(9)];
    if (depth <= 0 || chance(0.15)) {
      int code = 1 + pick(9);
      for (std::size_t i = 1; i < node_codes.size(); ++i)
        if (h.ref && node_codes[i] == h.ref->tag && chance(0.6))
          code = static_cast<int>(i);
      return "?(hnode_of_code " + std::to_string(code) + ")";
    }
    auto H = CType::hnode;
    auto ident_text = [&](const Thing &n) { return child(n, 0, CType::cstring); };
    if (tag == "var_decl")
      return "?(node_var_decl" +
             subs({{H, child(h, 1, H)}, {CType::cstring, ident_text(child(h, 0, H))},
                   {H, child(h, 0, H)}},
                  depth, vars) +
             ")";
    if (tag == "record_type")
      return "?(node_record_type_with_fields" + subs({{H, child(h, 0, H)}, {H, h}}, depth, vars) +
             ")";
    if (tag == "field_decl")
      return "?(node_field_decl" + subs({{H, child(h, 0, H)}, {H, child(h, 1, H)}}, depth, vars) +
             ")";
    if (tag == "identifier")
      return "?(node_identifier" + subs({{CType::cstring, ident_text(h)}}, depth, vars) + ")";
    if (tag == "integer_cst")
      return "?(node_integer_cst" +
             subs({{CType::long_, things::num(h.ref ? h.ref->num : 0)}}, depth, vars) + ")";
    if (tag == "integer_type")
      return "?(node_integer_type_bounded" +
             subs({{H, h}, {H, child(h, 0, H)}, {H, child(h, 1, H)}, {H, child(h, 2, H)}}, depth,
                  vars) +
             ")";
    std::string m = tag == "array_type" ? "node_array_type"
                    : tag == "array_ref" ? "node_array_ref"
                                         : "node_component_ref";
    return "?(" + m + subs({{H, child(h, 0, H)}, {H, child(h, 1, H)}}, depth, vars) + ")";
  }

  std::string long_pattern(const Thing &h, int depth, bool vars) {
    long n = h.num;
    auto lit = [&](long v) { return std::to_string(v < 0 ? 0 : v); };
    switch (pick(depth > 0 ? 7 : 5)) {
    case 0:
      return lit(chance(0.6) ? n : pick(9));
    case 1:
      return "?(long_equal " + lit(chance(0.6) ? n : pick(9)) + ")";
    case 2: {
      long lo = pick(5), hi = lo + pick(6);
      return "?(long_between " + lit(lo) + " " + lit(hi) + ")";
    }
    case 3:
      return "?(long_positive)";
    case 4:
      return "?_";
    case 5:
      return "?(isbiggereven " + lit(pick(5)) + " " +
             pattern(CType::long_, things::num(n / 2), depth - 1, vars) + ")";
    default: {
      long d = 1 + pick(3);
      return "?(isdivisible " + lit(d) + " " +
             pattern(CType::long_, things::num(n / d), depth - 1, vars) + ")";
    }
    }
  }

  std::string cstring_pattern(const Thing &h) {
    std::string text = h.ref && chance(0.6) ? h.ref->text : name();
    switch (pick(3)) {
    case 0:
      return "?(cstring_same \"" + text + "\")";
    case 1:
      return "?(cstring_any_of \"" + text + "\" \"" + name() + "\")";
    default:
      return "?_";
    }
  }

  std::string value_pattern(const Thing &h, int depth, bool vars) {
    auto V = CType::value;
    std::string tag = h.ref && chance(0.7) ? h.ref->tag : "";
    if (depth <= 0)
      return chance(0.5) ? "?(nonnull)" : "()";
    if (tag.empty()) {
      static const char *tags[] = {"integer", "string", "pair", "tuple", "class_named",
                                   "class_symbol", "class_container", ""};
      tag = tags[pick(8)];
    }
    if (tag == "integer")
      return "?(integerbox_of" +
             subs({{CType::long_, things::num(h.ref ? h.ref->num : 0)}}, depth, vars) + ")";
    if (tag == "string")
      return "?(string_of" + subs({{CType::cstring, child(h, 0, CType::cstring)}}, depth, vars) +
             ")";
    if (tag == "pair")
      return "?(pair_of" + subs({{V, child(h, 0, V)}, {V, child(h, 1, V)}}, depth, vars) + ")";
    if (tag == "tuple")
      return "?(tuple2" + subs({{V, child(h, 0, V)}, {V, child(h, 1, V)}}, depth, vars) + ")";
    if (tag == "class_named")
      return "?(instance class_named :named_name " + pattern(V, child(h, 0, V), depth - 1, vars) +
             ")";
    if (tag == "class_symbol" || tag == "class_keyword")
      return "?(instance class_symbol :named_name " + pattern(V, child(h, 0, V), depth - 1, vars) +
             (chance(0.5) ? " :symb_data " + pattern(V, child(h, 1, V), depth - 1, vars) : "") +
             ")";
    if (tag == "class_container")
      return "?(instance class_container :container_value " +
             pattern(V, child(h, 0, V), depth - 1, vars) + ")";
    return chance(0.5) ? "?(nonnull)" : "()";
  }
};

} // namespace

MatchCase random_match_case(std::mt19937_64 &rng, int max_depth) {
  CaseGen g(rng);
  MatchCase c;
  int kind = g.pick(10);
  c.subject_ctype = kind < 5 ? CType::hnode : kind < 8 ? CType::value : CType::long_;
  switch (c.subject_ctype) {
  case CType::hnode:
    c.subject = g.hnode(max_depth);
    break;
  case CType::value:
    c.subject = g.value(max_depth);
    break;
  default:
    c.subject = things::num(g.pick(13) - 2);
    break;
  }
  std::string formal = c.subject_ctype == CType::hnode   ? ":hnode x"
                       : c.subject_ctype == CType::long_ ? ":long x"
                                                         : "x";
  std::ostringstream os;
  os << "(defun probe (fn " << formal << ")\n  (match x";
  int n = 1 + g.pick(4);
  for (int i = 0; i < n; ++i) {
    Thing hint = c.subject;
    if (g.chance(0.3))
      hint = c.subject_ctype == CType::hnode   ? g.hnode(2)
             : c.subject_ctype == CType::value ? g.value(2)
                                               : things::num(g.pick(9));
    os << "\n    (" << g.pattern(c.subject_ctype, hint, max_depth, true) << " " << i + 1 << ")";
  }
  if (g.chance(0.3))
    os << "\n    (?_ 0)";
  os << "))\n";
  c.source = os.str();
  return c;
}

ProbeMatch compile_probe(const std::string &source, ConstModuleEnvPtr parent,
                         const MatchCompileOptions &opts) {
  ExpandOptions eo;
  eo.module_name = "probe";
  ProbeMatch out;
  out.unit = normalize_module(expand_unit(read_unit(source, "<probe>"), std::move(parent), eo));
  for (const RoutinePtr &r : out.unit.routines) {
    if (const form::Match *m = find_in(r->body)) {
      out.match = m;
      auto graph = compile_match(*m, *r, opts);
      const_cast<form::Match *>(m)->graph = graph;
      break;
    }
  }
  if (!out.match)
    throw std::logic_error("probe source has no match expression");
  return out;
}

} // namespace meltlite
