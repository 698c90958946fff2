#include "meltlite/matchc.hpp"

#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

namespace meltlite {

int MatchGraph::count(StepKind k) const {
  int n = 0;
  for (const MatchStep &s : steps)
    n += s.kind == k;
  return n;
}

namespace {

[[noreturn]] void fail(const Location &at, const std::string &msg) {
  throw CompileError(Phase::match, at, msg);
}

std::string atom_key(const Ast &a) {
  if (a.is<form::VarRef>())
    return "v" + std::to_string(a.as<form::VarRef>().var->uid);
  if (a.is<form::LongLit>())
    return std::to_string(a.as<form::LongLit>().value);
  if (a.is<form::Nil>())
    return "nil";
  return to_string(a);
}

std::string inputs_key(const std::vector<AstPtr> &inputs) {
  std::string k;
  for (const AstPtr &a : inputs)
    k += "," + atom_key(*a);
  return k;
}

/// One elementary operation of a linearized clause alternative.
struct Op {
  enum Kind { test, fill, var_occurrence, set_flag, flag_conj } kind;
  MatchStep proto;
};

using Alt = std::vector<Op>;

class Compiler {
public:
  Compiler(Routine &routine, const MatchCompileOptions &opts) : routine_(routine), opts_(opts) {}

  std::shared_ptr<MatchGraph> run(const form::Match &m);

private:
  Routine &routine_;
  MatchCompileOptions opts_;
  std::shared_ptr<MatchGraph> g_;
  std::unordered_map<std::string, int> data_by_key_;
  std::vector<Alt> alts_;
  std::vector<int> alt_clause_;
  std::map<std::string, int> memo_;
  std::unordered_map<int, int> success_;
  int fail_step_ = -1;
  int flag_counter_ = 0;

  int data(const std::string &key, DataRole role, CType t, const Location &at) {
    if (auto it = data_by_key_.find(key); it != data_by_key_.end())
      return it->second;
    MatchData d;
    d.id = static_cast<int>(g_->data.size());
    d.role = role;
    d.ctype = role == DataRole::flag ? CType::long_ : t;
    d.key = key;
    if (role != DataRole::root) {
      d.var = std::make_shared<Var>();
      d.var->role = role == DataRole::flag ? VarRole::flag : VarRole::matchdata;
      d.var->ctype = d.ctype;
      d.var->where = at;
      d.var->owner = &routine_;
      d.var->temp_index = d.id;
      routine_.slots.push_back(d.var);
    }
    g_->data.push_back(d);
    data_by_key_[key] = d.id;
    return d.id;
  }

  static std::vector<Alt> product(const std::vector<Alt> &a, const std::vector<Alt> &b) {
    std::vector<Alt> out;
    for (const Alt &x : a)
      for (const Alt &y : b) {
        Alt z = x;
        z.insert(z.end(), y.begin(), y.end());
        out.push_back(std::move(z));
      }
    return out;
  }

  std::vector<Alt> linearize(const Pattern &p, int d);
  int node(std::size_t a, std::size_t p, std::set<std::string> known);
  int add_step(MatchStep s) {
    s.id = static_cast<int>(g_->steps.size());
    g_->steps.push_back(std::move(s));
    return g_->steps.back().id;
  }
  std::set<std::string> relevant(std::size_t a, std::size_t p) const;
};

std::vector<Alt> Compiler::linearize(const Pattern &p, int d) {
  std::vector<Alt> one{Alt{}};
  return std::visit(
      [&](const auto &n) -> std::vector<Alt> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, pat::Wildcard>) {
          return one;
        } else if constexpr (std::is_same_v<T, pat::Var>) {
          MatchStep s;
          s.var = n.var;
          s.subject = d;
          return {Alt{Op{Op::var_occurrence, s}}};
        } else if constexpr (std::is_same_v<T, pat::Const>) {
          MatchStep s;
          s.kind = StepKind::test;
          s.test = TestKind::constant;
          s.subject = d;
          s.constant = n.expr;
          s.key = "eq:d" + std::to_string(d) + "==" + atom_key(*n.expr);
          return {Alt{Op{Op::test, s}}};
        } else if constexpr (std::is_same_v<T, pat::Matcher>) {
          const Binding &b = *n.matcher;
          bool fun = b.kind == BindingKind::funmatcher;
          const FormalList &outs = fun ? b.funmatcher->outputs : b.cmatcher->outputs;
          std::string base = b.name.name() + "(d" + std::to_string(d) + inputs_key(n.inputs) + ")";
          Alt alt;
          MatchStep t;
          t.kind = StepKind::test;
          t.test = TestKind::matcher;
          t.subject = d;
          t.matcher = n.matcher;
          t.funmatcher_ref = n.funmatcher_ref;
          t.inputs = n.inputs;
          t.key = "test:" + base;
          std::vector<int> outputs;
          if (fun) {
            std::vector<int> hidden;
            for (std::size_t j = 0; j < outs.size(); ++j)
              hidden.push_back(data("res" + std::to_string(j) + ":" + base, DataRole::hidden,
                                    outs[j].ctype, p.where));
            t.outputs = hidden;
            alt.push_back(Op{Op::test, t});
            if (!outs.empty()) {
              MatchStep f;
              f.kind = StepKind::fill;
              f.fill = FillKind::funmatcher;
              f.subject = d;
              f.matcher = n.matcher;
              f.sources = hidden;
              for (std::size_t j = 0; j < outs.size(); ++j)
                outputs.push_back(data("out" + std::to_string(j) + ":" + base, DataRole::extracted,
                                       outs[j].ctype, p.where));
              f.outputs = outputs;
              f.key = "fill:" + base;
              alt.push_back(Op{Op::fill, f});
            }
          } else {
            alt.push_back(Op{Op::test, t});
            if (!outs.empty()) {
              MatchStep f;
              f.kind = StepKind::fill;
              f.fill = FillKind::matcher;
              f.subject = d;
              f.matcher = n.matcher;
              f.inputs = n.inputs;
              for (std::size_t j = 0; j < outs.size(); ++j)
                outputs.push_back(data("out" + std::to_string(j) + ":" + base, DataRole::extracted,
                                       outs[j].ctype, p.where));
              f.outputs = outputs;
              f.key = "fill:" + base;
              alt.push_back(Op{Op::fill, f});
            }
          }
          std::vector<Alt> result{alt};
          for (std::size_t j = 0; j < n.subs.size(); ++j)
            result = product(result, linearize(*n.subs[j], outputs[j]));
          return result;
        } else if constexpr (std::is_same_v<T, pat::Instance>) {
          MatchStep t;
          t.kind = StepKind::test;
          t.test = TestKind::instance;
          t.subject = d;
          t.klass = n.klass;
          t.class_ref = n.class_ref;
          t.key = "isa:d" + std::to_string(d) + ":" + n.klass->name.name();
          std::vector<Alt> result{Alt{Op{Op::test, t}}};
          for (const pat::FieldPat &f : n.fields) {
            std::string key = "field:" + f.field->name.name() + "(d" + std::to_string(d) + ")";
            MatchStep s;
            s.kind = StepKind::fill;
            s.fill = FillKind::field;
            s.subject = d;
            s.field = f.field;
            s.klass = n.klass;
            s.class_ref = n.class_ref;
            s.key = key;
            s.outputs = {data(key, DataRole::extracted, CType::value, p.where)};
            result = product(result, {Alt{Op{Op::fill, s}}});
            result = product(result, linearize(*f.sub, s.outputs[0]));
          }
          return result;
        } else if constexpr (std::is_same_v<T, pat::And>) {
          int id = flag_counter_++;
          std::vector<int> flags;
          std::vector<Alt> result = one;
          for (std::size_t i = 0; i < n.conjuncts.size(); ++i) {
            result = product(result, linearize(*n.conjuncts[i], d));
            std::string fk = "flag" + std::to_string(id) + "." + std::to_string(i);
            MatchStep s;
            s.kind = StepKind::set_flag;
            s.flag = data(fk, DataRole::flag, CType::long_, p.where);
            s.key = "set:" + fk;
            flags.push_back(s.flag);
            result = product(result, {Alt{Op{Op::set_flag, s}}});
          }
          std::string ck = "flag" + std::to_string(id);
          MatchStep c;
          c.kind = StepKind::flag_conj;
          c.flags = flags;
          c.flag = data(ck, DataRole::flag, CType::long_, p.where);
          c.key = "conj:" + ck;
          return product(result, {Alt{Op{Op::flag_conj, c}}});
        } else {
          std::vector<Alt> result;
          for (const PatternPtr &s : n.disjuncts)
            for (Alt &a : linearize(*s, d))
              result.push_back(std::move(a));
          return result;
        }
      },
      p.node);
}

std::set<std::string> Compiler::relevant(std::size_t a, std::size_t p) const {
  std::set<std::string> out;
  for (std::size_t i = a; i < alts_.size(); ++i)
    for (std::size_t j = (i == a ? p : 0); j < alts_[i].size(); ++j)
      out.insert(alts_[i][j].proto.key);
  return out;
}

int Compiler::node(std::size_t a, std::size_t p, std::set<std::string> known) {
  if (a == alts_.size()) {
    if (fail_step_ < 0) {
      MatchStep s;
      s.kind = StepKind::fail;
      s.key = "fail";
      fail_step_ = add_step(s);
    }
    return fail_step_;
  }
  if (p == alts_[a].size()) {
    int c = alt_clause_[a];
    if (auto it = success_.find(c); it != success_.end())
      return it->second;
    MatchStep s;
    s.kind = StepKind::success;
    s.clause = c;
    s.key = "success:" + std::to_string(c);
    return success_[c] = add_step(s);
  }

  std::string memo;
  if (opts_.share) {
    std::set<std::string> rel = relevant(a, p);
    std::set<std::string> kept;
    for (const std::string &k : known) {
      std::string bare = k.substr(1);
      if (rel.count(bare))
        kept.insert(k);
    }
    known = std::move(kept);
    memo = std::to_string(a) + "/" + std::to_string(p);
    for (const std::string &k : known)
      memo += "|" + k;
    if (auto it = memo_.find(memo); it != memo_.end())
      return it->second;
  } else {
    known.clear();
    memo = std::to_string(a) + "/" + std::to_string(p);
    if (auto it = memo_.find(memo); it != memo_.end())
      return it->second;
  }

  const Op &op = alts_[a][p];
  const std::string &key = op.proto.key;
  int result;
  switch (op.kind) {
  case Op::test: {
    if (opts_.share && known.count("+" + key)) {
      result = node(a, p + 1, known);
      break;
    }
    if (opts_.share && known.count("-" + key)) {
      result = node(a + 1, 0, known);
      break;
    }
    auto yes = known, no = known;
    yes.insert("+" + key);
    no.insert("-" + key);
    MatchStep s = op.proto;
    int id = add_step(s);
    int then_step = node(a, p + 1, yes);
    int else_step = node(a + 1, 0, no);
    g_->steps[id].then_step = then_step;
    g_->steps[id].else_step = else_step;
    for (int o : g_->steps[id].outputs)
      if (g_->data[o].defining_step < 0)
        g_->data[o].defining_step = id;
    result = id;
    break;
  }
  default: {
    if (opts_.share && known.count("!" + key)) {
      result = node(a, p + 1, known);
      break;
    }
    auto after = known;
    if (op.kind == Op::fill && op.proto.fill == FillKind::bind) {
      // rebinding a pattern variable invalidates what was known about it
      std::string prefix = "v" + std::to_string(op.proto.var->uid) + ":";
      for (auto it = after.begin(); it != after.end();) {
        bool about_var = it->find("bind:" + prefix) == 1 || it->find("id:" + prefix) == 1;
        it = about_var ? after.erase(it) : std::next(it);
      }
    }
    after.insert("!" + key);
    MatchStep s = op.proto;
    int id = add_step(s);
    int next = node(a, p + 1, after);
    g_->steps[id].next = next;
    for (int o : g_->steps[id].outputs)
      if (g_->data[o].defining_step < 0)
        g_->data[o].defining_step = id;
    if (g_->steps[id].flag >= 0 && g_->data[g_->steps[id].flag].defining_step < 0)
      g_->data[g_->steps[id].flag].defining_step = id;
    result = id;
    break;
  }
  }
  memo_[memo] = result;
  return result;
}

std::shared_ptr<MatchGraph> Compiler::run(const form::Match &m) {
  g_ = std::make_shared<MatchGraph>();
  g_->clauses = static_cast<int>(m.clauses.size());
  int root = data("root", DataRole::root, m.subject->ctype, m.subject->where);

  for (std::size_t c = 0; c < m.clauses.size(); ++c) {
    const MatchClause &cl = m.clauses[c];
    g_->clause_vars.push_back(cl.vars);
    for (Alt &alt : linearize(*cl.pattern, root)) {
      // first occurrence of a pattern variable binds it, later ones test identity
      std::set<std::uint32_t> bound;
      for (Op &op : alt) {
        if (op.kind != Op::var_occurrence)
          continue;
        std::string v = "v" + std::to_string(op.proto.var->uid) + ":d" +
                        std::to_string(op.proto.subject);
        if (bound.insert(op.proto.var->uid).second) {
          op.kind = Op::fill;
          op.proto.kind = StepKind::fill;
          op.proto.fill = FillKind::bind;
          op.proto.key = "bind:" + v;
        } else {
          op.kind = Op::test;
          op.proto.kind = StepKind::test;
          op.proto.test = TestKind::identity;
          op.proto.key = "id:" + v;
        }
      }
      alts_.push_back(std::move(alt));
      alt_clause_.push_back(static_cast<int>(c));
    }
  }
  if (alts_.size() > 4096)
    fail(m.subject->where, "match expands to too many pattern alternatives");
  g_->entry = node(0, 0, {});
  return g_;
}

using GraphList = std::vector<std::shared_ptr<const MatchGraph>>;

void compile_in(const AstPtr &a, Routine &r, GraphList &out);

void compile_body(const std::vector<AstPtr> &body, Routine &r, GraphList &out) {
  for (const AstPtr &a : body)
    compile_in(a, r, out);
}

void compile_in(const AstPtr &a, Routine &r, GraphList &out) {
  if (!a)
    return;
  std::visit(
      [&](auto &n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, form::Match>) {
          n.graph = compile_match(n, r);
          out.push_back(n.graph);
          for (const MatchClause &c : n.clauses)
            compile_body(c.body, r, out);
        } else if constexpr (std::is_same_v<T, form::Let> || std::is_same_v<T, form::Letrec>) {
          for (const LetBinding &b : n.bindings)
            compile_in(b.init, r, out);
          compile_body(n.body, r, out);
        } else if constexpr (std::is_same_v<T, form::If>) {
          compile_in(n.then, r, out);
          compile_in(n.otherwise, r, out);
        } else if constexpr (std::is_same_v<T, form::CppIf>) {
          compile_in(n.then, r, out);
          compile_in(n.otherwise, r, out);
        } else if constexpr (std::is_same_v<T, form::Progn> || std::is_same_v<T, form::Forever> ||
                             std::is_same_v<T, form::Exit> || std::is_same_v<T, form::HostIf> ||
                             std::is_same_v<T, form::CIterInvoke>) {
          compile_body(n.body, r, out);
        } else if constexpr (std::is_same_v<T, form::Multicall>) {
          compile_body(n.body, r, out);
        } else if constexpr (std::is_same_v<T, form::Setq>) {
          compile_in(n.value, r, out);
        } else if constexpr (std::is_same_v<T, form::CompileWarning>) {
          compile_in(n.expr, r, out);
        } else if constexpr (std::is_same_v<T, form::Lambda>) {
          compile_body(n.routine->body, *n.routine, out);
        } else if constexpr (std::is_same_v<T, form::DefFunMatcher>) {
          compile_in(n.function, r, out);
        } else if constexpr (std::is_same_v<T, form::DefFunction>) {
          compile_body(n.routine->body, *n.routine, out);
        }
      },
      a->form);
}

std::string escape_label(const std::string &s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\')
      out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

std::string data_name(const MatchGraph &g, int d) {
  const MatchData &md = g.data[d];
  if (md.role == DataRole::root)
    return "root";
  return (md.role == DataRole::flag ? "flag" : "d") + std::to_string(d);
}

std::string step_label(const MatchGraph &g, const MatchStep &s) {
  std::ostringstream os;
  os << '#' << s.id << ' ';
  switch (s.kind) {
  case StepKind::test:
    switch (s.test) {
    case TestKind::matcher:
      os << "test " << s.matcher->name.name() << '(' << data_name(g, s.subject);
      for (const AstPtr &i : s.inputs)
        os << ", " << to_string(*i);
      os << ')';
      break;
    case TestKind::instance:
      os << "isa " << data_name(g, s.subject) << ' ' << s.klass->name.name();
      break;
    case TestKind::constant:
      os << data_name(g, s.subject) << " == " << to_string(*s.constant);
      break;
    case TestKind::identity:
      os << data_name(g, s.subject) << " == ?" << s.var->display_name();
      break;
    }
    break;
  case StepKind::fill:
    switch (s.fill) {
    case FillKind::matcher:
    case FillKind::funmatcher:
      os << "fill " << s.matcher->name.name() << '(' << data_name(g, s.subject) << ')';
      break;
    case FillKind::field:
      os << "fill :" << s.field->name.name() << '(' << data_name(g, s.subject) << ')';
      break;
    case FillKind::bind:
      os << '?' << s.var->display_name() << " := " << data_name(g, s.subject);
      break;
    }
    break;
  case StepKind::set_flag:
    os << "set " << data_name(g, s.flag);
    break;
  case StepKind::flag_conj:
    os << data_name(g, s.flag) << " := ";
    for (std::size_t i = 0; i < s.flags.size(); ++i)
      os << (i ? " & " : "") << data_name(g, s.flags[i]);
    break;
  case StepKind::success:
    os << "success clause " << s.clause;
    break;
  case StepKind::fail:
    os << "fail";
    break;
  }
  return os.str();
}

} // namespace

std::shared_ptr<MatchGraph> compile_match(const form::Match &m, Routine &routine,
                                          const MatchCompileOptions &opts) {
  if (!m.subject->typed)
    fail(m.subject->where, "match must be normalized before compilation");
  return Compiler(routine, opts).run(m);
}

void compile_matches(ModuleUnit &unit) {
  unit.match_graphs.clear();
  compile_body(unit.expanded.start->body, *unit.expanded.start, unit.match_graphs);
}

std::string emit_dot(const MatchGraph &g, const std::string &name) {
  std::ostringstream os;
  std::string id;
  for (char c : name)
    id += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  os << "digraph " << id << " {\n";
  os << "  node [fontname=\"monospace\"];\n";
  std::set<int> used_data;
  for (const MatchStep &s : g.steps) {
    const char *shape = "box";
    switch (s.kind) {
    case StepKind::test: shape = "diamond"; break;
    case StepKind::success: shape = "doublecircle"; break;
    case StepKind::fail: shape = "octagon"; break;
    case StepKind::set_flag:
    case StepKind::flag_conj: shape = "hexagon"; break;
    default: break;
    }
    os << "  s" << s.id << " [shape=" << shape << (s.id == g.entry ? ", penwidth=2" : "")
       << ", label=\"" << escape_label(step_label(g, s)) << "\"];\n";
  }
  for (const MatchStep &s : g.steps) {
    if (s.kind == StepKind::test) {
      os << "  s" << s.id << " -> s" << s.then_step << " [label=\"then\"];\n";
      os << "  s" << s.id << " -> s" << s.else_step << " [label=\"else\", style=dotted];\n";
    } else if (s.next >= 0) {
      os << "  s" << s.id << " -> s" << s.next << ";\n";
    }
  }
  for (const MatchStep &s : g.steps) {
    if (s.subject >= 0) {
      used_data.insert(s.subject);
      os << "  d" << s.subject << " -> s" << s.id << " [style=dashed, arrowhead=none];\n";
    }
    for (int o : s.outputs) {
      used_data.insert(o);
      os << "  s" << s.id << " -> d" << o << " [style=dashed];\n";
    }
    if (s.flag >= 0) {
      used_data.insert(s.flag);
      os << "  s" << s.id << " -> d" << s.flag << " [style=dashed];\n";
    }
  }
  for (int d : used_data) {
    const MatchData &md = g.data[d];
    os << "  d" << d << " [shape=ellipse, label=\""
       << escape_label(data_name(g, d) + " :" + std::string(keyword_name(md.ctype))) << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

std::string describe(const Thing &t) {
  if (t.ctype == CType::long_)
    return std::to_string(t.num);
  if (!t.ref)
    return "()";
  std::string s = t.ref->tag;
  if (!t.ref->text.empty())
    s += " \"" + t.ref->text + "\"";
  if (t.ref->tag == "integer_cst" || t.ref->tag == "integer")
    s += " " + std::to_string(t.ref->num);
  return "<" + s + ">";
}

MatchOutcome interpret(const MatchGraph &g, const Thing &subject, MatchSemantics &sem) {
  MatchOutcome out;
  std::vector<Thing> data(g.data.size());
  for (std::size_t i = 0; i < g.data.size(); ++i)
    data[i].ctype = g.data[i].ctype;
  data[0] = subject;
  std::map<std::uint32_t, Thing> vars;
  for (const auto &cv : g.clause_vars)
    for (const VarPtr &v : cv)
      vars[v->uid] = Thing{v->ctype, 0, nullptr};

  auto eval_inputs = [&](const std::vector<AstPtr> &in) {
    std::vector<Thing> v;
    for (const AstPtr &a : in)
      v.push_back(sem.eval(*a));
    return v;
  };

  int cur = g.entry;
  while (true) {
    const MatchStep &s = g.steps.at(cur);
    ++out.steps_run;
    if (out.steps_run > 100000)
      throw std::logic_error("match graph interpretation does not terminate");
    switch (s.kind) {
    case StepKind::test: {
      bool ok = false;
      const Thing &subj = data[s.subject];
      switch (s.test) {
      case TestKind::matcher: {
        std::vector<Thing> results;
        ok = sem.test(*s.matcher, subj, eval_inputs(s.inputs), results);
        for (std::size_t j = 0; j < s.outputs.size(); ++j)
          data[s.outputs[j]] = j < results.size() ? results[j] : Thing{g.data[s.outputs[j]].ctype, 0, nullptr};
        break;
      }
      case TestKind::instance:
        ok = sem.is_a(subj, *s.klass);
        break;
      case TestKind::constant:
        ok = sem.eval(*s.constant) == subj;
        break;
      case TestKind::identity:
        ok = vars[s.var->uid] == subj;
        break;
      }
      cur = ok ? s.then_step : s.else_step;
      break;
    }
    case StepKind::fill: {
      const Thing &subj = data[s.subject];
      switch (s.fill) {
      case FillKind::matcher: {
        auto res = sem.fill(*s.matcher, subj, eval_inputs(s.inputs));
        for (std::size_t j = 0; j < s.outputs.size(); ++j)
          data[s.outputs[j]] = j < res.size() ? res[j] : Thing{g.data[s.outputs[j]].ctype, 0, nullptr};
        break;
      }
      case FillKind::funmatcher:
        for (std::size_t j = 0; j < s.outputs.size(); ++j)
          data[s.outputs[j]] = data[s.sources[j]];
        break;
      case FillKind::field:
        data[s.outputs[0]] = sem.get_field(subj, *s.field);
        break;
      case FillKind::bind:
        vars[s.var->uid] = subj;
        break;
      }
      cur = s.next;
      break;
    }
    case StepKind::set_flag:
      data[s.flag] = Thing{CType::long_, 1, nullptr};
      cur = s.next;
      break;
    case StepKind::flag_conj: {
      long all = 1;
      for (int f : s.flags)
        all = all && data[f].num;
      data[s.flag] = Thing{CType::long_, all, nullptr};
      cur = s.next;
      break;
    }
    case StepKind::success:
      out.clause = s.clause;
      for (const VarPtr &v : g.clause_vars[s.clause])
        out.bindings[v->name] = vars[v->uid];
      return out;
    case StepKind::fail:
      return out;
    }
  }
}

} // namespace meltlite
