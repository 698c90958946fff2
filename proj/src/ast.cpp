#include "meltlite/ast.hpp"
#include "meltlite/env.hpp"

#include <sstream>

namespace meltlite {

std::uint32_t fresh_uid() {
  static std::atomic<std::uint32_t> counter{0};
  return ++counter;
}

std::string Var::display_name() const {
  if (role == VarRole::temp || !name.valid())
    return "%t" + std::to_string(temp_index);
  return name.name();
}

bool is_atom(const Ast &a) {
  return a.is<form::VarRef>() || a.is<form::LongLit>() || a.is<form::StringLit>() ||
         a.is<form::Nil>();
}

namespace {

void quote_string(std::ostream &os, const std::string &s) {
  os << '"';
  for (char c : s) {
    switch (c) {
    case '"': os << "\\\""; break;
    case '\\': os << "\\\\"; break;
    case '\n': os << "\\n"; break;
    case '\t': os << "\\t"; break;
    default: os << c;
    }
  }
  os << '"';
}

struct Printer {
  std::ostream &os;

  void seq(const std::vector<AstPtr> &v) {
    for (const AstPtr &a : v) {
      os << ' ';
      print(a);
    }
  }

  void vars(const std::vector<VarPtr> &v) {
    os << '(';
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i)
        os << ' ';
      if (v[i]->ctype != CType::value)
        os << ':' << keyword_name(v[i]->ctype) << ' ';
      os << v[i]->display_name();
    }
    os << ')';
  }

  void bindings(const std::vector<LetBinding> &bs) {
    os << " (";
    for (std::size_t i = 0; i < bs.size(); ++i) {
      if (i)
        os << ' ';
      os << '(';
      if (bs[i].var->ctype != CType::value)
        os << ':' << keyword_name(bs[i].var->ctype) << ' ';
      os << bs[i].var->display_name() << ' ';
      print(bs[i].init);
      os << ')';
    }
    os << ')';
  }

  void fields(const std::vector<FieldInit> &fs) {
    for (const FieldInit &f : fs) {
      os << " :" << f.field->name.name() << ' ';
      print(f.value);
    }
  }

  void print(const AstPtr &a) {
    if (!a) {
      os << "()";
      return;
    }
    std::visit([&](const auto &n) { node(n); }, a->form);
  }

  void node(const form::VarRef &n) { os << n.var->display_name(); }
  void node(const form::LongLit &n) { os << n.value; }
  void node(const form::StringLit &n) { quote_string(os, n.value); }
  void node(const form::Nil &) { os << "()"; }
  void node(const form::Quote &n) {
    const QuotedConst &c = n.constant;
    os << "'";
    switch (c.kind) {
    case QuotedConst::Kind::symbol: os << c.symbol.name(); break;
    case QuotedConst::Kind::keyword: os << ':' << c.symbol.name(); break;
    case QuotedConst::Kind::integer: os << c.integer; break;
    case QuotedConst::Kind::string: quote_string(os, c.text); break;
    }
  }
  void node(const form::Apply &n) {
    os << "(apply ";
    print(n.fn);
    seq(n.args);
    os << ')';
  }
  void node(const form::Send &n) {
    os << "(send ";
    print(n.selector);
    os << ' ';
    print(n.receiver);
    seq(n.args);
    os << ')';
  }
  void node(const form::Setq &n) {
    os << "(setq " << n.var->display_name() << ' ';
    print(n.value);
    os << ')';
  }
  void node(const form::Let &n) {
    os << "(let";
    bindings(n.bindings);
    seq(n.body);
    os << ')';
  }
  void node(const form::Letrec &n) {
    os << "(letrec";
    bindings(n.bindings);
    seq(n.body);
    os << ')';
  }
  void node(const form::Lambda &n) {
    os << "(lambda ";
    vars(n.routine->formals);
    seq(n.routine->body);
    os << ')';
  }
  void node(const form::If &n) {
    os << "(if ";
    print(n.test);
    os << ' ';
    print(n.then);
    if (n.otherwise) {
      os << ' ';
      print(n.otherwise);
    }
    os << ')';
  }
  void node(const form::Cond &n) {
    os << "(cond";
    for (const auto &c : n.clauses) {
      os << " (";
      if (c.test)
        print(c.test);
      else
        os << ":else";
      seq(c.body);
      os << ')';
    }
    os << ')';
  }
  void node(const form::And &n) {
    os << "(and";
    seq(n.operands);
    os << ')';
  }
  void node(const form::Or &n) {
    os << "(or";
    seq(n.operands);
    os << ')';
  }
  void node(const form::Progn &n) {
    os << "(progn";
    seq(n.body);
    os << ')';
  }
  void node(const form::Forever &n) {
    os << "(forever " << n.label->name.name();
    seq(n.body);
    os << ')';
  }
  void node(const form::Exit &n) {
    os << "(exit " << n.label->name.name();
    seq(n.body);
    os << ')';
  }
  void node(const form::Return &n) {
    os << "(return";
    seq(n.values);
    os << ')';
  }
  void node(const form::Multicall &n) {
    os << "(multicall ";
    vars(n.formals);
    os << ' ';
    print(n.call);
    seq(n.body);
    os << ')';
  }
  void node(const form::Match &n) {
    os << "(match ";
    print(n.subject);
    for (const MatchClause &c : n.clauses) {
      os << " (" << to_string(*c.pattern);
      seq(c.body);
      os << ')';
    }
    os << ')';
  }
  void node(const form::GetField &n) {
    os << (n.unsafe ? "(unsafe_get_field :" : "(get_field :") << n.field->name.name() << ' ';
    print(n.object);
    os << ')';
  }
  void node(const form::PutFields &n) {
    os << (n.unsafe ? "(unsafe_put_fields " : "(put_fields ");
    print(n.object);
    fields(n.fields);
    os << ')';
  }
  void node(const form::Instance &n) {
    os << "(instance " << n.klass->name.name();
    fields(n.fields);
    os << ')';
  }
  void node(const form::Tuple &n) {
    os << "(tuple";
    seq(n.elements);
    os << ')';
  }
  void node(const form::ListCtor &n) {
    os << "(list";
    seq(n.elements);
    os << ')';
  }
  void node(const form::CodeChunk &n) {
    os << "(code_chunk " << n.state.name() << " #{" << n.body.source_text() << "}#";
    for (const auto &r : n.refs) {
      os << " [" << r.name.name() << ' ';
      print(r.value);
      os << ']';
    }
    os << ')';
  }
  void node(const form::PrimitiveCall &n) {
    os << '(' << n.prim->name.name();
    seq(n.args);
    os << ')';
  }
  void node(const form::CIterInvoke &n) {
    os << '(' << n.iter->name.name() << " (";
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      if (i)
        os << ' ';
      print(n.inputs[i]);
    }
    os << ") ";
    vars(n.locals);
    seq(n.body);
    os << ')';
  }
  void node(const form::DebugMsg &n) {
    os << "(debug_msg ";
    print(n.value);
    os << ' ';
    quote_string(os, n.message);
    os << ')';
  }
  void node(const form::AssertMsg &n) {
    os << "(assert_msg ";
    quote_string(os, n.message);
    os << ' ';
    print(n.test);
    os << ')';
  }
  void node(const form::CompileWarning &n) {
    os << "(compile_warning ";
    quote_string(os, n.message);
    os << ' ';
    print(n.expr);
    os << ')';
  }
  void node(const form::CppIf &n) {
    os << "(cppif " << n.symbol << ' ';
    print(n.then);
    if (n.otherwise) {
      os << ' ';
      print(n.otherwise);
    }
    os << ')';
  }
  void node(const form::HostIf &n) {
    os << "(hostif ";
    quote_string(os, n.prefix);
    seq(n.body);
    os << ')';
  }
  void node(const form::CurrentEnvContainer &) {
    os << "(current_module_environment_container)";
  }
  void node(const form::ParentEnv &) { os << "(parent_module_environment)"; }
  void node(const form::DefFunction &n) {
    os << "(defun " << n.var->display_name() << ' ';
    vars(n.routine->formals);
    seq(n.routine->body);
    os << ')';
  }
  void node(const form::DefClass &n) {
    os << "(defclass " << n.klass->name.name() << " :super " << n.klass->super->name.name()
       << " :fields (";
    for (std::size_t i = 0; i < n.klass->own_fields.size(); ++i)
      os << (i ? " " : "") << n.klass->own_fields[i]->name.name();
    os << "))";
  }
  void node(const form::DefInstance &n) {
    os << "(definstance " << n.var->display_name() << ' ' << n.klass->name.name();
    fields(n.fields);
    os << ')';
  }
  void node(const form::DefSelector &n) {
    os << "(defselector " << n.var->display_name() << ' ' << n.info.name.name();
    fields(n.fields);
    os << ')';
  }
  void node(const form::DefFunMatcher &n) {
    os << "(defunmatcher " << n.def->name.name() << ' ';
    print(n.function);
    os << ')';
  }
  void node(const form::DefTemplate &n) {
    os << "(" << binding_kind_name(n.binding->kind) << ' ' << n.binding->name.name() << ')';
  }
  void node(const form::Export &n) {
    os << "(export";
    for (const ExportEntry &e : n.entries)
      os << ' ' << e.name.name();
    os << ')';
  }
};

void print_pattern(std::ostream &os, const Pattern &p) {
  std::visit(
      [&](const auto &n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, pat::Wildcard>) {
          os << "?_";
        } else if constexpr (std::is_same_v<T, pat::Var>) {
          os << '?' << n.var->display_name();
        } else if constexpr (std::is_same_v<T, pat::Const>) {
          os << to_string(*n.expr);
        } else if constexpr (std::is_same_v<T, pat::Matcher>) {
          os << "?(" << n.matcher->name.name();
          for (const AstPtr &a : n.inputs)
            os << ' ' << to_string(*a);
          for (const PatternPtr &s : n.subs) {
            os << ' ';
            print_pattern(os, *s);
          }
          os << ')';
        } else if constexpr (std::is_same_v<T, pat::Instance>) {
          os << "?(instance " << n.klass->name.name();
          for (const pat::FieldPat &f : n.fields) {
            os << " :" << f.field->name.name() << ' ';
            print_pattern(os, *f.sub);
          }
          os << ')';
        } else {
          const auto &subs = [&]() -> const std::vector<PatternPtr> & {
            if constexpr (std::is_same_v<T, pat::And>)
              return n.conjuncts;
            else
              return n.disjuncts;
          }();
          os << (std::is_same_v<T, pat::And> ? "?(and" : "?(or");
          for (const PatternPtr &s : subs) {
            os << ' ';
            print_pattern(os, *s);
          }
          os << ')';
        }
      },
      p.node);
}

} // namespace

std::string to_string(const Ast &a) {
  std::ostringstream os;
  Printer pr{os};
  std::visit([&](const auto &n) { pr.node(n); }, a.form);
  return os.str();
}

std::string to_string(const Pattern &p) {
  std::ostringstream os;
  print_pattern(os, p);
  return os.str();
}

} // namespace meltlite
